"""Time the hot kernels under numba and under the numpy fallback.

The backend is fixed at import time, so each one runs in a child process.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workload(repeat: int) -> dict:
    import numpy as np

    from alchemical import _jit
    from alchemical.basis import build_union_basis
    from alchemical.circuit import Circuit
    from alchemical.integrals import eri_tensor, overlap_matrix
    from alchemical.pauli import PauliSum, apply_pauli_sum, expectation
    from alchemical.system import Scaffold

    sc = Scaffold.from_sites([(0, 0, -1.07), (0, 0, 1.07)], [("H", "Li"), ("H", "Li")])
    basis = build_union_basis(sc)
    circuit = Circuit(12, 3)
    theta = np.linspace(0.1, 2.0, circuit.n_params)
    rng = np.random.default_rng(0)
    h = PauliSum.from_labels([(float(rng.normal()), "".join(rng.choice(list("IXYZ"), 12))) for _ in range(300)])
    state = circuit.apply(theta)

    cases = {
        "overlap": lambda: overlap_matrix(basis),
        "eri_tensor": lambda: eri_tensor(basis),
        "circuit_12q": lambda: circuit.apply(theta),
        "expectation_12q": lambda: expectation(h, state),
        "apply_sum_12q": lambda: apply_pauli_sum(h, state),
    }
    out = {"backend": _jit.backend(), "kernels": {}}
    for name, fn in cases.items():
        first = _best(fn, 1)  # includes numba compilation
        out["kernels"][name] = {"first": first, "best": _best(fn, repeat)}
    return out


def run_backend(flag: str, repeat: int) -> dict:
    env = {**os.environ, "ALCHEMICAL_NUMBA": flag}
    proc = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description="compare the numba and numpy kernel backends")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)
    if args.child:
        print(json.dumps(workload(args.repeat)))
        return
    fast, plain = run_backend("1", args.repeat), run_backend("0", args.repeat)
    print(f"backends: {fast['backend']} vs {plain['backend']}")
    print(f"{'kernel':16s} {'numba first':>12s} {'numba best':>11s} {'numpy best':>11s} {'speedup':>8s}")
    for name, f in fast["kernels"].items():
        p = plain["kernels"][name]
        print(f"{name:16s} {f['first']:12.4f} {f['best']:11.4f} {p['best']:11.4f} {p['best'] / f['best']:7.1f}x")


if __name__ == "__main__":
    main()
