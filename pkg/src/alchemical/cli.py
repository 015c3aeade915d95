"""Command line: ``integrals``, ``run``, ``scan`` and ``report``.

Exit codes: 0 success, 2 bad input (parse, shape, missing file), 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import shutil
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, _jit
from .alchemy import build_active_space, overlap_rank
from .basis import BasisSet, build_union_basis
from .circuit import Circuit
from .config import RunConfig, read_config, write_config
from .errors import (AlchemicalError, DegenerateBasisError, NumericalError, ParseError,
                     SingularGeometryError)
from .integrals import AlchemicalIntegrals, compute_all
from .oracle import ScanTable, binding_energy_scan, composition_label, joint_weights, compositions, \
    per_site_argmax, select_species
from .system import ChargeField, Scaffold, read_charge_field, read_scaffold
from .vqe import AlchemicalProblem, optimize

log = logging.getLogger("alchemical")

TRACE_SCHEMA = "alchemical.trace/1"
REPORT_SCHEMA = "alchemical.report/1"
EVOLUTION_SCHEMA = "alchemical.alpha_evolution/1"
DISTRIBUTION_SCHEMA = "alchemical.distribution/1"
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
_NUMERICAL = (NumericalError, DegenerateBasisError, SingularGeometryError, FloatingPointError)


@dataclass(frozen=True)
class Inputs:
    config: RunConfig
    base: Path
    scaffold: Scaffold
    field: ChargeField
    basis: BasisSet

    @property
    def scaffold_path(self) -> Path:
        return self.config.path(self.config.scaffold, self.base)

    @property
    def charges_path(self) -> Path | None:
        return self.config.path(self.config.charges, self.base)


def load_inputs(config_path, seed=None, shots=None) -> Inputs:
    config, base = read_config(config_path)
    overrides = {k: v for k, v in (("seed", seed), ("shots", shots)) if v is not None}
    config = replace(config, **overrides)
    scaffold = read_scaffold(config.path(config.scaffold, base))
    if config.species:
        allowed = tuple(s.strip() for s in config.species.split(",") if s.strip())
        scaffold = Scaffold.from_sites(scaffold.positions, [allowed] * scaffold.n_sites)
    charges = config.path(config.charges, base)
    field = read_charge_field(charges) if charges else ChargeField()
    return Inputs(config, base, scaffold, field, build_union_basis(scaffold))


def _fresh_integrals(inp: Inputs) -> AlchemicalIntegrals:
    ecp = inp.config.path(inp.config.ecp, inp.base)
    t0 = time.perf_counter()
    ints = compute_all(inp.basis, inp.scaffold, inp.field, inp.config.charge_model, ecp)
    log.info("integrals over %d functions in %.1f s", len(inp.basis), time.perf_counter() - t0)
    return ints


def cached_integrals(inp: Inputs, cache: Path) -> AlchemicalIntegrals:
    """Reuse ``cache`` when it was built for the same basis, field and charge model."""
    if cache.exists():
        ints = AlchemicalIntegrals.load(cache)
        if (ints.matches(inp.basis, inp.field) and ints.charge_model == inp.config.charge_model
                and ints.ecp_supplied == bool(inp.config.ecp)):
            log.info("reusing integral cache %s", cache)
            return ints
        log.info("integral cache %s is stale; recomputing", cache)
    ints = _fresh_integrals(inp)
    cache.parent.mkdir(parents=True, exist_ok=True)
    ints.save(cache)
    return ints


def _out_dir(args, inp: Inputs) -> Path:
    out = Path(args.out) if args.out else Path("runs") / Path(args.config).stem
    out.mkdir(parents=True, exist_ok=True)
    return out


def _column_names(scaffold: Scaffold) -> list[str]:
    return [f"site{i}_{s}" for i, site in enumerate(scaffold.sites) for s in site.species]


# ---------------------------------------------------------------------------
# subcommands


def cmd_integrals(args) -> int:
    inp = load_inputs(args.config, args.seed, args.shots)
    out = _out_dir(args, inp)
    ints = _fresh_integrals(inp)
    path = out / "integrals.alch"
    ints.save(path)
    rank = overlap_rank(ints.S, inp.config.tau)
    print(f"basis functions: {ints.n_basis}")
    print(f"rank(S, tau={inp.config.tau:g}): {rank}")
    print(f"external charges: {len(inp.field)}")
    print(f"archive: {path}")
    return 0


def _snapshot(inp: Inputs, out: Path) -> None:
    """Copy the inputs next to a config that points at the copies."""
    folder = out / "inputs"
    folder.mkdir(exist_ok=True)
    changes = {"scaffold": f"inputs/{inp.scaffold_path.name}"}
    shutil.copyfile(inp.scaffold_path, folder / inp.scaffold_path.name)
    if inp.charges_path is not None:
        shutil.copyfile(inp.charges_path, folder / inp.charges_path.name)
        changes["charges"] = f"inputs/{inp.charges_path.name}"
    ecp = inp.config.path(inp.config.ecp, inp.base)
    if ecp is not None:
        shutil.copyfile(ecp, folder / ecp.name)
        changes["ecp"] = f"inputs/{ecp.name}"
    write_config(replace(inp.config, **changes), out / "config.ini")


def _write_trace(trace, path: Path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"schema": TRACE_SCHEMA}) + "\n")
        for rec in trace.records:
            fh.write(json.dumps(rec) + "\n")


def _write_evolution(trace, scaffold: Scaffold, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {EVOLUTION_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["iteration", "restart"] + _column_names(scaffold))
        for rec in trace.records:
            w.writerow([rec["iteration"], rec["restart"]] + [repr(x) for site in rec["alpha"] for x in site])


def _write_distribution(initial, final, scaffold: Scaffold, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {DISTRIBUTION_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["stage"] + _column_names(scaffold))
        for stage, alpha in (("initial", initial), ("final", final)):
            w.writerow([stage] + [repr(float(x)) for x in alpha.flat()])


def cmd_run(args) -> int:
    inp = load_inputs(args.config, args.seed, args.shots)
    out = _out_dir(args, inp)
    cfg = inp.config.effective
    _snapshot(inp, out)
    ints = cached_integrals(inp, out / "integrals.alch")
    active = build_active_space(ints, None, cfg.active_orbitals, cfg.tau)
    circuit = Circuit(active.n_qubits, cfg.depth, cfg.entangler, cfg.rotations)
    problem = AlchemicalProblem.build(ints, active, inp.scaffold, inp.field, circuit)
    opt = inp.config.optimizer()
    log.info("optimizing %d angles and %d weights on %d qubits", circuit.n_params, problem.n_alpha,
             circuit.n_qubits)
    t0 = time.perf_counter()
    theta, alpha, trace = optimize(problem, opt)
    elapsed = time.perf_counter() - t0
    initial = type(alpha).uniform(problem.counts)
    _write_trace(trace, out / "trace.jsonl")
    _write_evolution(trace, inp.scaffold, out / "alpha_evolution.csv")
    _write_distribution(initial, alpha, inp.scaffold, out / "distribution.csv")
    chosen = per_site_argmax(alpha)
    candidates = select_species(alpha, cfg.threshold, inp.scaffold)
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "backend": _jit.backend(),
        "objective": opt.objective,
        "scale": opt.scale,
        "n_qubits": circuit.n_qubits,
        "n_angles": int(np.size(theta)),
        "species": [list(s) for s in inp.scaffold.species],
        "alpha_initial": [v.tolist() for v in initial.values],
        "alpha_opt": [v.tolist() for v in alpha.values],
        "theta_opt": np.asarray(theta).tolist(),
        "selected": composition_label(inp.scaffold, chosen),
        "candidates": [{"composition": c.label, "weight": c.weight} for c in candidates],
        "joint_weights": {composition_label(inp.scaffold, c): float(w)
                          for c, w in zip(compositions(inp.scaffold), joint_weights(alpha))},
        "cost": trace.cost,
        "binding_energy_hartree": trace.delta_e,
        "converged": trace.converged,
        "message": trace.message,
        "iterations": len(trace.records),
        "charge_model": ints.charge_model,
        "ecp_supplied": ints.ecp_supplied,
        "elapsed_seconds": elapsed,
    }
    if not ints.ecp_supplied:
        report["approximation"] = "no core potentials: species differ only through their point nuclear charge"
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    status = "converged" if trace.converged else "UNCONVERGED (best point kept)"
    print(f"selected {report['selected']}  binding energy {trace.delta_e:.8f} Eh  {status}")
    for c in candidates:
        print(f"  {c.label:10s} {c.weight:.4f}")
    print(f"run directory: {out}")
    return 0


def cmd_scan(args) -> int:
    inp = load_inputs(args.config, args.seed, args.shots)
    out = _out_dir(args, inp)
    cfg = inp.config
    ints = cached_integrals(inp, out / "integrals.alch")
    active = build_active_space(ints, None, cfg.active_orbitals, cfg.tau)
    table = binding_energy_scan(ints, active, inp.scaffold, inp.field)
    table.write_csv(out / "scan.csv")
    print(f"{'composition':12s} {'E_vac':>16s} {'E_charged':>16s} {'deltaE':>14s}")
    for r in table:
        note = f"  ({r.error})" if r.error else ""
        print(f"{r.label:12s} {r.e_vac:16.8f} {r.e_charged:16.8f} {r.delta:14.8f}{note}")
    print(f"scan: {out / 'scan.csv'}")
    return 0


def read_trace(path: Path) -> tuple[list, int]:
    """Records of a trace file and the number of malformed lines skipped."""
    records, bad = [], 0
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                bad += 1
                continue
            if not isinstance(rec, dict):
                bad += 1
            elif "schema" not in rec:
                records.append(rec)
    return records, bad


def agreement(report: dict, table: ScanTable | None, tol: float = 1e-10) -> str:
    if table is None:
        return "n/a"
    best = {r.label for r in table.minimizers(tol)}
    return "true" if report.get("selected") in best else "false"


def cmd_report(args) -> int:
    run = Path(args.run_dir)
    missing = [name for name in ("report.json", "trace.jsonl") if not (run / name).exists()]
    for name in missing:
        print(f"missing: {run / name}")
    if "report.json" in missing:
        return EXIT_INPUT
    try:
        report = json.loads((run / "report.json").read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed report: {exc}", run / "report.json") from None
    scan_path = run / "scan.csv"
    table = ScanTable.read_csv(scan_path) if scan_path.exists() else None
    if "trace.jsonl" not in missing:
        records, bad = read_trace(run / "trace.jsonl")
        print(f"trace: {len(records)} records" + (f", {bad} malformed lines skipped" if bad else ""))
        if bad:
            log.warning("%d malformed trace lines skipped", bad)
    print(f"{'site':6s} {'species':8s} {'initial':>9s} {'final':>9s}")
    for i, names in enumerate(report["species"]):
        for s, name in enumerate(names):
            print(f"{i:<6d} {name:8s} {report['alpha_initial'][i][s]:9.4f} {report['alpha_opt'][i][s]:9.4f}")
    print(f"selected: {report['selected']}")
    for c in report.get("candidates", []):
        print(f"  candidate {c['composition']:10s} {c['weight']:.4f}")
    print(f"binding energy (cost / f): {report['binding_energy_hartree']:.8f} Eh")
    print(f"converged: {str(report.get('converged', False)).lower()}")
    if table is not None:
        row = table.by_label().get(report["selected"])
        if row is not None:
            print(f"scan deltaE of selection: {row.delta:.8f} Eh")
        print("scan minimum: " + ", ".join(f"{r.label} {r.delta:.8f}" for r in table.minimizers()))
    print(f"agreement: {agreement(report, table)}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alchemical", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, text in (("integrals", cmd_integrals, "compute and cache the integral archive"),
                             ("run", cmd_run, "joint optimization of angles and weights"),
                             ("scan", cmd_scan, "exact binding energy of every composition")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="run config (INI, [run] section)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--shots", type=int, help="override the config shots (0 = exact)")
        p.add_argument("--out", help="output directory (default runs/<config name>)")
        p.set_defaults(func=func)
    p = sub.add_parser("report", help="summarize a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (AlchemicalError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
