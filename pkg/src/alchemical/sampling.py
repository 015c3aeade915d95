"""Shot-based estimation of Pauli-sum expectation values."""
from __future__ import annotations

import numpy as np

from .circuit import apply_gate
from .pauli import PauliSum, _check_state

_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]])
_TO_X = _H
_TO_Y = _H @ _SDG


def qubitwise_groups(h: PauliSum) -> list[np.ndarray]:
    """Greedy qubit-wise commuting groups of the non-identity terms.

    Terms are visited by decreasing |coefficient|; each joins the first group
    whose measurement basis agrees with it on every shared qubit.
    """
    support = h.x | h.z
    order = [t for t in np.argsort(-np.abs(h.coeffs), kind="stable") if support[t]]
    groups, bases = [], []  # bases: (x, z, support) of each group
    for t in order:
        x, z, s = int(h.x[t]), int(h.z[t]), int(support[t])
        for g, (gx, gz, gs) in enumerate(bases):
            shared = s & gs
            if ((x ^ gx) | (z ^ gz)) & shared == 0:
                groups[g].append(t)
                bases[g] = (gx | x, gz | z, gs | s)
                break
        else:
            groups.append([t])
            bases.append((x, z, s))
    return [np.array(g, dtype=np.int64) for g in groups]


def _rotate_to_z(state, gx, gz, n):
    out = state.copy()
    for q in range(n):
        xb, zb = (gx >> q) & 1, (gz >> q) & 1
        if xb and zb:
            apply_gate(out, q, _TO_Y)
        elif xb:
            apply_gate(out, q, _TO_X)
    return out


def _sample_groups(h: PauliSum, state, shots: int, rng):
    """Yield ``(terms, eigenvalues, counts)`` per measured group.

    ``eigenvalues[k, j]`` is the +-1 value of term ``terms[k]`` on the j-th
    distinct observed outcome, seen ``counts[j]`` times.
    """
    n = h.n_qubits
    idx = np.arange(1 << n, dtype=np.uint64)
    for group in qubitwise_groups(h):
        gx = int(np.bitwise_or.reduce(h.x[group]))
        gz = int(np.bitwise_or.reduce(h.z[group]))
        probs = np.abs(_rotate_to_z(state, gx, gz, n)) ** 2
        counts = rng.multinomial(shots, probs / probs.sum())
        hit = np.nonzero(counts)[0]
        support = (h.x[group] | h.z[group]).astype(np.uint64)
        parity = np.bitwise_count(idx[hit][None, :] & support[:, None]) & 1
        yield group, 1.0 - 2.0 * parity, counts[hit]


def _check_shots(shots):
    if shots < 1:
        raise ValueError("shots must be >= 1")


def sampled_terms(h: PauliSum, state, shots: int, seed=None) -> np.ndarray:
    """Shot estimate of every term's expectation (identity terms are exactly 1)."""
    _check_shots(shots)
    state = _check_state(h, state)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = np.ones(len(h))
    for group, eig, counts in _sample_groups(h, state, shots, rng):
        out[group] = eig @ counts / shots
    return out


def sampled_expectation(h: PauliSum, state, shots: int, seed=None):
    """Estimate <H> from ``shots`` measurements per qubit-wise commuting group.

    Returns ``(mean, stderr)``. The identity coefficient is added exactly.
    ``seed`` may be an int, None or a ``numpy.random.Generator``.
    """
    _check_shots(shots)
    state = _check_state(h, state)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mean = h.constant
    variance = 0.0
    for group, eig, counts in _sample_groups(h, state, shots, rng):
        values = h.coeffs[group] @ eig
        g_mean = float(values @ counts / shots)
        mean += g_mean
        if shots > 1:
            variance += float(counts @ (values - g_mean) ** 2 / (shots - 1)) / shots
    return float(mean), float(np.sqrt(variance))
