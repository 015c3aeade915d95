"""Real-coefficient Pauli sums, the Jordan-Wigner mapping and Pauli kernels.

A Pauli string on ``n`` qubits is stored as two bitmasks ``(x, z)``: qubit
``q`` carries X if only bit ``q`` of ``x`` is set, Z if only ``z``, Y if both.
Basis state ``|i>`` has qubit ``q`` in state ``(i >> q) & 1``. Text labels list
qubit 0 first, so ``"XZ"`` is X on qubit 0 and Z on qubit 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _jit
from ._jit import njit
from .errors import CapacityError, NumericalError, ShapeError

PRUNE_THRESHOLD = 1e-12
MAX_QUBITS = 24

_CHARS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}


def _popcount(a):
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


class PauliSum:
    """Sum of weighted Pauli strings with real coefficients."""

    def __init__(self, x, z, coeffs, n_qubits: int):
        self.x = np.asarray(x, dtype=np.int64).reshape(-1)
        self.z = np.asarray(z, dtype=np.int64).reshape(-1)
        self.coeffs = np.asarray(coeffs, dtype=np.float64).reshape(-1)
        self.n_qubits = int(n_qubits)
        if not (len(self.x) == len(self.z) == len(self.coeffs)):
            raise ShapeError("mask and coefficient arrays differ in length")
        if self.n_qubits > 62:
            raise CapacityError("Pauli masks support at most 62 qubits")
        if len(self.x) and (max(self.x.max(), self.z.max()) >> self.n_qubits):
            raise ShapeError("Pauli mask addresses a qubit beyond n_qubits")
        if not np.all(np.isfinite(self.coeffs)):
            raise NumericalError("non-finite Pauli coefficient")

    # construction ---------------------------------------------------------
    @classmethod
    def from_labels(cls, terms, n_qubits: int | None = None) -> "PauliSum":
        """``terms``: dict label -> coeff, or iterable of (coeff, label)."""
        items = terms.items() if isinstance(terms, dict) else [(lab, c) for c, lab in terms]
        xs, zs, cs = [], [], []
        width = n_qubits
        for label, coeff in items:
            label = label.strip().upper()
            width = len(label) if width is None else width
            if len(label) != width:
                raise ShapeError(f"label {label!r} has length {len(label)}, expected {width}")
            x = z = 0
            for q, ch in enumerate(label):
                if ch in "XY":
                    x |= 1 << q
                if ch in "ZY":
                    z |= 1 << q
                if ch not in "IXYZ":
                    raise ValueError(f"bad Pauli character {ch!r}")
            xs.append(x)
            zs.append(z)
            cs.append(float(coeff))
        return cls(xs, zs, cs, width or 0).simplify()

    @classmethod
    def identity(cls, n_qubits: int, coeff: float = 1.0) -> "PauliSum":
        return cls([0], [0], [coeff], n_qubits)

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls([], [], [], n_qubits)

    # algebra --------------------------------------------------------------
    def simplify(self, threshold: float = PRUNE_THRESHOLD) -> "PauliSum":
        if not len(self.coeffs):
            return PauliSum.zero(self.n_qubits)
        key = (self.x << self.n_qubits) | self.z
        uniq, inverse = np.unique(key, return_inverse=True)
        summed = np.bincount(inverse, weights=self.coeffs, minlength=len(uniq))
        keep = np.abs(summed) >= threshold
        mask = (1 << self.n_qubits) - 1
        return PauliSum(uniq[keep] >> self.n_qubits, uniq[keep] & mask, summed[keep], self.n_qubits)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = PauliSum.identity(self.n_qubits, float(other))
        if other.n_qubits != self.n_qubits:
            raise ShapeError("qubit counts differ")
        return PauliSum(np.concatenate([self.x, other.x]), np.concatenate([self.z, other.z]),
                        np.concatenate([self.coeffs, other.coeffs]), self.n_qubits).simplify()

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return PauliSum(self.x, self.z, self.coeffs * float(scalar), self.n_qubits)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        return f"PauliSum({len(self)} terms, {self.n_qubits} qubits)"

    @property
    def constant(self) -> float:
        sel = (self.x == 0) & (self.z == 0)
        return float(self.coeffs[sel].sum())

    def labels(self) -> list[str]:
        out = []
        for x, z in zip(self.x, self.z):
            out.append("".join(_CHARS[((x >> q) & 1, (z >> q) & 1)] for q in range(self.n_qubits)))
        return out

    def as_dict(self) -> dict:
        return dict(zip(self.labels(), self.coeffs.tolist()))

    def dump(self, path) -> None:
        lines = [f"{c:+.16e} {lab}" for c, lab in zip(self.coeffs, self.labels())]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "PauliSum":
        terms = []
        for line in Path(path).read_text().splitlines():
            if line.strip():
                c, lab = line.split()
                terms.append((float(c), lab))
        return cls.from_labels(terms)

    def to_dense(self) -> np.ndarray:
        _check_dense(self.n_qubits)
        return _dense(self.x, self.z, self.coeffs, self.n_qubits)

    def is_real(self) -> bool:
        """True if every string has an even number of Y (real matrix)."""
        return bool(np.all(_popcount(self.x & self.z) % 2 == 0))

    def diagonal_only(self) -> bool:
        return bool(np.all(self.x == 0))


def _check_dense(n):
    if n > 14:
        raise CapacityError(f"dense matrix of {n} qubits exceeds the 14-qubit dense limit")


def _phase(y):
    return (1.0, 1j, -1.0, -1j)[int(y) % 4]


# --------------------------------------------------------------------------
# kernels: <psi|P|psi>, P|psi>

if _jit.ENABLED:

    @njit
    def _parity(v):
        v ^= v >> 32
        v ^= v >> 16
        v ^= v >> 8
        v ^= v >> 4
        v ^= v >> 2
        v ^= v >> 1
        return v & 1

    @njit
    def _term_phase(x, z):
        y = x & z
        cnt = 0
        while y:
            y &= y - 1
            cnt += 1
        cnt &= 3
        if cnt == 0:
            return 1.0 + 0.0j
        if cnt == 1:
            return 1.0j
        if cnt == 2:
            return -1.0 + 0.0j
        return -1.0j

    @njit
    def _expectation_terms(xs, zs, state):
        """Per-term complex expectation values."""
        dim = state.shape[0]
        out = np.zeros(xs.shape[0], dtype=np.complex128)
        for t in range(xs.shape[0]):
            x = xs[t]
            z = zs[t]
            acc = 0.0 + 0.0j
            for i in range(dim):
                amp = state[i]
                if amp == 0:
                    continue
                val = np.conj(state[i ^ x]) * amp
                if _parity(z & i):
                    acc -= val
                else:
                    acc += val
            out[t] = _term_phase(x, z) * acc
        return out

    @njit
    def _apply_sum(xs, zs, coeffs, state):
        dim = state.shape[0]
        out = np.zeros(dim, dtype=np.complex128)
        for t in range(xs.shape[0]):
            x = xs[t]
            z = zs[t]
            ph = coeffs[t] * _term_phase(x, z)
            for i in range(dim):
                amp = state[i]
                if _parity(z & i):
                    out[i ^ x] -= ph * amp
                else:
                    out[i ^ x] += ph * amp
        return out

    @njit
    def _dense(xs, zs, coeffs, n):
        dim = 1 << n
        mat = np.zeros((dim, dim), dtype=np.complex128)
        for t in range(xs.shape[0]):
            x = xs[t]
            z = zs[t]
            ph = coeffs[t] * _term_phase(x, z)
            for i in range(dim):
                if _parity(z & i):
                    mat[i ^ x, i] -= ph
                else:
                    mat[i ^ x, i] += ph
        return mat

else:

    def _signs(z, dim):
        idx = np.arange(dim, dtype=np.uint64)
        return 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(z)) & 1)

    def _expectation_terms(xs, zs, state):
        dim = state.shape[0]
        idx = np.arange(dim)
        out = np.zeros(len(xs), dtype=np.complex128)
        for t, (x, z) in enumerate(zip(xs, zs)):
            out[t] = _phase(_popcount(x & z)) * np.sum(np.conj(state[idx ^ x]) * _signs(z, dim) * state)
        return out

    def _apply_sum(xs, zs, coeffs, state):
        dim = state.shape[0]
        idx = np.arange(dim)
        out = np.zeros(dim, dtype=np.complex128)
        for x, z, c in zip(xs, zs, coeffs):
            out[idx ^ x] += c * _phase(_popcount(x & z)) * _signs(z, dim) * state
        return out

    def _dense(xs, zs, coeffs, n):
        dim = 1 << n
        idx = np.arange(dim)
        mat = np.zeros((dim, dim), dtype=np.complex128)
        for x, z, c in zip(xs, zs, coeffs):
            mat[idx ^ x, idx] += c * _phase(_popcount(x & z)) * _signs(z, dim)
        return mat


def _check_state(h: PauliSum, state):
    state = np.ascontiguousarray(state, dtype=np.complex128)
    if state.shape != (1 << h.n_qubits,):
        raise ShapeError(f"state of length {state.shape} does not match {h.n_qubits} qubits")
    return state


def term_expectations(h: PauliSum, state) -> np.ndarray:
    """Real expectation value of each Pauli string (coefficients not applied)."""
    state = _check_state(h, state)
    vals = _expectation_terms(h.x, h.z, state)
    return vals.real


def expectation(h: PauliSum, state) -> float:
    """<psi|H|psi>; the imaginary residual must stay below 1e-10."""
    state = _check_state(h, state)
    if not len(h):
        return 0.0
    vals = _expectation_terms(h.x, h.z, state)
    total = np.dot(h.coeffs, vals)
    if abs(total.imag) > 1e-10 * max(1.0, float(np.abs(h.coeffs).sum())):
        raise NumericalError("expectation value has an imaginary part", {"imag": total.imag})
    return float(total.real)


def apply_pauli_sum(h: PauliSum, state) -> np.ndarray:
    state = _check_state(h, state)
    return _apply_sum(h.x, h.z, h.coeffs, state)


# --------------------------------------------------------------------------
# Jordan-Wigner

@dataclass(frozen=True)
class FermionHamiltonian:
    """``constant + sum h[P,Q] a+_P a_Q + 1/2 sum (PQ|RS) a+_P a+_R a_S a_Q``.

    ``two_body`` is in chemists' notation over spin orbitals. Spin orbitals
    are interleaved: ``2p`` is spatial orbital ``p`` spin up, ``2p + 1`` spin down.
    """

    constant: float
    one_body: np.ndarray
    two_body: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.one_body.shape[0]


def _ladder(modes, dagger: bool):
    """a+_p = (X_p + X_p Z_p) Z_<p / 2 and a_p = (X_p - X_p Z_p) Z_<p / 2, X^x Z^z form."""
    modes = np.asarray(modes, dtype=np.int64)
    bit = np.left_shift(1, modes)
    low = bit - 1
    x = np.stack([bit, bit], axis=-1)
    z = np.stack([low, low | bit], axis=-1)
    c = np.empty(modes.shape + (2,), dtype=np.complex128)
    c[..., 0] = 0.5
    c[..., 1] = 0.5 if dagger else -0.5
    return x, z, c


def _times(a, b):
    """Row-wise product of XZ-form term lists; shapes (m, ka) x (m, kb) -> (m, ka*kb)."""
    ax, az, ac = a
    bx, bz, bc = b
    m = ax.shape[0]
    sign = 1.0 - 2.0 * (_popcount(az[:, :, None] & bx[:, None, :]) & 1)
    x = (ax[:, :, None] ^ bx[:, None, :]).reshape(m, -1)
    z = (az[:, :, None] ^ bz[:, None, :]).reshape(m, -1)
    c = (ac[:, :, None] * bc[:, None, :] * sign).reshape(m, -1)
    return x, z, c


def _collect(x, z, c, n_qubits, threshold=PRUNE_THRESHOLD) -> PauliSum:
    x = x.reshape(-1)
    z = z.reshape(-1)
    c = c.reshape(-1)
    if not len(c):
        return PauliSum.zero(n_qubits)
    # X^x Z^z = (-i)^{#Y} * Pauli string
    c = c * np.array([1.0, -1j, -1.0, 1j])[_popcount(x & z) % 4]
    key = (x << n_qubits) | z
    uniq, inverse = np.unique(key, return_inverse=True)
    re = np.bincount(inverse, weights=c.real, minlength=len(uniq))
    im = np.bincount(inverse, weights=c.imag, minlength=len(uniq))
    scale = max(1.0, float(np.abs(re).max(initial=0.0)))
    if np.abs(im).max(initial=0.0) > 1e-10 * scale:
        raise NumericalError("operator is not Hermitian: complex Pauli coefficients",
                             {"max_imag": float(np.abs(im).max())})
    keep = np.abs(re) >= threshold
    mask = (1 << n_qubits) - 1
    return PauliSum(uniq[keep] >> n_qubits, uniq[keep] & mask, re[keep], n_qubits)


def one_body_to_pauli(h1: np.ndarray, threshold: float = 0.0) -> PauliSum:
    """Jordan-Wigner image of ``sum h[P,Q] a+_P a_Q``."""
    h1 = np.asarray(h1, dtype=float)
    n = h1.shape[0]
    p, q = np.nonzero(np.abs(h1) > threshold)
    if not len(p):
        return PauliSum.zero(n)
    x, z, c = _times(_ladder(p, True), _ladder(q, False))
    return _collect(x, z, c * h1[p, q][:, None], n)


def two_body_to_pauli(g: np.ndarray, threshold: float = 0.0) -> PauliSum:
    """Jordan-Wigner image of ``1/2 sum (PQ|RS) a+_P a+_R a_S a_Q``."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    p, q, r, s = np.nonzero(np.abs(g) > threshold)
    keep = (p != r) & (q != s)
    p, q, r, s = p[keep], q[keep], r[keep], s[keep]
    if not len(p):
        return PauliSum.zero(n)
    out = None
    for chunk in range(0, len(p), 200_000):
        sl = slice(chunk, chunk + 200_000)
        prod = _times(_ladder(p[sl], True), _ladder(r[sl], True))
        prod = _times(prod, _ladder(s[sl], False))
        x, z, c = _times(prod, _ladder(q[sl], False))
        part = _collect(x, z, c * (0.5 * g[p[sl], q[sl], r[sl], s[sl]])[:, None], n)
        out = part if out is None else out + part
    return out


def jordan_wigner(f: FermionHamiltonian) -> PauliSum:
    n = f.n_modes
    if f.two_body.shape != (n, n, n, n):
        raise ShapeError("two-body tensor does not match the one-body dimension")
    total = one_body_to_pauli(f.one_body) + two_body_to_pauli(f.two_body)
    return (total + PauliSum.identity(n, f.constant)).simplify()


def number_operator(n_qubits: int) -> PauliSum:
    return one_body_to_pauli(np.eye(n_qubits))


def ladder_terms_to_pauli(terms, n_qubits: int) -> PauliSum:
    """Jordan-Wigner image of ``sum coeff * prod(ladder ops)``.

    ``terms`` holds ``(coeff, [(mode, dagger), ...])`` pairs applied left to
    right, e.g. ``(1.0, [(0, True), (1, False)])`` is a+_0 a_1. The total must
    be Hermitian.
    """
    xs, zs, cs = [], [], []
    for coeff, ops in terms:
        prod = (np.zeros((1, 1), dtype=np.int64), np.zeros((1, 1), dtype=np.int64),
                np.full((1, 1), coeff, dtype=np.complex128))
        for mode, dagger in ops:
            if not 0 <= mode < n_qubits:
                raise ShapeError(f"mode {mode} outside {n_qubits} qubits")
            prod = _times(prod, _ladder(np.array([mode]), dagger))
        xs.append(prod[0].reshape(-1))
        zs.append(prod[1].reshape(-1))
        cs.append(prod[2].reshape(-1))
    if not xs:
        return PauliSum.zero(n_qubits)
    return _collect(np.concatenate(xs), np.concatenate(zs), np.concatenate(cs), n_qubits)
