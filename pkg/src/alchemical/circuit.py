"""Hardware-efficient ansatz on an exact statevector.

Layer order: rotation layer 0, then ``depth`` repetitions of
(entangler, rotation layer). Rotations are Ry by default; ``"ryrz"`` applies
Ry then Rz on every qubit and doubles the parameter count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _jit
from ._jit import njit
from .errors import CapacityError, ShapeError
from .pauli import MAX_QUBITS

ENTANGLERS = ("full", "linear")
ROTATIONS = ("ry", "ryrz")

if _jit.ENABLED:

    @njit
    def _apply_1q(state, q, m00, m01, m10, m11):
        dim = state.shape[0]
        stride = 1 << q
        for base in range(0, dim, 2 * stride):
            for off in range(stride):
                i0 = base + off
                i1 = i0 + stride
                a0 = state[i0]
                a1 = state[i1]
                state[i0] = m00 * a0 + m01 * a1
                state[i1] = m10 * a0 + m11 * a1

    @njit
    def _apply_cx(state, control, target):
        dim = state.shape[0]
        cbit = 1 << control
        tbit = 1 << target
        for i in range(dim):
            if (i & cbit) and not (i & tbit):
                j = i | tbit
                tmp = state[i]
                state[i] = state[j]
                state[j] = tmp

else:

    def _apply_1q(state, q, m00, m01, m10, m11):
        view = state.reshape(-1, 2, 1 << q)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :].copy()
        view[:, 0, :] = m00 * a0 + m01 * a1
        view[:, 1, :] = m10 * a0 + m11 * a1

    def _apply_cx(state, control, target):
        idx = np.arange(state.shape[0])
        sel = ((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)
        i = idx[sel]
        j = i | (1 << target)
        state[i], state[j] = state[j].copy(), state[i].copy()


def apply_gate(state, qubit: int, matrix) -> None:
    """In-place single-qubit gate."""
    m = np.asarray(matrix, dtype=np.complex128)
    _apply_1q(state, qubit, m[0, 0], m[0, 1], m[1, 0], m[1, 1])


def apply_ry(state, qubit: int, theta: float) -> None:
    c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
    _apply_1q(state, qubit, complex(c), complex(-s), complex(s), complex(c))


def apply_rz(state, qubit: int, theta: float) -> None:
    ph = np.exp(-0.5j * theta)
    _apply_1q(state, qubit, ph, 0j, 0j, np.conj(ph))


def apply_cx(state, control: int, target: int) -> None:
    _apply_cx(state, control, target)


def basis_state(n_qubits: int, bits=None) -> np.ndarray:
    """Computational basis state; ``bits`` as a 0/1 string (qubit 0 first) or int. Default all ones."""
    if n_qubits > MAX_QUBITS:
        raise CapacityError(f"{n_qubits} qubits exceed the 2^{MAX_QUBITS}-amplitude statevector limit")
    if bits is None:
        index = (1 << n_qubits) - 1
    elif isinstance(bits, str):
        if len(bits) != n_qubits or set(bits) - {"0", "1"}:
            raise ShapeError(f"bitstring {bits!r} does not describe {n_qubits} qubits")
        index = sum(1 << q for q, b in enumerate(bits) if b == "1")
    else:
        index = int(bits)
    state = np.zeros(1 << n_qubits, dtype=np.complex128)
    state[index] = 1.0
    return state


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    depth: int
    entangler: str = "full"
    rotations: str = "ry"

    def __post_init__(self):
        if self.n_qubits < 1 or self.depth < 0:
            raise ValueError("need at least one qubit and a non-negative depth")
        if self.n_qubits > MAX_QUBITS:
            raise CapacityError(f"{self.n_qubits} qubits exceed the 2^{MAX_QUBITS}-amplitude limit")
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"entangler must be one of {ENTANGLERS}")
        if self.rotations not in ROTATIONS:
            raise ValueError(f"rotations must be one of {ROTATIONS}")

    @property
    def params_per_layer(self) -> int:
        return self.n_qubits * (1 if self.rotations == "ry" else 2)

    @property
    def n_params(self) -> int:
        return self.params_per_layer * (self.depth + 1)

    def cnot_pairs(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        if self.entangler == "linear":
            return [(i, i + 1) for i in range(n - 1)]
        return [(i, j) for i in range(n) for j in range(i + 1, n)]

    def _rotation_layer(self, state, theta):
        n = self.n_qubits
        for q in range(n):
            apply_ry(state, q, theta[q])
        if self.rotations == "ryrz":
            for q in range(n):
                apply_rz(state, q, theta[n + q])

    def apply(self, theta, initial=None) -> np.ndarray:
        """Statevector after the circuit; ``initial`` defaults to all ones."""
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != self.n_params:
            raise ShapeError(f"expected {self.n_params} angles, got {theta.size}")
        if initial is None or isinstance(initial, (str, int, np.integer)):
            state = basis_state(self.n_qubits, initial)
        else:
            state = np.array(initial, dtype=np.complex128)
            if state.shape != (1 << self.n_qubits,):
                raise ShapeError("initial state has the wrong dimension")
        k = self.params_per_layer
        self._rotation_layer(state, theta[:k])
        pairs = self.cnot_pairs()
        for d in range(1, self.depth + 1):
            for c, t in pairs:
                apply_cx(state, c, t)
            self._rotation_layer(state, theta[d * k:(d + 1) * k])
        return state


def apply(circuit: Circuit, theta, initial=None) -> np.ndarray:
    return circuit.apply(theta, initial)
