"""Alpha-dependent electronic Hamiltonian in a frozen orthonormal active space."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBasisError, ShapeError, SingularGeometryError
from .integrals import AlchemicalIntegrals, site_charges
from .pauli import FermionHamiltonian
from .system import AlphaWeights, ChargeField, Scaffold

DEFAULT_TAU = 1e-8
_COINCIDENT = 1e-8  # bohr


def _check_alpha(ints: AlchemicalIntegrals, alpha: AlphaWeights):
    if alpha.counts != ints.counts:
        raise ShapeError(f"weights layout {alpha.counts} does not match integrals {ints.counts}")


def core_matrix(ints: AlchemicalIntegrals, alpha: AlphaWeights, field_on: bool = False) -> np.ndarray:
    """h(alpha) = T + sum_I,s alpha[I][s] (V_en + V_ecp) [+ V_eq]."""
    _check_alpha(ints, alpha)
    h = ints.T.copy()
    for i, weights in enumerate(alpha.values):
        for s, w in enumerate(weights):
            if w != 0.0:
                h += w * (ints.V_en[i][s] + ints.V_ecp[i][s])
    if field_on:
        h += ints.V_eq
    return h


def mean_site_charges(alpha: AlphaWeights, charges) -> np.ndarray:
    return np.array([float(np.dot(w, z)) for w, z in zip(alpha.values, charges)])


def site_potentials(scaffold: Scaffold, field: ChargeField) -> np.ndarray:
    """Electrostatic potential of the external charges at every site (hartree / e)."""
    sites = scaffold.positions_bohr
    if not len(field):
        return np.zeros(len(sites))
    d = np.linalg.norm(sites[:, None, :] - field.positions_bohr[None, :, :], axis=-1)
    if np.any(d < _COINCIDENT):
        i, k = np.argwhere(d < _COINCIDENT)[0]
        raise SingularGeometryError(f"external charge {k} sits on site {i}")
    return (field.charges[None, :] / d).sum(axis=1)


def inverse_site_distances(scaffold: Scaffold) -> np.ndarray:
    """1/|R_I - R_J| for I != J, zero on the diagonal."""
    sites = scaffold.positions_bohr
    d = np.linalg.norm(sites[:, None, :] - sites[None, :, :], axis=-1)
    off = ~np.eye(len(sites), dtype=bool)
    if np.any(d[off] < _COINCIDENT):
        i, j = np.argwhere(off & (d < _COINCIDENT))[0]
        raise SingularGeometryError(f"sites {i} and {j} coincide")
    inv = np.zeros_like(d)
    inv[off] = 1.0 / d[off]
    return inv


def nuclear_terms(scaffold: Scaffold, alpha: AlphaWeights, field: ChargeField | None = None,
                  charge_model: str = "all_electron", charges=None) -> tuple[float, float]:
    """(V_nn, V_nq) with site charges mixed as Zbar_I = sum_s alpha[I][s] Z_s.

    V_nn = sum_{I<J} Zbar_I Zbar_J / R_IJ and V_nq = sum_I Zbar_I phi_I, where
    phi_I is the external potential at site I.
    """
    alpha.check_layout(scaffold)
    field = field if field is not None else ChargeField()
    charges = site_charges(scaffold, charge_model) if charges is None else charges
    zbar = mean_site_charges(alpha, charges)
    inv = inverse_site_distances(scaffold)
    v_nn = 0.5 * float(zbar @ inv @ zbar)
    v_nq = float(zbar @ site_potentials(scaffold, field))
    return v_nn, v_nq


def _fix_signs(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Make the first non-negligible component of each column positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        nz = np.nonzero(np.abs(col) > tol)[0]
        if len(nz) and col[nz[0]] < 0:
            out[:, k] = -col
    return out


def orthogonalize(S: np.ndarray, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Canonical orthogonalization: kept eigenvectors of S scaled by lambda^-1/2.

    Columns follow descending eigenvalue; eigenvalues below ``tau`` are dropped.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    S = np.asarray(S, dtype=float)
    w, v = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    keep = w >= tau
    if not np.any(keep):
        raise DegenerateBasisError(f"all overlap eigenvalues fall below tau={tau}")
    return _fix_signs(v[:, keep]) / np.sqrt(w[keep])


def overlap_rank(S: np.ndarray, tau: float = DEFAULT_TAU) -> int:
    return int(np.sum(np.linalg.eigvalsh(S) >= tau))


@dataclass(frozen=True)
class ActiveSpace:
    """Frozen orthonormal orbitals (columns of ``X``) spanning the qubit register."""

    X: np.ndarray  # N x K orbital coefficients, X^T S X = 1
    orbital_energies: np.ndarray
    reference: AlphaWeights
    tau: float

    @property
    def n_orbitals(self) -> int:
        return self.X.shape[1]

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_orbitals

    @property
    def n_qubits(self) -> int:
        return self.n_spin_orbitals


def build_active_space(ints: AlchemicalIntegrals, reference: AlphaWeights | None = None,
                       n_orbitals: int | None = None, tau: float = DEFAULT_TAU) -> ActiveSpace:
    """Lowest ``n_orbitals`` eigenvectors of the vacuum core matrix at ``reference``.

    The reference defaults to uniform weights. The orbitals are frozen for the
    whole optimization, which keeps the Hamiltonian affine in the weights.
    """
    reference = reference if reference is not None else AlphaWeights.uniform(ints.counts)
    x_full = orthogonalize(ints.S, tau)
    rank = x_full.shape[1]
    k = rank if n_orbitals is None else int(n_orbitals)
    if not 1 <= k <= rank:
        raise ValueError(f"active space of {k} orbitals requested but rank(S, tau) = {rank}")
    h = x_full.T @ core_matrix(ints, reference, field_on=False) @ x_full
    e, u = np.linalg.eigh(0.5 * (h + h.T))
    coeffs = _fix_signs(x_full @ u[:, :k])
    return ActiveSpace(coeffs, e[:k], reference, tau)


def transform_one_body(mat: np.ndarray, active: ActiveSpace) -> np.ndarray:
    out = active.X.T @ mat @ active.X
    return 0.5 * (out + out.T)


def transform_two_body(g: np.ndarray, active: ActiveSpace) -> np.ndarray:
    c = active.X
    out = np.einsum("pqrs,pi->iqrs", g, c, optimize=True)
    out = np.einsum("iqrs,qj->ijrs", out, c, optimize=True)
    out = np.einsum("ijrs,rk->ijks", out, c, optimize=True)
    return np.einsum("ijks,sl->ijkl", out, c, optimize=True)


def spin_one_body(h: np.ndarray) -> np.ndarray:
    """Interleaved spin-orbital expansion: index 2p + sigma."""
    return np.kron(h, np.eye(2))


_SPIN_DELTA = np.einsum("ab,cd->abcd", np.eye(2), np.eye(2))


def spin_two_body(g: np.ndarray) -> np.ndarray:
    """(PQ|RS) = (pq|rs) when spins of P,Q and of R,S match."""
    return np.kron(g, _SPIN_DELTA)


def second_quantize(ints: AlchemicalIntegrals, active: ActiveSpace, alpha: AlphaWeights,
                    field_on: bool = False, scaffold: Scaffold | None = None,
                    field: ChargeField | None = None) -> FermionHamiltonian:
    """Spin-orbital Hamiltonian at ``alpha`` in the frozen active space.

    The constant is V_nn (+ V_nq when ``field_on``); it needs ``scaffold`` and
    ``field`` and is zero when they are omitted.
    """
    h = transform_one_body(core_matrix(ints, alpha, field_on), active)
    g = transform_two_body(ints.g, active)
    constant = 0.0
    if scaffold is not None:
        v_nn, v_nq = nuclear_terms(scaffold, alpha, field, charges=ints.Znuc)
        constant = v_nn + (v_nq if field_on else 0.0)
    return FermionHamiltonian(constant, spin_one_body(h), spin_two_body(g))


@dataclass(frozen=True)
class HamiltonianParts:
    """Active-space pieces from which any H(alpha) is an affine combination.

    ``one_body_base`` holds T, ``site_blocks[I][s]`` holds V_en + V_ecp of
    species s at site I, ``field_block`` holds V_eq. All spatial, K x K.
    """

    one_body_base: np.ndarray
    site_blocks: list
    field_block: np.ndarray
    two_body: np.ndarray
    site_charges: list
    inverse_distances: np.ndarray
    site_potentials: np.ndarray


def hamiltonian_parts(ints: AlchemicalIntegrals, active: ActiveSpace, scaffold: Scaffold,
                      field: ChargeField | None = None) -> HamiltonianParts:
    field = field if field is not None else ChargeField()
    blocks = [[transform_one_body(ints.V_en[i][s] + ints.V_ecp[i][s], active) for s in range(len(z))]
              for i, z in enumerate(ints.Znuc)]
    return HamiltonianParts(
        transform_one_body(ints.T, active),
        blocks,
        transform_one_body(ints.V_eq, active),
        transform_two_body(ints.g, active),
        [np.asarray(z, dtype=float) for z in ints.Znuc],
        inverse_site_distances(scaffold),
        site_potentials(scaffold, field),
    )
