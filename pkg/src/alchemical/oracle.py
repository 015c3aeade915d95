"""Brute-force reference: enumerate every composition and diagonalize exactly."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .alchemy import ActiveSpace, second_quantize, spin_one_body, spin_two_body, transform_one_body, \
    transform_two_body
from .basis import BasisSet
from .errors import AlchemicalError, CapacityError, NumericalError, ParseError
from .integrals import AlchemicalIntegrals, attraction_matrix, site_charges
from .pauli import MAX_QUBITS, FermionHamiltonian, PauliSum, apply_pauli_sum, jordan_wigner
from .system import AlphaWeights, ChargeField, Scaffold

DENSE_MAX_QUBITS = 12
AGREEMENT_TOL = 1e-9
SCAN_SCHEMA = "alchemical.scan/1"
SCAN_COLUMNS = ("composition", "E_vac_hartree", "E_charged_hartree", "deltaE_hartree")
METHODS = ("auto", "dense", "iterative", "agree")


def _counts(scaffold_or_counts):
    if isinstance(scaffold_or_counts, Scaffold):
        return scaffold_or_counts.species_counts
    return [int(c) for c in scaffold_or_counts]


def compositions(scaffold_or_counts) -> list[tuple[int, ...]]:
    """Species index per site for every composition, in lexicographic order."""
    return list(itertools.product(*(range(c) for c in _counts(scaffold_or_counts))))


def enumerate_compositions(scaffold_or_counts) -> list[AlphaWeights]:
    counts = _counts(scaffold_or_counts)
    return [AlphaWeights.one_hot(counts, choice) for choice in compositions(counts)]


def composition_label(scaffold: Scaffold, choice) -> str:
    return "-".join(scaffold.sites[i].species[s] for i, s in enumerate(choice))


# ---------------------------------------------------------------------------
# ground energies


def _dense_ground(h: PauliSum) -> float:
    return float(np.linalg.eigvalsh(h.to_dense())[0])


def _iterative_ground(h: PauliSum) -> float:
    dim = 1 << h.n_qubits
    if dim < 3:
        return _dense_ground(h)
    op = LinearOperator((dim, dim), matvec=lambda v: apply_pauli_sum(h, v.reshape(-1)), dtype=np.complex128)
    v0 = np.random.default_rng(0).normal(size=dim).astype(np.complex128)
    vals = eigsh(op, k=1, which="SA", v0=v0, tol=1e-13, maxiter=100 * dim, return_eigenvectors=False)
    return float(vals[0])


def exact_ground_energy(h: PauliSum, method: str = "auto") -> float:
    """Lowest eigenvalue over the whole Fock space.

    ``auto`` is dense up to 12 qubits and Lanczos on matrix-free Pauli
    products above; ``agree`` runs both and insists they match.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    n = h.n_qubits
    if n > MAX_QUBITS:
        raise CapacityError(f"{n} qubits exceed the {MAX_QUBITS}-qubit oracle limit")
    if not len(h):
        return 0.0
    if method == "auto":
        method = "dense" if n <= DENSE_MAX_QUBITS else "iterative"
    if method == "dense":
        return _dense_ground(h)
    if method == "iterative":
        return _iterative_ground(h)
    dense, lanczos = _dense_ground(h), _iterative_ground(h)
    if abs(dense - lanczos) > AGREEMENT_TOL:
        raise NumericalError("dense and iterative ground energies disagree",
                             {"dense": dense, "iterative": lanczos})
    return dense


# ---------------------------------------------------------------------------
# scan


@dataclass(frozen=True)
class ScanRow:
    index: int
    choice: tuple
    label: str
    e_vac: float
    e_charged: float
    error: str | None = None

    @property
    def delta(self) -> float:
        return self.e_charged - self.e_vac


@dataclass(frozen=True)
class ScanTable:
    rows: tuple  # sorted by delta, then by enumeration index

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    @property
    def argmin(self) -> ScanRow:
        return self.rows[0]

    def minimizers(self, tol: float = 1e-10) -> list[ScanRow]:
        """Every composition within ``tol`` of the lowest binding energy (mirror pairs tie)."""
        best = self.rows[0].delta
        return [r for r in self.rows if r.error is None and r.delta - best <= tol]

    def by_label(self) -> dict:
        return {r.label: r for r in self.rows}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema: {SCAN_SCHEMA}\n")
            for r in self.rows:
                if r.error:
                    fh.write(f"# error {r.label}: {r.error}\n")
            w = csv.writer(fh)
            w.writerow(SCAN_COLUMNS)
            for r in self.rows:
                w.writerow([r.label, repr(r.e_vac), repr(r.e_charged), repr(r.delta)])

    @classmethod
    def read_csv(cls, path) -> "ScanTable":
        rows = []
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        reader = csv.reader(lines)
        header = next(reader, None)
        if header is None or tuple(header) != SCAN_COLUMNS:
            raise ParseError(f"expected header {','.join(SCAN_COLUMNS)}", path)
        for k, row in enumerate(reader):
            try:
                label, e_vac, e_chg, _ = row
                rows.append(ScanRow(k, (), label, float(e_vac), float(e_chg)))
            except ValueError:
                raise ParseError(f"bad scan row {row!r}", path, k + 2) from None
        return cls(tuple(rows))


def _sort_rows(rows):
    return tuple(sorted(rows, key=lambda r: (r.error is not None, r.delta if r.error is None else 0.0, r.index)))


def binding_energy_scan(ints: AlchemicalIntegrals, active: ActiveSpace, scaffold: Scaffold,
                        field: ChargeField | None = None, method: str = "auto") -> ScanTable:
    """Exact E_vac, E_charged and their difference for every one-hot composition."""
    rows = []
    for k, (choice, alpha) in enumerate(zip(compositions(scaffold), enumerate_compositions(scaffold))):
        label = composition_label(scaffold, choice)
        try:
            energies = [exact_ground_energy(jordan_wigner(second_quantize(ints, active, alpha, on, scaffold, field)),
                                            method) for on in (False, True)]
        except AlchemicalError as exc:
            rows.append(ScanRow(k, choice, label, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(ScanRow(k, choice, label, *energies))
    return ScanTable(_sort_rows(rows))


# ---------------------------------------------------------------------------
# independent single-molecule build


def single_molecule_hamiltonian(ints: AlchemicalIntegrals, active: ActiveSpace, basis: BasisSet,
                                scaffold: Scaffold, choice, field: ChargeField | None = None,
                                field_on: bool = False, charge_model: str | None = None) -> FermionHamiltonian:
    """Conventional Hamiltonian of one molecule, without any weights.

    Only the kinetic matrix and the repulsion tensor are taken from ``ints``;
    nuclear and field attraction are recomputed from the chosen charges, and
    the nuclear constant is summed pair by pair.
    """
    model = charge_model or ints.charge_model
    charges = site_charges(scaffold, model)
    z = np.array([charges[i][s] for i, s in enumerate(choice)])
    centers = scaffold.positions_bohr
    h = ints.T + attraction_matrix(basis, centers, z)
    for i, s in enumerate(choice):
        h = h + ints.V_ecp[i][s]
    constant = 0.0
    for i in range(len(z)):
        for j in range(i + 1, len(z)):
            constant += z[i] * z[j] / np.linalg.norm(centers[i] - centers[j])
    if field_on and field is not None and len(field):
        h = h + attraction_matrix(basis, field.positions_bohr, field.charges)
        for i in range(len(z)):
            for pos, q in zip(field.positions_bohr, field.charges):
                constant += z[i] * q / np.linalg.norm(centers[i] - pos)
    one = transform_one_body(h, active)
    two = transform_two_body(ints.g, active)
    return FermionHamiltonian(float(constant), spin_one_body(one), spin_two_body(two))


# ---------------------------------------------------------------------------
# selection


@dataclass(frozen=True)
class Candidate:
    choice: tuple
    label: str
    weight: float


def joint_weights(alpha: AlphaWeights) -> np.ndarray:
    """Product of per-site weights for every composition, in enumeration order."""
    return np.array([math.prod(alpha[i][s] for i, s in enumerate(c)) for c in compositions(alpha.counts)])


def select_species(alpha: AlphaWeights, threshold: float = 0.1, scaffold: Scaffold | None = None) -> list[Candidate]:
    """Compositions whose joint weight reaches ``threshold``, heaviest first."""
    out = []
    for choice, w in zip(compositions(alpha.counts), joint_weights(alpha)):
        if w >= threshold:
            label = composition_label(scaffold, choice) if scaffold is not None else "-".join(map(str, choice))
            out.append(Candidate(choice, label, float(w)))
    return sorted(out, key=lambda c: -c.weight)


def per_site_argmax(alpha: AlphaWeights) -> tuple:
    return tuple(int(np.argmax(v)) for v in alpha.values)


def write_scan(table: ScanTable, path) -> Path:
    table.write_csv(path)
    return Path(path)
