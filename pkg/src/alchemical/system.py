"""Scaffolds, alchemical weights and external charge fields.

Coordinates are read and stored in angstrom; ``*_bohr`` accessors give the
atomic-unit values used by every numerical routine.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParseError, ShapeError, UnsupportedSpeciesError

BOHR_IN_ANGSTROM = 0.52917721092
ANGSTROM_TO_BOHR = 1.0 / BOHR_IN_ANGSTROM


def _known_species():
    from .basis import STO3G_ELEMENTS

    return STO3G_ELEMENTS


@dataclass(frozen=True)
class Site:
    position: tuple[float, float, float]
    species: tuple[str, ...]


@dataclass(frozen=True)
class Scaffold:
    """Atomic sites and the species allowed at each of them."""

    sites: tuple[Site, ...]

    def __post_init__(self):
        if not self.sites:
            raise ValueError("scaffold needs at least one site")
        known = _known_species()
        for i, site in enumerate(self.sites):
            if not site.species:
                raise ValueError(f"site {i} has no allowed species")
            if len(set(site.species)) != len(site.species):
                raise ValueError(f"site {i} lists a species twice: {site.species}")
            for s in site.species:
                if s not in known:
                    raise UnsupportedSpeciesError(f"site {i}: no STO-3G data for {s!r}")
            if not np.all(np.isfinite(site.position)):
                raise ValueError(f"site {i} has a non-finite position")

    @classmethod
    def from_sites(cls, positions: Sequence[Sequence[float]], species: Sequence[Sequence[str]]):
        if len(positions) != len(species):
            raise ShapeError("positions and species lists differ in length")
        return cls(tuple(Site(tuple(float(c) for c in p), tuple(s)) for p, s in zip(positions, species)))

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def species(self) -> list[tuple[str, ...]]:
        return [s.species for s in self.sites]

    @property
    def species_counts(self) -> list[int]:
        return [len(s.species) for s in self.sites]

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.sites], dtype=float)

    @property
    def positions_bohr(self) -> np.ndarray:
        return self.positions * ANGSTROM_TO_BOHR

    def translated(self, shift_angstrom) -> "Scaffold":
        shift = np.asarray(shift_angstrom, dtype=float)
        return Scaffold.from_sites(self.positions + shift, self.species)


@dataclass(frozen=True)
class ChargeField:
    """External point charges (positions in angstrom, charges in units of e)."""

    positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    charges: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        q = np.asarray(self.charges, dtype=float).reshape(-1)
        if len(pos) != len(q):
            raise ShapeError("charge positions and values differ in length")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(q))):
            raise ValueError("charge field contains non-finite values")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "charges", q)

    def __len__(self):
        return len(self.charges)

    @property
    def positions_bohr(self) -> np.ndarray:
        return self.positions * ANGSTROM_TO_BOHR

    def scaled(self, factor: float) -> "ChargeField":
        return ChargeField(self.positions.copy(), self.charges * factor)

    def translated(self, shift_angstrom) -> "ChargeField":
        return ChargeField(self.positions + np.asarray(shift_angstrom, dtype=float), self.charges.copy())


class AlphaWeights:
    """Per-site simplex weights over the allowed species."""

    def __init__(self, values: Sequence[Sequence[float]], tol: float = 1e-10, validate: bool = True):
        self.values = [np.array(v, dtype=float) for v in values]
        for i, v in enumerate(self.values):
            if v.ndim != 1 or v.size == 0:
                raise ShapeError(f"site {i}: weights must be a non-empty vector")
            if not validate:
                continue
            if np.any(v < -tol) or np.any(v > 1 + tol):
                raise ValueError(f"site {i}: weights outside [0, 1]: {v}")
            if abs(v.sum() - 1.0) > tol:
                raise ValueError(f"site {i}: weights sum to {v.sum():.12g}, not 1")

    @classmethod
    def uniform(cls, counts: Sequence[int]) -> "AlphaWeights":
        return cls([np.full(n, 1.0 / n) for n in counts])

    @classmethod
    def one_hot(cls, counts: Sequence[int], choice: Sequence[int]) -> "AlphaWeights":
        vals = []
        for n, c in zip(counts, choice):
            v = np.zeros(n)
            v[c] = 1.0
            vals.append(v)
        return cls(vals)

    @classmethod
    def from_flat(cls, flat, counts: Sequence[int], tol: float = 1e-10, validate: bool = True) -> "AlphaWeights":
        flat = np.asarray(flat, dtype=float)
        if flat.size != sum(counts):
            raise ShapeError(f"expected {sum(counts)} weights, got {flat.size}")
        return cls(np.split(flat, np.cumsum(counts)[:-1]), tol=tol, validate=validate)

    @property
    def counts(self) -> list[int]:
        return [v.size for v in self.values]

    def flat(self) -> np.ndarray:
        return np.concatenate(self.values)

    def check_layout(self, scaffold: Scaffold):
        if self.counts != scaffold.species_counts:
            raise ShapeError(f"weights layout {self.counts} does not match scaffold {scaffold.species_counts}")

    def __getitem__(self, site):
        return self.values[site]

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        inner = ", ".join(np.array2string(v, precision=4) for v in self.values)
        return f"AlphaWeights([{inner}])"


def _data_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def read_scaffold(path) -> Scaffold:
    """Parse ``x y z species1,species2,...`` lines (angstrom)."""
    positions, species = [], []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise ParseError("expected 'x y z species1,species2,...'", path, lineno)
        try:
            xyz = [float(p) for p in parts[:3]]
        except ValueError:
            raise ParseError(f"bad coordinate in {line!r}", path, lineno) from None
        names = tuple(s.strip() for s in parts[3].split(",") if s.strip())
        if not names:
            raise ParseError("no species listed", path, lineno)
        unknown = [s for s in names if s not in _known_species()]
        if unknown:
            raise ParseError(f"unsupported species {unknown}", path, lineno)
        positions.append(xyz)
        species.append(names)
    if not positions:
        raise ParseError("scaffold file has no sites", path)
    try:
        return Scaffold.from_sites(positions, species)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None


def read_charge_field(path) -> ChargeField:
    """Parse ``x y z q`` lines (angstrom, e). An empty file is the vacuum."""
    rows = []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise ParseError("expected 'x y z q'", path, lineno)
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"bad number in {line!r}", path, lineno) from None
        if not np.all(np.isfinite(row)):
            raise ParseError("non-finite value", path, lineno)
        rows.append(row)
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    return ChargeField(arr[:, :3], arr[:, 3])


def write_scaffold(scaffold: Scaffold, path):
    lines = ["# x y z species (angstrom)"]
    for site in scaffold.sites:
        x, y, z = site.position
        lines.append(f"{x:.10f} {y:.10f} {z:.10f} {','.join(site.species)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_charge_field(field: ChargeField, path, header: str = "x y z q (angstrom, e)"):
    lines = [f"# {header}"]
    for (x, y, z), q in zip(field.positions, field.charges):
        lines.append(f"{x:.10f} {y:.10f} {z:.10f} {q:.10f}")
    Path(path).write_text("\n".join(lines) + "\n")
