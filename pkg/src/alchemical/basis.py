"""STO-3G basis data and the union basis over all sites and species."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UnsupportedSpeciesError
from .system import ANGSTROM_TO_BOHR, Scaffold

# Standard STO-3G contraction coefficients (for normalized primitives).
_D_1S = (0.15432897, 0.53532814, 0.44463454)
_D_2S = (-0.09996723, 0.39951283, 0.70011547)
_D_2P = (0.15591627, 0.60768372, 0.39195739)
_D_3S = (-0.21962037, 0.22559543, 0.90039843)
_D_3P = (0.01058760, 0.59516701, 0.46200101)

# element -> (Z, core electrons, [(shell label, exponents)])
_STO3G = {
    "H": (1, 0, [("1s", (3.42525091, 0.62391373, 0.16885540))]),
    "Li": (3, 2, [
        ("1s", (16.1195750, 2.9362007, 0.7946505)),
        ("2sp", (0.6362897, 0.1478601, 0.0480887)),
    ]),
    "C": (6, 2, [
        ("1s", (71.6168370, 13.0450960, 3.5305122)),
        ("2sp", (2.9412494, 0.6834831, 0.2222899)),
    ]),
    "N": (7, 2, [
        ("1s", (99.1061690, 18.0523120, 4.8856602)),
        ("2sp", (3.7804559, 0.8784966, 0.2857144)),
    ]),
    "O": (8, 2, [
        ("1s", (130.7093200, 23.8088610, 6.4436083)),
        ("2sp", (5.0331513, 1.1695961, 0.3803890)),
    ]),
    "Na": (11, 10, [
        ("1s", (250.7724300, 45.6785110, 12.3623880)),
        ("2sp", (12.0401930, 2.7978819, 0.9099580)),
        ("3sp", (1.4787406, 0.4125649, 0.1614751)),
    ]),
    "S": (16, 10, [
        ("1s", (533.1257359, 97.1095183, 26.2816261)),
        ("2sp", (33.3297525, 7.7451175, 2.5189525)),
        ("3sp", (2.0291942, 0.5661400, 0.2215833)),
    ]),
}

STO3G_ELEMENTS = frozenset(_STO3G)

# Experimental equilibrium bond lengths of diatomics, angstrom.
BOND_LENGTHS = {
    frozenset(["H"]): 0.7414,
    frozenset(["Li", "H"]): 1.5957,
    frozenset(["Na", "H"]): 1.8874,
    frozenset(["Li"]): 2.6729,
    frozenset(["Na"]): 3.0789,
    frozenset(["Na", "Li"]): 2.885,
    frozenset(["C"]): 1.2425,
    frozenset(["N"]): 1.0977,
    frozenset(["O"]): 1.2075,
    frozenset(["S"]): 1.8892,
    frozenset(["C", "O"]): 1.1283,
    frozenset(["C", "N"]): 1.1718,
    frozenset(["N", "O"]): 1.1508,
    frozenset(["C", "S"]): 1.5349,
    frozenset(["S", "O"]): 1.4811,
    frozenset(["N", "S"]): 1.4940,
}

_CARTESIAN_P = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
_P_LABELS = ("x", "y", "z")


def bond_length(a: str, b: str) -> float:
    try:
        return BOND_LENGTHS[frozenset([a, b])]
    except KeyError:
        raise KeyError(f"no tabulated bond length for {a}{b}") from None


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def primitive_norm(exponent: float, powers) -> float:
    l, m, n = powers
    big_l = l + m + n
    denom = _double_factorial(2 * l - 1) * _double_factorial(2 * m - 1) * _double_factorial(2 * n - 1)
    return (2 * exponent / np.pi) ** 0.75 * (4 * exponent) ** (big_l / 2) / np.sqrt(denom)


def _same_center_overlap(a: float, b: float, powers) -> float:
    p = a + b
    out = (np.pi / p) ** 1.5
    for k in powers:
        out *= _double_factorial(2 * k - 1) / (2 * p) ** k
    return out


@dataclass(frozen=True)
class GaussianPrimitive:
    exponent: float
    coefficient: float
    angular_powers: tuple[int, int, int]

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("exponent must be positive")
        if min(self.angular_powers) < 0 or sum(self.angular_powers) > 1:
            raise ValueError("only s and p Cartesian primitives are supported")


@dataclass(frozen=True)
class Shell:
    label: str  # e.g. "1s", "2p"
    angular_momentum: int
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]

    @property
    def n_functions(self) -> int:
        return 1 if self.angular_momentum == 0 else 3

    def components(self):
        if self.angular_momentum == 0:
            return [("", (0, 0, 0))]
        return list(zip(_P_LABELS, _CARTESIAN_P))

    def primitives(self, powers) -> list[GaussianPrimitive]:
        """Primitives with primitive and contraction normalization folded in."""
        raw = [d * primitive_norm(a, powers) for a, d in zip(self.exponents, self.coefficients)]
        self_overlap = sum(
            ci * cj * _same_center_overlap(ai, aj, powers)
            for ai, ci in zip(self.exponents, raw)
            for aj, cj in zip(self.exponents, raw)
        )
        scale = 1.0 / np.sqrt(self_overlap)
        return [GaussianPrimitive(a, c * scale, tuple(powers)) for a, c in zip(self.exponents, raw)]


@dataclass(frozen=True)
class SpeciesBasis:
    element: str
    shells: tuple[Shell, ...]
    total_z: int
    core_electrons: int

    def __post_init__(self):
        if self.core_electrons < 0 or self.core_electrons % 2:
            raise ValueError("core electron count must be even and non-negative")

    @property
    def valence_charge(self) -> float:
        return float(self.total_z - self.core_electrons)

    @property
    def n_functions(self) -> int:
        return sum(sh.n_functions for sh in self.shells)


@lru_cache(maxsize=None)
def load_sto3g(element: str) -> SpeciesBasis:
    try:
        z, core, shells = _STO3G[element]
    except KeyError:
        raise UnsupportedSpeciesError(
            f"no STO-3G data for {element!r}; bundled: {sorted(STO3G_ELEMENTS)}"
        ) from None
    out = []
    for label, exps in shells:
        n = label[0]
        if label.endswith("sp"):
            s_coef, p_coef = (_D_2S, _D_2P) if n == "2" else (_D_3S, _D_3P)
            out.append(Shell(n + "s", 0, exps, s_coef))
            out.append(Shell(n + "p", 1, exps, p_coef))
        else:
            out.append(Shell(label, 0, exps, _D_1S))
    return SpeciesBasis(element, tuple(out), z, core)


@dataclass(frozen=True)
class BasisFunction:
    site: int
    species_index: int
    species: str
    shell: str
    component: str
    center: tuple[float, float, float]  # bohr
    powers: tuple[int, int, int]
    primitives: tuple[GaussianPrimitive, ...]

    @property
    def label(self) -> str:
        return f"{self.site}:{self.species}:{self.shell}{self.component}"


class BasisSet:
    """Ordered basis functions plus packed arrays for the integral kernels."""

    def __init__(self, functions):
        self.functions = tuple(functions)
        n = len(self.functions)
        max_prim = max(len(f.primitives) for f in self.functions)
        self.centers = np.array([f.center for f in self.functions], dtype=np.float64).reshape(n, 3)
        self.powers = np.array([f.powers for f in self.functions], dtype=np.int64).reshape(n, 3)
        self.nprim = np.array([len(f.primitives) for f in self.functions], dtype=np.int64)
        self.exponents = np.ones((n, max_prim))
        self.coefficients = np.zeros((n, max_prim))
        for i, f in enumerate(self.functions):
            for k, prim in enumerate(f.primitives):
                self.exponents[i, k] = prim.exponent
                self.coefficients[i, k] = prim.coefficient
        for arr in (self.centers, self.powers, self.nprim, self.exponents, self.coefficients):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.functions)

    def __getitem__(self, i) -> BasisFunction:
        return self.functions[i]

    @property
    def tags(self) -> list[tuple[int, int]]:
        return [(f.site, f.species_index) for f in self.functions]

    def indices(self, site: int, species_index: int) -> list[int]:
        return [i for i, f in enumerate(self.functions) if f.site == site and f.species_index == species_index]

    def translated(self, shift_bohr) -> "BasisSet":
        shift = np.asarray(shift_bohr, dtype=float)
        return BasisSet(
            BasisFunction(f.site, f.species_index, f.species, f.shell, f.component,
                          tuple(np.asarray(f.center) + shift), f.powers, f.primitives)
            for f in self.functions
        )


def basis_function(species: str, shell_index: int, component: int, center_bohr, site=0, species_index=0):
    """Single contracted function, handy for direct integral calls."""
    sb = load_sto3g(species)
    shell = sb.shells[shell_index]
    label, powers = shell.components()[component]
    return BasisFunction(site, species_index, species, shell.label, label,
                         tuple(float(c) for c in center_bohr), powers, tuple(shell.primitives(powers)))


def primitive_function(exponent: float, powers=(0, 0, 0), center_bohr=(0.0, 0.0, 0.0)) -> BasisFunction:
    """A single normalized primitive wrapped as a basis function."""
    prim = GaussianPrimitive(exponent, primitive_norm(exponent, powers), tuple(powers))
    return BasisFunction(0, 0, "", "prim", "", tuple(float(c) for c in center_bohr), tuple(powers), (prim,))


def build_union_basis(scaffold: Scaffold) -> BasisSet:
    """Every allowed species' functions at every site, in deterministic order."""
    functions = []
    for site_index, (site, center) in enumerate(zip(scaffold.sites, scaffold.positions_bohr)):
        for species_index, element in enumerate(site.species):
            sb = load_sto3g(element)
            for shell in sb.shells:
                for comp, powers in shell.components():
                    functions.append(BasisFunction(
                        site_index, species_index, element, shell.label, comp,
                        tuple(float(c) for c in center), powers, tuple(shell.primitives(powers)),
                    ))
    return BasisSet(functions)


def diatomic_scaffold(species, bond_length_angstrom: float, species_b=None) -> Scaffold:
    """Two sites on the z axis centred at the origin; site 0 at negative z."""
    species_b = species if species_b is None else species_b
    half = 0.5 * bond_length_angstrom
    return Scaffold.from_sites([(0.0, 0.0, -half), (0.0, 0.0, half)], [tuple(species), tuple(species_b)])


def mean_bond_length(species) -> float:
    """Average tabulated bond length over all ordered pairs of ``species``."""
    vals = [bond_length(a, b) for a in species for b in species]
    return float(np.mean(vals))


__all__ = [
    "ANGSTROM_TO_BOHR", "BOND_LENGTHS", "BasisFunction", "BasisSet", "GaussianPrimitive",
    "STO3G_ELEMENTS", "Shell", "SpeciesBasis", "basis_function", "bond_length",
    "build_union_basis", "diatomic_scaffold", "load_sto3g", "mean_bond_length",
    "primitive_function", "primitive_norm",
]
