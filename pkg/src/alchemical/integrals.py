"""One- and two-electron Gaussian integrals over a union basis.

McMurchie-Davidson Hermite expansions for s/p Cartesian Gaussians. Electron
attraction carries the physical sign: a positive point charge gives a negative
matrix element. Two-electron integrals use chemists' notation,
``g[p, q, r, s] = (pq|rs)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .archive import read_archive, write_archive
from .basis import BasisFunction, BasisSet, load_sto3g
from .errors import ArchiveFormatError, ShapeError
from .system import ChargeField, Scaffold

BOYS_MAX_ORDER = 16
_BOYS_SWITCH = 35.0
_MAX_L = 4  # highest Hermite order needed for (pp|pp)

CHARGE_MODELS = ("all_electron", "valence")


# --------------------------------------------------------------------------
# kernels

@njit
def _boys_fill(nmax, x, out):
    if x < _BOYS_SWITCH:
        ex = math.exp(-x)
        term = 1.0 / (2 * nmax + 1)
        total = term
        k = 1
        while True:
            term *= 2.0 * x / (2 * nmax + 2 * k + 1)
            total += term
            if term < 1e-17 * total:
                break
            k += 1
        out[nmax] = ex * total
        for m in range(nmax, 0, -1):
            out[m - 1] = (2.0 * x * out[m] + ex) / (2 * m - 1)
    else:
        # erf(sqrt(x)) == 1 to double precision here; upward recursion is stable
        ex = math.exp(-x)
        out[0] = 0.5 * math.sqrt(math.pi / x)
        for m in range(nmax):
            out[m + 1] = ((2 * m + 1) * out[m] - ex) / (2.0 * x)


@njit
def _hermite_1d(i_max, j_max, xa, xb, a, b, out):
    """out[i, j, t]: Hermite coefficients of the 1D Gaussian product."""
    p = a + b
    xp = (a * xa + b * xb) / p
    xpa = xp - xa
    xpb = xp - xb
    xab = xa - xb
    inv2p = 0.5 / p
    t_max = i_max + j_max
    for i in range(i_max + 1):
        for j in range(j_max + 1):
            for t in range(t_max + 2):
                out[i, j, t] = 0.0
    out[0, 0, 0] = math.exp(-a * b / p * xab * xab)
    for i in range(i_max):
        for t in range(i + 2):
            val = xpa * out[i, 0, t]
            if t > 0:
                val += inv2p * out[i, 0, t - 1]
            val += (t + 1) * out[i, 0, t + 1]
            out[i + 1, 0, t] = val
    for j in range(j_max):
        for i in range(i_max + 1):
            for t in range(i + j + 2):
                val = xpb * out[i, j, t]
                if t > 0:
                    val += inv2p * out[i, j, t - 1]
                val += (t + 1) * out[i, j, t + 1]
                out[i, j + 1, t] = val


@njit
def _hermite_coulomb(order, p, x, y, z, boys_buf, r):
    """r[n, t, u, v] for t + u + v <= order - n (Hermite Coulomb integrals)."""
    _boys_fill(order, p * (x * x + y * y + z * z), boys_buf)
    fac = 1.0
    for n in range(order + 1):
        r[n, 0, 0, 0] = fac * boys_buf[n]
        fac *= -2.0 * p
    for n in range(order - 1, -1, -1):
        top = order - n
        for t in range(top + 1):
            for u in range(top + 1 - t):
                for v in range(top + 1 - t - u):
                    if t + u + v == 0:
                        continue
                    if t > 0:
                        val = x * r[n + 1, t - 1, u, v]
                        if t > 1:
                            val += (t - 1) * r[n + 1, t - 2, u, v]
                    elif u > 0:
                        val = y * r[n + 1, t, u - 1, v]
                        if u > 1:
                            val += (u - 1) * r[n + 1, t, u - 2, v]
                    else:
                        val = z * r[n + 1, t, u, v - 1]
                        if v > 1:
                            val += (v - 1) * r[n + 1, t, u, v - 2]
                    r[n, t, u, v] = val


@njit
def _one_electron(centers, powers, exps, coefs, nprim, charge_pos, charge_val):
    """Overlap, kinetic and point-charge attraction matrices."""
    n = centers.shape[0]
    s_mat = np.zeros((n, n))
    t_mat = np.zeros((n, n))
    v_mat = np.zeros((n, n))
    ex = np.zeros((2, 4, 6))
    ey = np.zeros((2, 4, 6))
    ez = np.zeros((2, 4, 6))
    boys_buf = np.zeros(_MAX_L + 1)
    r = np.zeros((_MAX_L + 1, _MAX_L + 1, _MAX_L + 1, _MAX_L + 1))
    ncharge = charge_val.shape[0]
    for i in range(n):
        li, mi, ni = powers[i, 0], powers[i, 1], powers[i, 2]
        for j in range(i + 1):
            lj, mj, nj = powers[j, 0], powers[j, 1], powers[j, 2]
            s_ij = 0.0
            t_ij = 0.0
            v_ij = 0.0
            for a_k in range(nprim[i]):
                a = exps[i, a_k]
                ca = coefs[i, a_k]
                for b_k in range(nprim[j]):
                    b = exps[j, b_k]
                    cb = coefs[j, b_k]
                    p = a + b
                    _hermite_1d(li, lj + 2, centers[i, 0], centers[j, 0], a, b, ex)
                    _hermite_1d(mi, mj + 2, centers[i, 1], centers[j, 1], a, b, ey)
                    _hermite_1d(ni, nj + 2, centers[i, 2], centers[j, 2], a, b, ez)
                    root = math.sqrt(math.pi / p)
                    sx = ex[li, lj, 0] * root
                    sy = ey[mi, mj, 0] * root
                    sz = ez[ni, nj, 0] * root
                    # kinetic via 1D overlaps with raised/lowered powers
                    tx = -0.5 * (4 * b * b * ex[li, lj + 2, 0] - 2 * b * (2 * lj + 1) * ex[li, lj, 0]) * root
                    if lj > 1:
                        tx += -0.5 * lj * (lj - 1) * ex[li, lj - 2, 0] * root
                    ty = -0.5 * (4 * b * b * ey[mi, mj + 2, 0] - 2 * b * (2 * mj + 1) * ey[mi, mj, 0]) * root
                    if mj > 1:
                        ty += -0.5 * mj * (mj - 1) * ey[mi, mj - 2, 0] * root
                    tz = -0.5 * (4 * b * b * ez[ni, nj + 2, 0] - 2 * b * (2 * nj + 1) * ez[ni, nj, 0]) * root
                    if nj > 1:
                        tz += -0.5 * nj * (nj - 1) * ez[ni, nj - 2, 0] * root
                    cc = ca * cb
                    s_ij += cc * sx * sy * sz
                    t_ij += cc * (tx * sy * sz + sx * ty * sz + sx * sy * tz)
                    if ncharge > 0:
                        px = (a * centers[i, 0] + b * centers[j, 0]) / p
                        py = (a * centers[i, 1] + b * centers[j, 1]) / p
                        pz = (a * centers[i, 2] + b * centers[j, 2]) / p
                        order = li + lj + mi + mj + ni + nj
                        pref = 2.0 * math.pi / p
                        acc = 0.0
                        for c in range(ncharge):
                            q = charge_val[c]
                            if q == 0.0:
                                continue
                            _hermite_coulomb(order, p, px - charge_pos[c, 0], py - charge_pos[c, 1],
                                             pz - charge_pos[c, 2], boys_buf, r)
                            tot = 0.0
                            for t in range(li + lj + 1):
                                for u in range(mi + mj + 1):
                                    for v in range(ni + nj + 1):
                                        tot += ex[li, lj, t] * ey[mi, mj, u] * ez[ni, nj, v] * r[0, t, u, v]
                            acc -= q * tot
                        v_ij += cc * pref * acc
            s_mat[i, j] = s_ij
            s_mat[j, i] = s_ij
            t_mat[i, j] = t_ij
            t_mat[j, i] = t_ij
            v_mat[i, j] = v_ij
            v_mat[j, i] = v_ij
    return s_mat, t_mat, v_mat


@njit
def _pair_data(centers, powers, exps, coefs, nprim):
    """Primitive-pair exponents, centres and Hermite coefficients for i >= j."""
    n = centers.shape[0]
    npairs = n * (n + 1) // 2
    maxp = exps.shape[1] * exps.shape[1]
    pair_n = np.zeros(npairs, dtype=np.int64)
    pair_p = np.zeros((npairs, maxp))
    pair_c = np.zeros((npairs, maxp, 3))
    pair_w = np.zeros((npairs, maxp))
    pair_e = np.zeros((npairs, maxp, 3, 3))
    pair_l = np.zeros((npairs, 3), dtype=np.int64)
    e1 = np.zeros((2, 2, 4))
    idx = 0
    for i in range(n):
        for j in range(i + 1):
            for d in range(3):
                pair_l[idx, d] = powers[i, d] + powers[j, d]
            k = 0
            for a_k in range(nprim[i]):
                a = exps[i, a_k]
                for b_k in range(nprim[j]):
                    b = exps[j, b_k]
                    p = a + b
                    pair_p[idx, k] = p
                    pair_w[idx, k] = coefs[i, a_k] * coefs[j, b_k]
                    for d in range(3):
                        pair_c[idx, k, d] = (a * centers[i, d] + b * centers[j, d]) / p
                        _hermite_1d(powers[i, d], powers[j, d], centers[i, d], centers[j, d], a, b, e1)
                        for t in range(3):
                            pair_e[idx, k, d, t] = e1[powers[i, d], powers[j, d], t]
                    k += 1
            pair_n[idx] = k
            idx += 1
    return pair_n, pair_p, pair_c, pair_w, pair_e, pair_l


@njit
def _eri_tensor(centers, powers, exps, coefs, nprim):
    n = centers.shape[0]
    pair_n, pair_p, pair_c, pair_w, pair_e, pair_l = _pair_data(centers, powers, exps, coefs, nprim)
    g = np.zeros((n, n, n, n))
    boys_buf = np.zeros(_MAX_L + 1)
    r = np.zeros((_MAX_L + 1, _MAX_L + 1, _MAX_L + 1, _MAX_L + 1))
    pref0 = 2.0 * math.pi ** 2.5
    ij = 0
    for i in range(n):
        for j in range(i + 1):
            lx1, ly1, lz1 = pair_l[ij, 0], pair_l[ij, 1], pair_l[ij, 2]
            kl = 0
            for k in range(n):
                for l in range(k + 1):
                    if kl > ij:
                        break
                    lx2, ly2, lz2 = pair_l[kl, 0], pair_l[kl, 1], pair_l[kl, 2]
                    order = lx1 + ly1 + lz1 + lx2 + ly2 + lz2
                    val = 0.0
                    for pp in range(pair_n[ij]):
                        p = pair_p[ij, pp]
                        for qq in range(pair_n[kl]):
                            q = pair_p[kl, qq]
                            alpha = p * q / (p + q)
                            _hermite_coulomb(order, alpha,
                                             pair_c[ij, pp, 0] - pair_c[kl, qq, 0],
                                             pair_c[ij, pp, 1] - pair_c[kl, qq, 1],
                                             pair_c[ij, pp, 2] - pair_c[kl, qq, 2],
                                             boys_buf, r)
                            tot = 0.0
                            for t in range(lx1 + 1):
                                et = pair_e[ij, pp, 0, t]
                                for u in range(ly1 + 1):
                                    eu = et * pair_e[ij, pp, 1, u]
                                    for v in range(lz1 + 1):
                                        ev = eu * pair_e[ij, pp, 2, v]
                                        inner = 0.0
                                        for tau in range(lx2 + 1):
                                            for nu in range(ly2 + 1):
                                                for phi in range(lz2 + 1):
                                                    sgn = 1.0 - 2.0 * ((tau + nu + phi) & 1)
                                                    inner += (sgn * pair_e[kl, qq, 0, tau] * pair_e[kl, qq, 1, nu]
                                                              * pair_e[kl, qq, 2, phi] * r[0, t + tau, u + nu, v + phi])
                                        tot += ev * inner
                            val += pair_w[ij, pp] * pair_w[kl, qq] * pref0 / (p * q * math.sqrt(p + q)) * tot
                    g[i, j, k, l] = val
                    g[j, i, k, l] = val
                    g[i, j, l, k] = val
                    g[j, i, l, k] = val
                    g[k, l, i, j] = val
                    g[l, k, i, j] = val
                    g[k, l, j, i] = val
                    g[l, k, j, i] = val
                    kl += 1
            ij += 1
    return g


# --------------------------------------------------------------------------
# public scalar API

def boys(n: int, x: float) -> float:
    """F_n(x) = int_0^1 t^(2n) exp(-x t^2) dt."""
    if x < 0:
        raise ValueError(f"Boys function needs x >= 0, got {x}")
    if not 0 <= n <= BOYS_MAX_ORDER:
        raise ValueError(f"Boys order must lie in [0, {BOYS_MAX_ORDER}], got {n}")
    out = np.zeros(n + 1)
    _boys_fill(int(n), float(x), out)
    return float(out[n])


def boys_orders(nmax: int, x: float) -> np.ndarray:
    """F_0(x) ... F_nmax(x)."""
    if x < 0:
        raise ValueError(f"Boys function needs x >= 0, got {x}")
    out = np.zeros(nmax + 1)
    _boys_fill(int(nmax), float(x), out)
    return out


def _packed(basis):
    return (np.ascontiguousarray(basis.centers), np.ascontiguousarray(basis.powers),
            np.ascontiguousarray(basis.exponents), np.ascontiguousarray(basis.coefficients),
            np.ascontiguousarray(basis.nprim))


def _as_basis(*functions: BasisFunction) -> BasisSet:
    return BasisSet(functions)


_NO_POS = np.zeros((0, 3))
_NO_Q = np.zeros(0)


def overlap_matrix(basis: BasisSet) -> np.ndarray:
    return _one_electron(*_packed(basis), _NO_POS, _NO_Q)[0]


def kinetic_matrix(basis: BasisSet) -> np.ndarray:
    return _one_electron(*_packed(basis), _NO_POS, _NO_Q)[1]


def attraction_matrix(basis: BasisSet, centers_bohr, charges) -> np.ndarray:
    """Sum over point charges of <a| -q / |r - C| |b>."""
    pos = np.ascontiguousarray(np.asarray(centers_bohr, dtype=float).reshape(-1, 3))
    q = np.ascontiguousarray(np.asarray(charges, dtype=float).reshape(-1))
    if len(pos) != len(q):
        raise ShapeError("charge centres and values differ in length")
    return _one_electron(*_packed(basis), pos, q)[2]


def eri_tensor(basis: BasisSet) -> np.ndarray:
    return _eri_tensor(*_packed(basis))


def overlap(a: BasisFunction, b: BasisFunction) -> float:
    return float(overlap_matrix(_as_basis(a, b))[0, 1])


def kinetic(a: BasisFunction, b: BasisFunction) -> float:
    return float(kinetic_matrix(_as_basis(a, b))[0, 1])


def point_attraction(a: BasisFunction, b: BasisFunction, center_bohr, charge: float) -> float:
    """<a| charge / |r - center| |b> for an electron: negative when charge > 0."""
    return float(attraction_matrix(_as_basis(a, b), [center_bohr], [charge])[0, 1])


def eri(a: BasisFunction, b: BasisFunction, c: BasisFunction, d: BasisFunction) -> float:
    """(ab|cd) in chemists' notation."""
    return float(eri_tensor(_as_basis(a, b, c, d))[0, 1, 2, 3])


# --------------------------------------------------------------------------
# full integral set

def species_charge(element: str, charge_model: str) -> float:
    sb = load_sto3g(element)
    if charge_model == "all_electron":
        return float(sb.total_z)
    if charge_model == "valence":
        return sb.valence_charge
    raise ValueError(f"unknown charge model {charge_model!r}; choose from {CHARGE_MODELS}")


def site_charges(scaffold: Scaffold, charge_model: str) -> list[np.ndarray]:
    return [np.array([species_charge(s, charge_model) for s in site.species]) for site in scaffold.sites]


@dataclass
class AlchemicalIntegrals:
    """Integral tensors over the union basis (atomic units)."""

    S: np.ndarray
    T: np.ndarray
    V_en: list  # V_en[I][s]: attraction to the species-s nuclear charge at site I
    V_ecp: list  # V_ecp[I][s]: ingested core-potential blocks, zero by default
    V_eq: np.ndarray
    g: np.ndarray
    Znuc: list  # Znuc[I][s]: nuclear charge used in V_en
    charge_model: str = "all_electron"
    ecp_supplied: bool = False
    basis_arrays: dict = field(default_factory=dict, repr=False)
    field_arrays: dict = field(default_factory=dict, repr=False)

    @property
    def n_basis(self) -> int:
        return self.S.shape[0]

    @property
    def counts(self) -> list[int]:
        return [len(z) for z in self.Znuc]

    def to_tensors(self) -> dict:
        out = {"S": self.S, "T": self.T, "V_eq": self.V_eq, "g": self.g}
        for i, blocks in enumerate(self.V_en):
            for s, blk in enumerate(blocks):
                out[f"V_en.{i}.{s}"] = blk
        for i, blocks in enumerate(self.V_ecp):
            for s, blk in enumerate(blocks):
                out[f"V_ecp.{i}.{s}"] = blk
        for i, z in enumerate(self.Znuc):
            out[f"Znuc.{i}"] = z
        out["meta.all_electron"] = np.array([1.0 if self.charge_model == "all_electron" else 0.0])
        out["meta.ecp_supplied"] = np.array([1.0 if self.ecp_supplied else 0.0])
        for key, arr in self.basis_arrays.items():
            out[f"basis.{key}"] = np.asarray(arr, dtype=float)
        for key, arr in self.field_arrays.items():
            out[f"field.{key}"] = np.asarray(arr, dtype=float)
        return out

    def save(self, path):
        write_archive(path, self.to_tensors())

    @classmethod
    def load(cls, path) -> "AlchemicalIntegrals":
        t = read_archive(path)
        try:
            n_sites = sum(1 for k in t if k.startswith("Znuc."))
            znuc = [t[f"Znuc.{i}"] for i in range(n_sites)]
            v_en = [[t[f"V_en.{i}.{s}"] for s in range(len(znuc[i]))] for i in range(n_sites)]
            v_ecp = [[t[f"V_ecp.{i}.{s}"] for s in range(len(znuc[i]))] for i in range(n_sites)]
            model = "all_electron" if t["meta.all_electron"][0] == 1.0 else "valence"
            return cls(t["S"], t["T"], v_en, v_ecp, t["V_eq"], t["g"], znuc, model,
                       bool(t["meta.ecp_supplied"][0]),
                       {k[6:]: v for k, v in t.items() if k.startswith("basis.")},
                       {k[6:]: v for k, v in t.items() if k.startswith("field.")})
        except KeyError as exc:
            raise ArchiveFormatError(f"{path}: integral archive lacks tensor {exc}") from None

    def matches(self, basis: BasisSet, field: ChargeField | None = None) -> bool:
        """True if computed for ``basis`` (same primitives and centres) and, if given, ``field``."""
        pairs = [(_basis_arrays(basis), self.basis_arrays)]
        if field is not None:
            pairs.append((_field_arrays(field), self.field_arrays))
        return all(
            set(ref) == set(have) and all(
                np.array_equal(np.asarray(ref[k], dtype=float).reshape(np.shape(have[k])), have[k]) for k in ref)
            for ref, have in pairs
        )


def _basis_arrays(basis: BasisSet) -> dict:
    return {
        "centers": np.asarray(basis.centers, dtype=float),
        "powers": np.asarray(basis.powers, dtype=float),
        "exponents": np.asarray(basis.exponents, dtype=float),
        "coefficients": np.asarray(basis.coefficients, dtype=float),
    }


def _field_arrays(field: ChargeField) -> dict:
    return {"positions": np.asarray(field.positions_bohr, dtype=float).reshape(-1, 3),
            "charges": np.asarray(field.charges, dtype=float)}


def load_ecp_override(path, counts, n_basis):
    """Read ``V_ecp.I.s`` blocks from a tensor archive; missing blocks are zero."""
    tensors = read_archive(path)
    blocks = [[np.zeros((n_basis, n_basis)) for _ in range(c)] for c in counts]
    for name, arr in tensors.items():
        if not name.startswith("V_ecp."):
            continue
        try:
            _, i, s = name.split(".")
            i, s = int(i), int(s)
            blocks[i][s]
        except (ValueError, IndexError):
            raise ShapeError(f"ECP block {name!r} does not address a scaffold site/species") from None
        if arr.shape != (n_basis, n_basis):
            raise ShapeError(f"ECP block {name} has shape {arr.shape}, expected {(n_basis, n_basis)}")
        blocks[i][s] = np.array(arr, dtype=float)
    return blocks


def compute_all(basis: BasisSet, scaffold: Scaffold, field: ChargeField | None = None,
                charge_model: str = "all_electron", ecp=None) -> AlchemicalIntegrals:
    """Fill every tensor needed to assemble the alchemical Hamiltonian.

    ``ecp`` is either None, a path to a tensor archive holding ``V_ecp.I.s``
    blocks, or a nested list of N x N arrays.
    """
    field = field if field is not None else ChargeField()
    charges = site_charges(scaffold, charge_model)
    packed = _packed(basis)
    s_mat, t_mat, _ = _one_electron(*packed, _NO_POS, _NO_Q)
    sites = scaffold.positions_bohr
    n = len(basis)
    v_en = []
    for i, zs in enumerate(charges):
        pos = np.ascontiguousarray(sites[i:i + 1])
        v_en.append([_one_electron(*packed, pos, np.array([z]))[2] for z in zs])
    if len(field):
        v_eq = _one_electron(*packed, np.ascontiguousarray(field.positions_bohr),
                             np.ascontiguousarray(field.charges))[2]
    else:
        v_eq = np.zeros((n, n))
    counts = scaffold.species_counts
    if ecp is None:
        v_ecp = [[np.zeros((n, n)) for _ in range(c)] for c in counts]
        supplied = False
    elif isinstance(ecp, (str, bytes)) or hasattr(ecp, "__fspath__"):
        v_ecp = load_ecp_override(ecp, counts, n)
        supplied = True
    else:
        if [len(b) for b in ecp] != counts:
            raise ShapeError("ECP blocks do not match the scaffold layout")
        v_ecp = []
        for row in ecp:
            out_row = []
            for blk in row:
                blk = np.asarray(blk, dtype=float)
                if blk.shape != (n, n):
                    raise ShapeError(f"ECP block has shape {blk.shape}, expected {(n, n)}")
                out_row.append(blk)
            v_ecp.append(out_row)
        supplied = True
    g = _eri_tensor(*packed)
    return AlchemicalIntegrals(s_mat, t_mat, v_en, v_ecp, v_eq, g, charges, charge_model, supplied,
                               _basis_arrays(basis), _field_arrays(field))
