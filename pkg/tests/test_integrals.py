import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from alchemical.archive import read_archive, write_archive
from alchemical.basis import basis_function, build_union_basis, diatomic_scaffold, primitive_function
from alchemical.errors import ArchiveFormatError
from alchemical.integrals import (AlchemicalIntegrals, attraction_matrix, boys, boys_orders, compute_all, eri,
                                  eri_tensor, kinetic, overlap, overlap_matrix, point_attraction)
from alchemical.system import ChargeField


def _mp_boys(n, x):
    """Lower incomplete gamma form at 40 digits."""
    with mpmath.workdps(40):
        if x == 0:
            return 1 / (2 * n + 1)
        x = mpmath.mpf(x)
        return float(mpmath.gammainc(n + 0.5, 0, x) / (2 * x ** (n + 0.5)))


@pytest.mark.parametrize("n", [0, 1, 2, 4, 8])
@pytest.mark.parametrize("x", [0.0, 1e-9, 0.3, 2.5, 12.0, 29.9, 30.1, 34.9, 35.0, 50.0, 300.0])
def test_boys_matches_incomplete_gamma(n, x):
    ref = _mp_boys(n, x)
    assert boys(n, x) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_boys_at_zero_is_closed_form():
    assert np.allclose(boys_orders(6, 0.0), [1 / (2 * n + 1) for n in range(7)], rtol=0, atol=1e-15)


@given(st.floats(0.0, 200.0))
@settings(max_examples=60, deadline=None)
def test_boys_orders_obey_downward_recursion(x):
    f = boys_orders(6, x)
    for m in range(6):
        assert f[m] == pytest.approx((2 * x * f[m + 1] + math.exp(-x)) / (2 * m + 1), rel=1e-11)
    assert np.all(np.diff(f) <= 0)


def test_boys_rejects_bad_arguments():
    with pytest.raises(ValueError):
        boys(0, -1.0)
    with pytest.raises(ValueError):
        boys(-1, 1.0)


# 1D products of Cartesian Gaussians integrate separably, giving a quadrature oracle.


def _gauss_1d(x, center, exponent, power):
    return (x - center) ** power * math.exp(-exponent * (x - center) ** 2)


def _prim_overlap_quad(a, b):
    (ea, pa, ca), (eb, pb, cb) = a, b
    total = 1.0
    for k in range(3):
        total *= quad(lambda x: _gauss_1d(x, ca[k], ea, pa[k]) * _gauss_1d(x, cb[k], eb, pb[k]), -np.inf, np.inf,
                      epsabs=1e-14, epsrel=1e-13)[0]
    return total


def _second_derivative_1d(x, center, exponent, power):
    u = x - center
    e = math.exp(-exponent * u * u)
    if power == 0:
        return (4 * exponent ** 2 * u * u - 2 * exponent) * e
    return (4 * exponent ** 2 * u ** 3 - 6 * exponent * u) * e


def _prim_kinetic_quad(a, b):
    (ea, pa, ca), (eb, pb, cb) = a, b
    total = 0.0
    for d in range(3):
        term = 1.0
        for k in range(3):
            right = _second_derivative_1d if k == d else _gauss_1d
            term *= quad(lambda x, k=k, right=right: _gauss_1d(x, ca[k], ea, pa[k]) * right(x, cb[k], eb, pb[k]),
                         -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11)[0]
        total += term
    return -0.5 * total


def _contracted(fn, integral):
    return sum(pa.coefficient * pb.coefficient * integral((pa.exponent, fn[0].powers, fn[0].center),
                                                         (pb.exponent, fn[1].powers, fn[1].center))
               for pa in fn[0].primitives for pb in fn[1].primitives)


PAIRS = [
    (("H", 0, 0, (0.0, 0.0, 0.0)), ("H", 0, 0, (0.0, 0.0, 1.4))),
    (("Li", 2, 0, (0.1, -0.3, 0.2)), ("H", 0, 0, (0.0, 0.5, 2.9))),
    (("Li", 2, 2, (0.0, 0.0, 0.0)), ("Li", 2, 2, (0.3, 0.1, 1.7))),
    (("Na", 1, 0, (0.0, 0.0, 0.0)), ("Li", 2, 1, (0.6, 0.9, -0.4))),
]


@pytest.mark.parametrize("spec_a,spec_b", PAIRS)
def test_overlap_and_kinetic_match_quadrature(spec_a, spec_b):
    a, b = basis_function(*spec_a), basis_function(*spec_b)
    assert overlap(a, b) == pytest.approx(_contracted((a, b), _prim_overlap_quad), abs=1e-10)
    assert kinetic(a, b) == pytest.approx(_contracted((a, b), _prim_kinetic_quad), abs=1e-10)


def _s_attraction(ea, ca, eb, cb, c, charge):
    """Closed form for two unnormalized s primitives and a point charge."""
    ca, cb, c = map(np.asarray, (ca, cb, c))
    p = ea + eb
    centre = (ea * ca + eb * cb) / p
    k = math.exp(-ea * eb / p * np.sum((ca - cb) ** 2))
    return -charge * 2 * math.pi / p * k * _mp_boys(0, p * np.sum((centre - c) ** 2))


def test_s_attraction_matches_gaussian_product_formula():
    a = primitive_function(0.8, (0, 0, 0), (0.0, 0.0, 0.0))
    b = primitive_function(1.7, (0, 0, 0), (0.4, -0.2, 1.1))
    c, q = (0.9, 0.5, -0.3), 2.5
    norm = a.primitives[0].coefficient * b.primitives[0].coefficient
    assert point_attraction(a, b, c, q) == pytest.approx(norm * _s_attraction(0.8, a.center, 1.7, b.center, c, q),
                                                         abs=1e-12)


def test_p_attraction_is_a_centre_derivative_of_s():
    # x_A e^{-a r_A^2} = (1 / 2a) d/dA_x e^{-a r_A^2}
    ea, eb, c, q, h = 0.9, 1.3, (0.2, -0.7, 0.5), 1.0, 1e-5
    ca, cb = np.array([0.1, 0.3, -0.2]), (0.0, 0.4, 1.2)
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        deriv = (_s_attraction(ea, ca + step, eb, cb, c, q) - _s_attraction(ea, ca - step, eb, cb, c, q)) / (2 * h)
        powers = tuple(int(k == axis) for k in range(3))
        a = primitive_function(ea, powers, ca)
        b = primitive_function(eb, (0, 0, 0), cb)
        norm = a.primitives[0].coefficient * b.primitives[0].coefficient
        assert point_attraction(a, b, c, q) == pytest.approx(norm * deriv / (2 * ea), abs=1e-8)


@pytest.mark.parametrize("gamma", [0.2, 1.0, 7.5])
def test_primitive_self_repulsion(gamma):
    a = primitive_function(gamma)
    assert eri(a, a, a, a) == pytest.approx(2 * math.sqrt(gamma / math.pi), rel=1e-12)


@pytest.mark.parametrize("distance", [40.0, 80.0])
def test_repulsion_between_distant_charges_is_coulombic(distance):
    a = primitive_function(1.0)
    b = primitive_function(1.2, (0, 0, 0), (0.0, 0.0, distance))
    assert eri(a, a, b, b) == pytest.approx(1 / distance, rel=1e-12)


def test_p_repulsion_is_a_centre_derivative_of_s():
    ea, eb, ec, ed, h = 0.7, 1.1, 0.5, 1.6, 1e-5
    cb, cc, cd = (0.0, 0.2, 0.9), (0.5, -0.4, 0.0), (0.1, 0.1, -0.8)

    def s_eri(ca):
        fns = [primitive_function(e, (0, 0, 0), c) for e, c in ((ea, ca), (eb, cb), (ec, cc), (ed, cd))]
        norm = math.prod(f.primitives[0].coefficient for f in fns)
        return eri(*fns) / norm

    ca = np.array([0.3, 0.0, 0.4])
    step = np.array([0.0, 0.0, h])
    deriv = (s_eri(ca + step) - s_eri(ca - step)) / (2 * h)
    fns = [primitive_function(ea, (0, 0, 1), ca)] + [primitive_function(e, (0, 0, 0), c)
                                                     for e, c in ((eb, cb), (ec, cc), (ed, cd))]
    norm = math.prod(f.primitives[0].coefficient for f in fns)
    assert eri(*fns) / norm == pytest.approx(deriv / (2 * ea), abs=1e-8)


# Textbook STO-3G H2 at R = 1.4 bohr, four decimals.
H2_REFERENCE = {"S12": 0.6593, "T11": 0.7600, "T12": 0.2365, "V11_A": -1.2266, "V12_A": -0.5974,
                "V22_A": -0.6538, "(11|11)": 0.7746, "(11|22)": 0.5697, "(21|11)": 0.4441, "(21|21)": 0.2970}


def test_h2_integrals_match_textbook_values():
    scaffold = diatomic_scaffold(("H",), 1.4 / 1.8897261246)
    basis = build_union_basis(scaffold)
    s = overlap_matrix(basis)
    ints = compute_all(basis, scaffold)
    t, v_a, g = ints.T, ints.V_en[0][0], ints.g
    got = {"S12": s[0, 1], "T11": t[0, 0], "T12": t[0, 1], "V11_A": v_a[0, 0], "V12_A": v_a[0, 1],
           "V22_A": v_a[1, 1], "(11|11)": g[0, 0, 0, 0], "(11|22)": g[0, 0, 1, 1], "(21|11)": g[1, 0, 0, 0],
           "(21|21)": g[1, 0, 1, 0]}
    for key, ref in H2_REFERENCE.items():
        assert got[key] == pytest.approx(ref, abs=1e-4), key


@pytest.fixture(scope="module")
def small_basis():
    scaffold = diatomic_scaffold(("H", "Li"), 1.6)
    return build_union_basis(scaffold), scaffold


def test_matrices_are_symmetric(small_basis):
    basis, scaffold = small_basis
    s = overlap_matrix(basis)
    v = attraction_matrix(basis, [[0.0, 1.0, 0.5]], [0.7])
    assert np.allclose(s, s.T, atol=1e-14) and np.allclose(v, v.T, atol=1e-14)
    assert np.all(np.linalg.eigvalsh(s) > -1e-12)


def test_eri_tensor_matches_single_calls(small_basis):
    basis, _ = small_basis
    g = eri_tensor(basis)
    rng = np.random.default_rng(3)
    for _ in range(20):
        i, j, k, l = rng.integers(len(basis), size=4)
        assert g[i, j, k, l] == pytest.approx(eri(basis[i], basis[j], basis[k], basis[l]), abs=1e-14)


def test_attraction_is_linear_in_charges(small_basis):
    basis, _ = small_basis
    pos = np.array([[0.0, 1.0, 0.5], [1.0, -2.0, 3.0]])
    both = attraction_matrix(basis, pos, [0.4, -1.3])
    split = attraction_matrix(basis, pos[:1], [0.4]) + attraction_matrix(basis, pos[1:], [-1.3])
    assert np.allclose(both, split, atol=1e-13)
    assert np.all(attraction_matrix(basis, np.zeros((0, 3)), []) == 0)


def test_integral_archive_round_trip(tmp_path, small_basis):
    basis, scaffold = small_basis
    field = ChargeField(np.array([[0.0, 0.0, 3.0]]), np.array([0.5]))
    ints = compute_all(basis, scaffold, field)
    path = tmp_path / "ints.alch"
    ints.save(path)
    back = AlchemicalIntegrals.load(path)
    assert np.array_equal(back.g, ints.g) and np.array_equal(back.V_eq, ints.V_eq)
    assert all(np.array_equal(x, y) for a, b in zip(back.V_en, ints.V_en) for x, y in zip(a, b))
    assert back.charge_model == ints.charge_model
    assert back.matches(basis, field)
    assert not back.matches(basis, ChargeField(np.array([[0.0, 0.0, 3.0]]), np.array([0.6])))
    assert not back.matches(build_union_basis(diatomic_scaffold(("H", "Li"), 1.7)))


def test_archive_rejects_corrupt_files(tmp_path):
    path = tmp_path / "a.alch"
    write_archive(path, {"x": np.arange(6.0).reshape(2, 3)})
    assert np.array_equal(read_archive(path)["x"], np.arange(6.0).reshape(2, 3))
    data = path.read_bytes()
    (tmp_path / "bad_magic.alch").write_bytes(b"XXXX" + data[4:])
    (tmp_path / "short.alch").write_bytes(data[:-5])
    for name in ("bad_magic.alch", "short.alch"):
        with pytest.raises(ArchiveFormatError):
            read_archive(tmp_path / name)
