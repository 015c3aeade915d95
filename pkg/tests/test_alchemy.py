import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alchemical.alchemy import (build_active_space, core_matrix, hamiltonian_parts, nuclear_terms, orthogonalize,
                                overlap_rank, second_quantize, site_potentials, spin_one_body, spin_two_body,
                                transform_one_body)
from alchemical.errors import DegenerateBasisError, ShapeError, SingularGeometryError
from alchemical.integrals import site_charges, species_charge
from alchemical.system import AlphaWeights, ChargeField, Scaffold


def _random_alpha(rng, counts):
    return AlphaWeights([rng.dirichlet(np.ones(c)) for c in counts])


@given(st.integers(2, 7), st.integers(0, 2 ** 31))
@settings(max_examples=40, deadline=None)
def test_orthogonalize_gives_orthonormal_columns(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    s = a @ a.T + 1e-3 * np.eye(n)
    x = orthogonalize(s)
    assert x.shape == (n, n)
    assert np.allclose(x.T @ s @ x, np.eye(n), atol=1e-8)


def test_orthogonalize_drops_small_eigenvalues():
    v = np.linalg.qr(np.random.default_rng(1).normal(size=(4, 4)))[0]
    s = v @ np.diag([2.0, 1.0, 1e-6, 1e-12]) @ v.T
    assert orthogonalize(s, 1e-8).shape == (4, 3)
    assert orthogonalize(s, 1e-5).shape == (4, 2)
    assert overlap_rank(s, 1e-8) == 3
    with pytest.raises(DegenerateBasisError):
        orthogonalize(s, 10.0)
    with pytest.raises(ValueError):
        orthogonalize(s, 0.0)


def test_orthogonalize_is_sign_deterministic():
    s = np.array([[1.0, 0.4], [0.4, 1.0]])
    x = orthogonalize(s)
    first = [col[np.nonzero(np.abs(col) > 1e-12)[0][0]] for col in x.T]
    assert all(f > 0 for f in first)


def test_active_space_is_orthonormal_and_ordered(dimer_base_integrals, dimer_active):
    x = dimer_active.X
    assert np.allclose(x.T @ dimer_base_integrals.S @ x, np.eye(dimer_active.n_orbitals), atol=1e-9)
    assert np.all(np.diff(dimer_active.orbital_energies) >= 0)
    assert dimer_active.n_qubits == 2 * dimer_active.n_orbitals
    full = build_active_space(dimer_base_integrals)
    assert full.n_orbitals == overlap_rank(dimer_base_integrals.S)
    assert np.allclose(full.orbital_energies[:dimer_active.n_orbitals], dimer_active.orbital_energies)
    with pytest.raises(ValueError):
        build_active_space(dimer_base_integrals, None, full.n_orbitals + 1)


def test_core_matrix_rejects_wrong_layout(dimer_base_integrals):
    with pytest.raises(ShapeError):
        core_matrix(dimer_base_integrals, AlphaWeights.uniform([3]))


def test_parts_reassemble_the_core_matrix(dimer_integrals, dimer_active, dimer_inputs):
    ints, inp = dimer_integrals[3], dimer_inputs[3]
    parts = hamiltonian_parts(ints, dimer_active, inp.scaffold, inp.field)
    alpha = _random_alpha(np.random.default_rng(5), inp.scaffold.species_counts)
    for on in (False, True):
        h = parts.one_body_base + sum(w * parts.site_blocks[i][s] for i, ws in enumerate(alpha.values)
                                      for s, w in enumerate(ws))
        if on:
            h = h + parts.field_block
        assert np.allclose(h, transform_one_body(core_matrix(ints, alpha, on), dimer_active), atol=1e-12)


def test_nuclear_terms_match_pairwise_sums(dimer_inputs):
    inp = dimer_inputs[2]
    sc, field = inp.scaffold, inp.field
    rng = np.random.default_rng(2)
    z = site_charges(sc, "all_electron")
    for _ in range(10):
        alpha = _random_alpha(rng, sc.species_counts)
        zbar = [float(np.dot(a, zi)) for a, zi in zip(alpha.values, z)]
        pos = sc.positions_bohr
        v_nn = sum(zbar[i] * zbar[j] / np.linalg.norm(pos[i] - pos[j])
                   for i, j in itertools.combinations(range(sc.n_sites), 2))
        v_nq = sum(zbar[i] * q / np.linalg.norm(pos[i] - r)
                   for i in range(sc.n_sites) for r, q in zip(field.positions_bohr, field.charges))
        got = nuclear_terms(sc, alpha, field)
        assert got[0] == pytest.approx(v_nn, abs=1e-12)
        assert got[1] == pytest.approx(v_nq, abs=1e-12)
    assert nuclear_terms(sc, AlphaWeights.uniform(sc.species_counts))[1] == 0.0


def test_nuclear_repulsion_is_bilinear_not_affine(dimer_inputs):
    sc = dimer_inputs[1].scaffold
    a = AlphaWeights.one_hot(sc.species_counts, (0, 0))
    b = AlphaWeights.one_hot(sc.species_counts, (2, 2))
    mid = AlphaWeights([0.5 * (x + y) for x, y in zip(a.values, b.values)])
    va, vb, vm = (nuclear_terms(sc, w)[0] for w in (a, b, mid))
    # Zbar is 6 on both sites at the midpoint, so V_nn is 36 / R rather than (1 + 121) / 2R
    r = np.linalg.norm(np.diff(sc.positions_bohr, axis=0))
    assert vm == pytest.approx(36 / r, rel=1e-12)
    assert vm != pytest.approx(0.5 * (va + vb))


def test_valence_model_makes_alkali_sites_identical():
    assert [species_charge(s, "valence") for s in ("H", "Li", "Na")] == [1.0, 1.0, 1.0]
    assert [species_charge(s, "all_electron") for s in ("H", "Li", "Na")] == [1.0, 3.0, 11.0]
    with pytest.raises(ValueError):
        species_charge("H", "bare")


def test_singular_geometries_are_rejected():
    sc = Scaffold.from_sites([(0, 0, 0), (0, 0, 1)], [("H",), ("H",)])
    with pytest.raises(SingularGeometryError):
        site_potentials(sc, ChargeField(np.array([[0.0, 0.0, 1.0]]), np.array([0.2])))
    twin = Scaffold.from_sites([(0, 0, 0), (0, 0, 0)], [("H",), ("H",)])
    with pytest.raises(SingularGeometryError):
        nuclear_terms(twin, AlphaWeights.uniform([1, 1]))


def test_spin_expansion_matches_explicit_loops():
    rng = np.random.default_rng(4)
    k = 3
    h = rng.normal(size=(k, k))
    g = rng.normal(size=(k, k, k, k))
    h1, g2 = spin_one_body(h), spin_two_body(g)
    for p, q in itertools.product(range(2 * k), repeat=2):
        assert h1[p, q] == (h[p // 2, q // 2] if p % 2 == q % 2 else 0.0)
    for p, q, r, s in itertools.product(range(2 * k), repeat=4):
        same = p % 2 == q % 2 and r % 2 == s % 2
        assert g2[p, q, r, s] == (g[p // 2, q // 2, r // 2, s // 2] if same else 0.0)


def test_second_quantize_constant(dimer_integrals, dimer_active, dimer_inputs):
    ints, inp = dimer_integrals[2], dimer_inputs[2]
    alpha = AlphaWeights.uniform(inp.scaffold.species_counts)
    v_nn, v_nq = nuclear_terms(inp.scaffold, alpha, inp.field)
    assert second_quantize(ints, dimer_active, alpha).constant == 0.0
    assert second_quantize(ints, dimer_active, alpha, False, inp.scaffold, inp.field).constant == v_nn
    on = second_quantize(ints, dimer_active, alpha, True, inp.scaffold, inp.field)
    assert on.constant == pytest.approx(v_nn + v_nq, abs=1e-14)
