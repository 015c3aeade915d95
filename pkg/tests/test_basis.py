import numpy as np
import pytest

from alchemical.basis import (BOND_LENGTHS, build_union_basis, diatomic_scaffold, load_sto3g, mean_bond_length,
                              primitive_norm)
from alchemical.errors import UnsupportedSpeciesError
from alchemical.integrals import overlap_matrix
from alchemical.system import Scaffold


@pytest.mark.parametrize("element,n_functions,z,core", [
    ("H", 1, 1, 0), ("Li", 5, 3, 2), ("C", 5, 6, 2), ("O", 5, 8, 2), ("Na", 9, 11, 10), ("S", 9, 16, 10),
])
def test_species_layout(element, n_functions, z, core):
    sb = load_sto3g(element)
    assert (sb.n_functions, sb.total_z, sb.core_electrons) == (n_functions, z, core)
    assert sb.valence_charge == z - core


def test_unsupported_species():
    with pytest.raises(UnsupportedSpeciesError):
        load_sto3g("Fe")


@pytest.mark.parametrize("element", ["H", "Li", "Na", "S"])
def test_contracted_functions_are_normalized(element):
    basis = build_union_basis(Scaffold.from_sites([(0.3, -0.1, 0.2)], [(element,)]))
    assert np.allclose(np.diag(overlap_matrix(basis)), 1.0, atol=1e-10)


def test_primitive_norm_closed_form():
    # s: (2a/pi)^(3/4); p: that times 2 sqrt(a)
    a = 0.83
    s = (2 * a / np.pi) ** 0.75
    assert primitive_norm(a, (0, 0, 0)) == pytest.approx(s, rel=1e-14)
    assert primitive_norm(a, (0, 1, 0)) == pytest.approx(s * 2 * np.sqrt(a), rel=1e-14)


def test_union_basis_order_and_tags():
    sc = Scaffold.from_sites([(0, 0, 0), (0, 0, 2)], [("H", "Li", "Na"), ("H", "Li", "Na")])
    basis = build_union_basis(sc)
    assert len(basis) == 2 * (1 + 5 + 9)
    assert basis.indices(0, 0) == [0]
    assert basis.indices(0, 1) == list(range(1, 6))
    assert basis.indices(1, 2) == list(range(21, 30))
    assert [f.shell for f in (basis[i] for i in basis.indices(0, 1))] == ["1s", "2s", "2p", "2p", "2p"]
    assert [f.component for f in (basis[i] for i in basis.indices(0, 1))][2:] == ["x", "y", "z"]


def test_union_basis_is_near_singular_but_full_rank():
    sc = Scaffold.from_sites([(0, 0, 0)], [("H", "Li", "Na")])
    eig = np.linalg.eigvalsh(overlap_matrix(build_union_basis(sc)))
    assert eig.min() > 0 and eig.min() < 1e-2


def test_bond_lengths():
    assert all(v > 0 for v in BOND_LENGTHS.values())
    assert mean_bond_length(("H", "Li", "Na")) == pytest.approx(2.1366, abs=1e-4)
    sc = diatomic_scaffold(("H", "Li"), 1.5)
    assert np.allclose(sc.positions, [[0, 0, -0.75], [0, 0, 0.75]])
    with pytest.raises(KeyError):
        mean_bond_length(("H", "Fe"))
