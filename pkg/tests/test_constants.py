import numpy as np
import pytest

from latinterp.constants import (
    RademacherFamily,
    cotype2_lower,
    khinchine_kahane_check,
    operator_embedding_bound,
    rademacher_average,
    sign_patterns,
    tensor_cotype_factor,
    type2_interp_bound,
    type2_lower,
    vector_valued_cotype_bound,
    vector_valued_cotype_check,
)
from latinterp.lattice import SearchBudget, lp
from latinterp.registry import ConstantsRegistry
from latinterp.spaces import LatticeSpace, VectorValued, euclidean

BUDGET = SearchBudget(k_max=3, starts=2, iters=10)


def test_sign_patterns():
    P = sign_patterns(3)
    assert P.shape == (4, 3)
    assert np.all(P[:, 0] == 1)
    assert len({tuple(r) for r in P}) == 4


def test_rademacher_average_orthonormal_in_l2():
    fam = RademacherFamily(np.eye(3), euclidean(3))
    assert rademacher_average(fam, 2).value == pytest.approx(np.sqrt(3))
    assert rademacher_average(fam, 1).value == pytest.approx(np.sqrt(3))


def test_rademacher_monte_carlo_agrees_with_enumeration():
    rng = np.random.default_rng(0)
    space = LatticeSpace(lp(3, 1.0))
    V = rng.standard_normal((16, 3))
    mc = rademacher_average(RademacherFamily(V, space), 1, mc_samples=40000, seed=1)
    assert not mc.exact and mc.stderr > 0
    ex = rademacher_average(RademacherFamily(V[:14], space), 1)
    assert ex.exact
    # the 16-vector mean is not the 14-vector one; just check scale and finite error
    assert 0 < mc.value < np.abs(V).sum()


def test_rademacher_family_validation():
    with pytest.raises(ValueError):
        RademacherFamily(np.ones((2, 3)), euclidean(2))
    with pytest.raises(ValueError):
        rademacher_average(RademacherFamily(np.eye(2), euclidean(2)), moment=3)


def test_khinchine_kahane_slack_nonnegative():
    rng = np.random.default_rng(1)
    fam = RademacherFamily(rng.standard_normal((10, 4)), LatticeSpace(lp(4, np.inf)))
    assert khinchine_kahane_check(fam) >= 0


def test_cotype_of_linf2_and_type_of_l12():
    assert cotype2_lower(LatticeSpace(lp(2, np.inf)), BUDGET).value == pytest.approx(np.sqrt(2), rel=1e-6)
    assert type2_lower(LatticeSpace(lp(2, 1.0)), BUDGET).value == pytest.approx(np.sqrt(2), rel=1e-6)


def test_hilbert_space_constants_are_one():
    E = euclidean(3)
    assert cotype2_lower(E, BUDGET).value == pytest.approx(1.0, rel=1e-6)
    assert type2_lower(E, BUDGET).value == pytest.approx(1.0, rel=1e-6)


def test_registry_requires_provenance_and_known_kind():
    reg = ConstantsRegistry()
    with pytest.raises(ValueError):
        reg.add("l1^2", "T2_upper", 1.5, "")
    with pytest.raises(ValueError):
        reg.add("l1^2", "bogus", 1.5, "x")
    with pytest.raises(ValueError):
        reg.add("l1^2", "T2_upper", 0.5, "x")


def test_registry_override_feeds_bounds():
    reg = ConstantsRegistry()
    E = LatticeSpace(lp(2, 1.0))
    assert type2_interp_bound(E, E, 0.5, reg) is None
    reg.add(E.descriptor, "T2_upper", np.sqrt(2), "Banach-Mazur distance")
    assert type2_interp_bound(E, E, 0.5, reg).value == pytest.approx(np.sqrt(2))


def test_tensor_cotype_factor_l12():
    E = LatticeSpace(lp(2, 1.0))
    assert tensor_cotype_factor(E, E, 0.5).value == pytest.approx(2 ** 1.25)


def test_vector_valued_cotype_bound_and_check():
    X, E = lp(2, 1.0), euclidean(2)
    assert vector_valued_cotype_bound(X, E).value == pytest.approx(np.sqrt(2))
    rep = vector_valued_cotype_check(X, E, BUDGET)
    assert rep.status == "PASS"
    assert max(rep.values) <= np.sqrt(2) + 1e-6


def test_vector_valued_cotype_missing_entry_skips():
    rep = vector_valued_cotype_check(lp(2, 1.0), LatticeSpace(lp(2, 4 / 3)), BUDGET)
    assert rep.status == "SKIPPED"


def test_operator_embedding_bound_trivial_and_lattice():
    A = LatticeSpace(lp(2, 1.0))
    assert operator_embedding_bound(A, A, 0.5).value == 1.0
    B = LatticeSpace(lp(2, 2.0))
    e = operator_embedding_bound(A, B, 0.5)
    assert e is not None and e.value >= 1.0
    V = VectorValued(lp(2, 1.0), euclidean(2))
    assert operator_embedding_bound(V, VectorValued(lp(2, 2.0), euclidean(2)), 0.5) is not None
