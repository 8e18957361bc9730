import numpy as np
import pytest

from latinterp.lattice import (
    CalderonNorm,
    CustomNorm,
    LpNorm,
    calderon_closed_form,
    concavity2_lower,
    conjugate_exponent,
    convexity2_lower,
    dual,
    interpolated_lattice,
    lp,
    power,
    SearchBudget,
)


def test_conjugate_exponent():
    assert conjugate_exponent(1.0) == np.inf
    assert conjugate_exponent(np.inf) == 1.0
    assert conjugate_exponent(2.0) == pytest.approx(2.0)
    assert conjugate_exponent(4 / 3) == pytest.approx(4.0)


def test_lp_values():
    x = np.array([3.0, -4.0])
    assert lp(2, 1.0)(x) == pytest.approx(7.0)
    assert lp(2, 2.0)(x) == pytest.approx(5.0)
    assert lp(2, np.inf)(x) == pytest.approx(4.0)
    assert lp(2, 2.0, [2.0, 1.0])(x) == pytest.approx(np.hypot(6.0, 4.0))


def test_lp_batch_matches_single():
    rng = np.random.default_rng(1)
    X = lp(5, 1.5, rng.uniform(0.5, 2.0, 5))
    U = rng.standard_normal((7, 5))
    batch = X(U)
    assert batch.shape == (7,)
    np.testing.assert_allclose(batch, [X(u) for u in U], rtol=1e-13)


def test_lp_rejects_bad_input():
    with pytest.raises(ValueError):
        LpNorm(2, 0.0)
    with pytest.raises(ValueError):
        LpNorm(2, 2.0, [1.0, 0.0])
    with pytest.raises(ValueError):
        lp(2, 2.0)(np.ones(3))


def test_dual_closed_form_is_conjugate():
    X = lp(3, 4 / 3, [1.0, 2.0, 0.5])
    D = dual(X)
    assert D.as_lp().p == pytest.approx(4.0)
    np.testing.assert_allclose(D.as_lp().weights, 1 / np.array([1.0, 2.0, 0.5]))


def test_dual_numeric_matches_closed_form():
    rng = np.random.default_rng(2)
    X = lp(3, 1.5, [1.0, 2.0, 0.5])
    Dn = dual(X, closed_form=False)
    Dc = dual(X)
    for _ in range(5):
        y = rng.standard_normal(3)
        assert Dn(y) == pytest.approx(Dc(y), rel=1e-6)


def test_custom_norm_gauge():
    # hull of (1,0), (0,1) is the l_1 ball; the unit box gives l_inf
    assert CustomNorm(np.eye(2))(np.array([1.0, -2.0])) == pytest.approx(3.0)
    assert CustomNorm([[1.0, 1.0]])(np.array([1.0, -2.0])) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        CustomNorm([[1.0, 0.0]])


def test_power_of_lp():
    # || |x|^(1/r) ||^r: the r-th power of l_p is l_(p/r)
    x = np.array([1.0, 2.0, 3.0])
    assert power(lp(3, 2.0), 0.5)(x) == pytest.approx(lp(3, 4.0)(x))
    assert power(lp(3, 2.0), 2.0)(x) == pytest.approx(6.0)


def test_power_triangle_failures_for_r_above_one():
    P = power(lp(2, 1.0), 2.0)
    assert P.triangle_failures(n_samples=200) > 0


def test_calderon_closed_form_exponent_and_weights():
    C = calderon_closed_form(lp(2, 1.0, [1.0, 4.0]), lp(2, np.inf, [4.0, 1.0]), 0.5)
    assert C.p == pytest.approx(2.0)
    np.testing.assert_allclose(C.weights, [2.0, 2.0])
    assert calderon_closed_form(lp(2, 1.0), lp(2, np.inf), 0.5)(np.ones(2)) == pytest.approx(np.sqrt(2))


def test_calderon_numeric_matches_closed_form():
    rng = np.random.default_rng(3)
    X0, X1 = lp(3, 1.0, [1.0, 2.0, 1.0]), lp(3, 2.0)
    C = CalderonNorm(X0, X1, 0.3)
    for _ in range(5):
        f = rng.standard_normal(3)
        b = C.bounds(f)
        ref = C.oracle(f)
        assert b.lower <= b.upper
        assert b.lower == pytest.approx(ref, rel=1e-6)
        assert b.upper == pytest.approx(ref, rel=1e-6)


def test_calderon_non_lp_factor_brackets():
    # l_1 given as a hull, so no closed form is used
    X0 = CustomNorm(np.eye(2))
    X1 = lp(2, np.inf)
    C = CalderonNorm(X0, X1, 0.5)
    b = C.bounds(np.array([1.0, 1.0]))
    assert b.lower <= b.upper
    assert b.upper == pytest.approx(np.sqrt(2), rel=1e-4)


def test_interpolated_lattice_trivial_couple():
    X = lp(3, 1.5)
    assert interpolated_lattice(X, X, 0.4) is X


def test_calderon_rejects_bad_theta():
    with pytest.raises(ValueError):
        CalderonNorm(lp(2, 1.0), lp(2, 2.0), 1.0)
    with pytest.raises(ValueError):
        CalderonNorm(lp(2, 1.0), lp(3, 2.0), 0.5)


def test_concavity_and_convexity_searches():
    budget = SearchBudget(k_max=3, starts=2, iters=10)
    # l_1 is 2-concave with constant 1 and l_inf is 2-convex with constant 1
    assert concavity2_lower(lp(3, 1.0), budget).value <= 1 + 1e-9
    assert convexity2_lower(lp(3, np.inf), budget).value <= 1 + 1e-9
    # l_inf^2 is not 2-concave with constant 1: (1,0),(0,1) gives sqrt(2)
    assert concavity2_lower(lp(2, np.inf), budget).value == pytest.approx(np.sqrt(2), rel=1e-6)
