import numpy as np
import pytest

from latinterp.interp import (
    FAST_PARAMS,
    InterpCouple,
    SolverParams,
    contraction_check,
    edge_grid,
    interp_lower,
    interp_norm,
    interp_upper,
    tensor_embedding_estimate,
    EstimateBudget,
    zeta_of,
)
from latinterp.lattice import lp
from latinterp.spaces import InjectiveTensor, LatticeSpace

CHEAP = SolverParams(degree=2, grid=24, restarts=1, temperatures=(1e-2, 1e-3), smoothing=(0, 0),
                     maxiter=30, eval_refine=4, width_tol=0.5)


def couple(p0, p1, n=2, w0=None, w1=None):
    return InterpCouple(LatticeSpace(lp(n, p0, w0)), LatticeSpace(lp(n, p1, w1)))


def test_zeta_maps_theta_to_origin_and_edges_to_circle():
    assert abs(zeta_of(0.3, 0.3)) < 1e-12
    for edge in (0, 1):
        z = edge + 1j * np.linspace(-5, 5, 11)
        np.testing.assert_allclose(np.abs(zeta_of(z, 0.3)), 1.0, atol=1e-12)


def test_edge_grid_covers_arcs():
    z0, h0 = edge_grid(0.25, 10, 0)
    z1, h1 = edge_grid(0.25, 10, 1)
    assert h0 == pytest.approx(2 * np.pi * 0.75 / 10)
    assert h1 == pytest.approx(2 * np.pi * 0.25 / 10)
    np.testing.assert_allclose(np.abs(np.concatenate([z0, z1])), 1.0)


@pytest.mark.parametrize("x,expected", [((1.0, 1.0), np.sqrt(2)), ((1.0, 0.0), 1.0)])
def test_l1_linf_midpoint(x, expected):
    b = interp_norm(couple(1.0, np.inf), np.array(x), 0.5, FAST_PARAMS)
    assert b.lower <= expected * (1 + 1e-6)
    assert b.upper >= expected * (1 - 1e-6)
    assert b.rel_width <= 0.05
    assert b.meta["calderon"] == pytest.approx(expected)


def test_weighted_scalar_couple():
    c = InterpCouple(LatticeSpace(lp(1, 2.0, [1.0])), LatticeSpace(lp(1, 2.0, [4.0])))
    b = interp_norm(c, np.array([1.0]), 0.5, CHEAP)
    assert b.lower == pytest.approx(2.0, rel=1e-6)
    assert b.upper == pytest.approx(2.0, rel=1e-6)


def test_l1_l2_three_dims_matches_l43():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    b = interp_norm(couple(1.0, 2.0, 3), x, 0.5, FAST_PARAMS)
    ref = lp(3, 4 / 3)(np.abs(x))
    assert b.lower <= ref * (1 + 1e-6) <= b.upper * (1 + 2e-6)
    assert b.rel_width <= 0.1


def test_trivial_couple_is_exact():
    c = couple(1.5, 1.5, 3)
    x = np.array([1.0, -2.0, 0.5])
    b = interp_norm(c, x, 0.4, CHEAP)
    ref = lp(3, 1.5)(x)
    assert b.lower <= ref * (1 + 1e-9)
    assert b.upper == pytest.approx(ref, rel=1e-9)
    assert b.rel_width <= 1e-3


def test_zero_vector():
    assert interp_upper(couple(1.0, 2.0), np.zeros(2), 0.5, CHEAP).value == 0.0
    assert interp_lower(couple(1.0, 2.0), np.zeros(2), 0.5, CHEAP).value == 0.0


def test_theta_validation():
    with pytest.raises(ValueError):
        interp_norm(couple(1.0, 2.0), np.ones(2), 1.0, CHEAP)
    with pytest.raises(ValueError):
        interp_norm(couple(1.0, 2.0), np.ones(3), 0.5, CHEAP)


def test_sweep_is_monotone():
    b = interp_norm(couple(1.0, 2.0, 3), np.array([1.0, 0.3, -2.0]), 0.3, FAST_PARAMS)
    widths = [hi - lo for _, lo, hi in b.meta["sweep"]]
    assert all(w2 <= w1 + 1e-12 for w1, w2 in zip(widths, widths[1:]))


def test_injective_couple_bracket():
    a, b = LatticeSpace(lp(2, 1.0)), LatticeSpace(lp(2, 2.0))
    c = InterpCouple(InjectiveTensor(a, a), InjectiveTensor(b, b))
    z = np.array([1.0, 0.5, -0.5, 1.0])
    r = interp_norm(c, z, 0.5, CHEAP, oracle=False)
    assert 0 < r.lower <= r.upper
    # never worse than the log-convexity bound from the endpoint upper norms
    n0, n1 = c.space0.norm_upper(z[None, :])[0], c.space1.norm_upper(z[None, :])[0]
    assert r.upper <= np.sqrt(n0 * n1) * (1 + 1e-6)


def test_contraction_on_identity():
    M0, M1 = LatticeSpace(lp(2, 1.0)), LatticeSpace(lp(2, 2.0))
    rep = contraction_check(M0, M1, M0, M1, 0.5, [np.eye(2)], CHEAP)
    assert rep.status == "PASS"


def test_embedding_estimate_at_least_one():
    M0, M1 = LatticeSpace(lp(2, 1.0)), LatticeSpace(lp(2, 2.0))
    est = tensor_embedding_estimate(M0, M1, M0, M1, 0.5,
                                    EstimateBudget(samples=1, rank_one=1, improve_steps=0, params=CHEAP))
    assert est.value >= 1 - 1e-3
