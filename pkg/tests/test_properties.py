"""Invariants checked on generated inputs."""

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from latinterp import _kernels as K
from latinterp.constants import RademacherFamily, khinchine_kahane_check
from latinterp.interp import InterpCouple, SolverParams, interp_norm
from latinterp.lattice import CalderonNorm, calderon_closed_form, dual, lp
from latinterp.spaces import InjectiveTensor, LatticeSpace, ProjectiveTensor, VectorValued

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
CHEAP = SolverParams(degree=4, grid=48, restarts=1, temperatures=(1e-2, 1e-3), smoothing=(32, 0),
                     maxiter=40, eval_refine=8)

exponents = st.sampled_from([1.0, 4 / 3, 1.5, 2.0, 3.0, np.inf])
dims = st.integers(1, 4)
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def lattice_and_vectors(draw, count=2):
    n = draw(dims)
    p = draw(exponents)
    w = draw(arrays(float, n, elements=st.floats(0.25, 4.0)))
    vs = [draw(arrays(float, n, elements=finite)) for _ in range(count)]
    return lp(n, p, w), vs


@SETTINGS
@given(lattice_and_vectors(), st.floats(-5, 5, allow_nan=False))
def test_norm_axioms(data, c):
    X, (x, y) = data
    tol = 1e-10 * (1 + X(x) + X(y))
    assert X(x) >= 0
    assert X(x + y) <= X(x) + X(y) + tol
    assert X(c * x) == pytest.approx(abs(c) * X(x), rel=1e-10, abs=1e-12)
    # lattice property: |u| <= |v| pointwise implies ||u|| <= ||v||
    assert X(np.minimum(np.abs(x), np.abs(y))) <= X(np.abs(y)) + tol


@SETTINGS
@given(lattice_and_vectors())
def test_duality_pairing(data):
    X, (x, y) = data
    assert abs(x @ y) <= X(x) * dual(X)(y) * (1 + 1e-10) + 1e-12


@SETTINGS
@given(lattice_and_vectors(), lattice_and_vectors())
def test_vector_valued_triangle(a, b):
    X, (x1, x2) = a
    E, (e1, e2) = b
    V = VectorValued(X, LatticeSpace(E))
    u, v = np.kron(x1, e1), np.kron(x2, e2) + np.kron(x1, e2)
    assert V.norm(u + v) <= V.norm(u) + V.norm(v) + 1e-9 * (1 + V.norm(u) + V.norm(v))
    # the norm of an elementary tensor factorizes
    assert V.norm(u) == pytest.approx(X(x1) * E(e1), rel=1e-10, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 3), exponents, exponents, st.floats(0.1, 0.9),
       arrays(float, 3, elements=st.floats(0.01, 5.0)))
def test_calderon_between_closed_form_and_geometric_mean(n, p0, p1, t, f):
    f = f[:n]
    X0, X1 = lp(n, p0), lp(n, p1)
    C = CalderonNorm(X0, X1, t)
    b = C.bounds(f)
    assert b.lower <= b.upper * (1 + 1e-12)
    assert b.upper <= X0(f) ** (1 - t) * X1(f) ** t * (1 + 1e-9)
    ref = calderon_closed_form(X0, X1, t)(f)
    assert b.lower <= ref * (1 + 1e-6)
    assert b.upper >= ref * (1 - 1e-6)


@SETTINGS
@given(st.integers(1, 3), st.integers(1, 3), exponents, exponents, st.integers(0, 2 ** 31))
def test_injective_below_projective(a, b, p, q, seed):
    rng = np.random.default_rng(seed)
    A, B = LatticeSpace(lp(a, p)), LatticeSpace(lp(b, q))
    z = rng.standard_normal((1, a * b)) + 1j * rng.standard_normal((1, a * b))
    # attained value; the upper bound of a heuristic mode carries extra slack
    inj = InjectiveTensor(A, B).norm(z)[0]
    proj = ProjectiveTensor(A, B).norm_upper(z)[0]
    assert inj <= proj * (1 + 1e-9)


@SETTINGS
@given(st.integers(1, 10), st.integers(1, 4), exponents, st.integers(0, 2 ** 31))
def test_khinchine_kahane_slack(k, n, p, seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
    assert khinchine_kahane_check(RademacherFamily(V, LatticeSpace(lp(n, p)))) >= 0


needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


@st.composite
def mixed_specs(draw):
    n, m = draw(st.integers(1, 4)), draw(st.integers(1, 3))
    p, q = draw(exponents), draw(exponents)
    wo = draw(arrays(float, n, elements=st.floats(0.25, 4.0)))
    wi = draw(arrays(float, n * m, elements=st.floats(0.25, 4.0)))
    return (p, wo, q, wi, m), n * m


@needs_numba
@SETTINGS
@given(mixed_specs(), st.integers(0, 2 ** 31))
def test_kernel_backends_agree(spec_dim, seed):
    spec, d = spec_dim
    args = K._spec_args(spec)
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((5, d)) + 1j * rng.standard_normal((5, d))
    np.testing.assert_allclose(K.mixed_norm_numba(V, *args), K.mixed_norm_numpy(V, *args), rtol=1e-12)
    va, ga = K.mixed_norm_grad_numba(V, *args)
    vb, gb = K.mixed_norm_grad_numpy(V, *args)
    np.testing.assert_allclose(va, vb, rtol=1e-12)
    np.testing.assert_allclose(ga, gb, rtol=1e-9, atol=1e-12)
    X = V[:4]
    np.testing.assert_allclose(K.rademacher_sums_numba(X, *args), K.rademacher_sums_numpy(X, *args),
                               rtol=1e-10, atol=1e-12)


@needs_numba
@SETTINGS
@given(st.integers(1, 3), st.integers(1, 3), exponents, exponents, st.integers(0, 2 ** 31))
def test_injective_altmax_backends_agree(a, b, p, q, seed):
    rng = np.random.default_rng(seed)
    A, B = lp(a, p), lp(b, q)
    sa, sb = K._spec_args(A.mixed_spec), K._spec_args(B.mixed_spec)
    Z = rng.standard_normal((2, a, b)) + 1j * rng.standard_normal((2, a, b))
    Y0 = rng.standard_normal((2, 3, b)) + 0j
    Y0 /= dual(B)(Y0.reshape(-1, b)).reshape(2, 3, 1)
    ra = K.injective_altmax_numba(Z, sa, sb, Y0, 20)
    rb = K.injective_altmax_numpy(Z, sa, sb, Y0, 20)
    np.testing.assert_allclose(ra[0], rb[0], rtol=1e-8)


@settings(max_examples=6, deadline=None)
@given(st.integers(1, 3), exponents, exponents, st.floats(0.2, 0.8), st.integers(0, 2 ** 31))
def test_interp_sandwich_contains_calderon(n, p0, p1, t, seed):
    assume(p0 != p1)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    c = InterpCouple(LatticeSpace(lp(n, p0)), LatticeSpace(lp(n, p1)))
    b = interp_norm(c, x, t, CHEAP)
    ref = b.meta["calderon"]
    assert b.lower <= ref * (1 + 1e-6)
    assert b.upper >= ref * (1 - 1e-6)
