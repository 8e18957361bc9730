import numpy as np
import pytest

from latinterp.lattice import lp
from latinterp.spaces import (
    InjectiveTensor,
    LatticeSpace,
    LinearMap,
    OperatorSpace,
    ProjectiveTensor,
    VectorValued,
    diag_norm_identity,
    euclidean,
    injective_norm,
    operator_norm,
    tensor_extension_norm,
)


def test_vector_valued_norm_is_mixed():
    S = VectorValued(lp(2, 1.0), LatticeSpace(lp(3, 2.0)))
    v = np.array([3.0, 4.0, 0.0, 0.0, 0.0, 2.0])
    assert S.norm(v) == pytest.approx(7.0)
    assert S.dim == 6


def test_vector_valued_dual():
    S = VectorValued(lp(2, 4 / 3), LatticeSpace(lp(2, 1.0)))
    D = S.dual()
    assert D.X.as_lp().p == pytest.approx(4.0)
    assert D.E.lattice.as_lp().p == np.inf


def test_injective_l2_is_spectral_norm():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    b = injective_norm(Z, euclidean(3), euclidean(4))
    assert b.exact
    assert b.lower == pytest.approx(np.linalg.norm(Z, 2))


def test_injective_linf_factor_is_row_max():
    rng = np.random.default_rng(1)
    Z = rng.standard_normal((3, 2))
    A, B = LatticeSpace(lp(3, np.inf)), LatticeSpace(lp(2, 1.0))
    # sup over l_1 unit vectors x' of ||Z^T x'||_1: the largest row l_1 norm
    assert injective_norm(Z, A, B).lower == pytest.approx(np.abs(Z).sum(axis=1).max())


def test_injective_altmax_brackets_exact_value():
    # l_1^2 (x) l_1^2 real: injective norm of Z is max over sign vectors
    Z = np.array([[1.0, 2.0], [3.0, -1.0]])
    A = LatticeSpace(lp(2, 1.0), "real")
    exact = injective_norm(Z, A, A)
    assert exact.exact
    signs = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], float)
    ref = max(np.abs(Z.T @ s).sum() for s in signs)
    assert exact.lower == pytest.approx(ref)
    C = LatticeSpace(lp(2, 1.5))
    b = injective_norm(Z, C, C)
    assert b.lower <= b.upper


def test_projective_dual_pairing():
    rng = np.random.default_rng(2)
    A, B = LatticeSpace(lp(3, np.inf)), LatticeSpace(lp(2, 2.0))
    inj, proj = InjectiveTensor(A, B), ProjectiveTensor(A.dual(), B.dual())
    assert proj.exact
    for _ in range(5):
        z = rng.standard_normal(6)
        y = rng.standard_normal(6)
        assert abs(z @ y) <= inj.norm(z) * proj.norm(y) * (1 + 1e-9)


def test_operator_norm_identity_l1_to_linf():
    T = LinearMap(np.eye(2), LatticeSpace(lp(2, 1.0)), LatticeSpace(lp(2, np.inf)))
    assert operator_norm(T).lower == pytest.approx(1.0)
    S = OperatorSpace(LatticeSpace(lp(2, 1.0)), LatticeSpace(lp(2, np.inf)))
    assert S.norm(np.eye(2).reshape(-1)) == pytest.approx(1.0)


def test_operator_norm_linf_to_l1():
    T = LinearMap(np.eye(2), LatticeSpace(lp(2, np.inf), "real"), LatticeSpace(lp(2, 1.0), "real"))
    assert operator_norm(T).lower == pytest.approx(2.0)


def test_linear_map_shape_check():
    with pytest.raises(ValueError):
        LinearMap(np.eye(3), euclidean(2), euclidean(3))


def test_diag_norm_identity_anchor():
    lhs, rhs = diag_norm_identity([1.0, 1.0], lp(2, 1.0))
    assert lhs.lower == pytest.approx(np.sqrt(2), rel=1e-9)
    assert rhs == pytest.approx(np.sqrt(2), rel=1e-9)


def test_diag_norm_identity_requires_concavity():
    with pytest.raises(ValueError):
        diag_norm_identity([1.0, 1.0], lp(2, 4.0))


def test_tensor_extension_matches_scalar_case():
    lam = np.array([0.5, 2.0])
    scalar, _ = diag_norm_identity(lam, lp(2, 1.0))
    ext = tensor_extension_norm(lam, lp(2, 1.0), euclidean(2))
    assert ext.lower >= scalar.lower * (1 - 1e-6)
