"""Factorization searches: diagonal (multiplier) factorizations of operators
into X(E) and factorizations through Hilbert space.

Both searches only ever return explicit factors, so the products they report
are upper bounds by construction; the lower bounds are operator norms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import intervals as iv
from .constants import SQRT2
from .interp import InterpCouple, SolverParams, FAST_PARAMS, interp_lower, interpolated_space
from .lattice import LatticeNorm, LpNorm
from .registry import DEFAULT_REGISTRY, ConstantsRegistry, Entry, combine
from .spaces import LatticeSpace, LinearMap, NormedSpace, OperatorSpace, VectorValued, euclidean, operator_norm


@dataclass(frozen=True)
class FactorBudget:
    restarts: int = 6
    iters: int = 60
    seed: int = 0


def _op_value_grad(S: OperatorSpace, M: np.ndarray):
    """Operator norm of M in S with its gradient G (dN = Re sum conj(G) dM)."""
    vals, G = S.norm_grad(M.reshape(1, -1))
    return float(vals[0]), G[0].reshape(M.shape)


def _op_upper(S: OperatorSpace, M: np.ndarray) -> float:
    return float(S.norm_upper(M.reshape(1, -1))[0])


# ---------------------------------------------------------------------------
# multiplier factorization
# ---------------------------------------------------------------------------


def diag_operator_norm(g, X: LatticeNorm):
    """||D_g: l_2^n -> X|| with its gradient in g (closed form for l_p)."""
    g = np.asarray(g, dtype=float)
    lpX = X.as_lp()
    if lpX is not None:
        w = lpX.weights
        if lpX.p >= 2:
            v = np.abs(g) * w
            i = int(np.argmax(v))
            grad = np.zeros_like(g)
            grad[i] = w[i]
            return float(v[i]), grad, True
        r = 1.0 / (1.0 / lpX.p - 0.5)
        Y = LpNorm(lpX.dim, r, w)
        return float(Y(g)), Y.grad(g), True
    S = OperatorSpace(euclidean(X.dim), LatticeSpace(X))
    val, G = _op_value_grad(S, np.diag(g.astype(complex)))
    return val, np.real(np.diag(G)), False


@dataclass
class MRFactorization:
    """T = (D_g (x) id) R with R: l_2^k -> l_2^n(E)."""

    g: np.ndarray
    R: LinearMap
    product: float
    r_norm: float
    g_norm: float
    input_norm: iv.CertifiedInterval
    X: LatticeNorm
    E: NormedSpace

    def reconstruct(self) -> np.ndarray:
        return np.repeat(self.g, self.E.dim)[:, None] * self.R.matrix


def maurey_rosenthal(T: LinearMap, X: LatticeNorm, E: NormedSpace, budget: FactorBudget = FactorBudget()) -> MRFactorization:
    """Minimize ||D_g: l_2^n -> X|| * ||R|| over positive g, R = T with fiber i divided by g_i."""
    n, m = X.dim, E.dim
    k = T.domain.dim
    if T.codomain.dim != n * m:
        raise ValueError("T must map into X(E)")
    M = np.asarray(T.matrix, dtype=complex)
    target = VectorValued(X, E)
    input_norm = operator_norm(LinearMap(M, euclidean(k), target))
    fibers = M.reshape(n, m, k)
    active = np.array([np.any(fibers[i] != 0) for i in range(n)])
    RS = OperatorSpace(euclidean(k), VectorValued(LpNorm(n, 2.0), E))
    if not active.any():
        g = np.ones(n)
        R = LinearMap(np.zeros_like(M), euclidean(k), VectorValued(LpNorm(n, 2.0), E))
        return MRFactorization(g, R, 0.0, 0.0, diag_operator_norm(g, X)[0], input_norm, X, E)
    idx = np.flatnonzero(active)

    def full(s):
        g = np.zeros(n)
        g[idx] = np.exp(s)
        return g

    def objective(s):
        g = full(s)
        dv, dg, _ = diag_operator_norm(g, X)
        R = (M.reshape(n, m * k) / np.where(g > 0, g, 1.0)[:, None]).reshape(n * m, k)
        rv, G = _op_value_grad(RS, R)
        if dv <= 0 or rv <= 0:
            return np.inf, np.zeros_like(s)
        # d R_i / d s_i = -R_i
        gr = -np.real(np.sum((np.conj(G) * R).reshape(n, m * k), axis=1))[idx] / rv
        gd = (dg * g)[idx] / dv
        return np.log(dv) + np.log(rv), gr + gd

    rng = np.random.default_rng(budget.seed)
    fnorm = np.sqrt(np.sum(np.abs(fibers) ** 2, axis=(1, 2)))[idx]
    starts = [np.zeros(idx.size), 0.5 * np.log(fnorm), np.log(fnorm)]
    while len(starts) < budget.restarts:
        starts.append(0.5 * np.log(fnorm) + rng.normal(scale=0.7, size=idx.size))
    best = (np.inf, None)
    for s0 in starts[: max(1, budget.restarts)]:
        res = minimize(objective, s0, jac=True, method="L-BFGS-B", options={"maxiter": budget.iters})
        for s in (s0, res.x):
            g = full(s)
            R = (M.reshape(n, m * k) / np.where(g > 0, g, 1.0)[:, None]).reshape(n * m, k)
            val = diag_operator_norm(g, X)
            prod = (val[0] if val[2] else _op_upper(OperatorSpace(euclidean(n), LatticeSpace(X)), np.diag(g + 0j))) \
                * _op_upper(RS, R)
            if prod < best[0]:
                best = (prod, s)
    g = full(best[1])
    R = (M.reshape(n, m * k) / np.where(g > 0, g, 1.0)[:, None]).reshape(n * m, k)
    dv, _, exact = diag_operator_norm(g, X)
    if not exact:
        dv = _op_upper(OperatorSpace(euclidean(n), LatticeSpace(X)), np.diag(g + 0j))
    rv = _op_upper(RS, R)
    # balance the two factors: ||D_g|| = ||R||
    c = np.sqrt(rv / dv)
    g, R, dv, rv = g * c, R / c, dv * c, rv / c
    return MRFactorization(g, LinearMap(R, euclidean(k), VectorValued(LpNorm(n, 2.0), E)),
                           dv * rv, rv, dv, input_norm, X, E)


def mr_bound_check(result: MRFactorization, registry: ConstantsRegistry = DEFAULT_REGISTRY,
                   tol: float = 1e-6) -> iv.CheckReport:
    """product <= sqrt(2) C_2(E) M_(2)(X) ||T||, and product >= ||T||."""
    bound = combine([registry.C2(result.E), registry.M2_concavity(result.X)],
                    lambda c, m: SQRT2 * c * m, "multiplier factorization bound")
    lhs = iv.CertifiedInterval.point(result.product)
    if result.product < result.input_norm.lower * (1 - 1e-9) - tol:
        return iv.CheckReport(iv.FAIL, lhs, result.input_norm, result.product - result.input_norm.lower,
                              detail="factorization product below the operator norm")
    if bound is None:
        return iv.CheckReport(iv.SKIPPED, lhs, detail="missing registry entry")
    rhs_val = bound.value * result.input_norm.upper
    status, margin = iv.inequality_status(result.product, rhs_val, tol)
    if bound.heuristic:
        status = iv.INFORMATIONAL
    return iv.CheckReport(status, lhs, iv.CertifiedInterval.point(rhs_val), margin, detail=bound.provenance)


# ---------------------------------------------------------------------------
# factorization through Hilbert space
# ---------------------------------------------------------------------------


@dataclass
class Gamma2Certificate:
    """T = R S with S: domain -> l_2^r and R: l_2^r -> codomain."""

    S: LinearMap
    R: LinearMap
    value: float
    r_norm: float
    s_norm: float

    def reconstruct(self) -> np.ndarray:
        return self.R.matrix @ self.S.matrix


def gamma2_norm(T: LinearMap, budget: FactorBudget = FactorBudget(), rank_tol: float = 1e-12) -> iv.CertifiedInterval:
    """Upper bound from explicit factorizations through l_2^rank(T); lower bound
    is the operator norm."""
    M = np.asarray(T.matrix, dtype=complex)
    op = operator_norm(T)
    U, sv, Vh = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(sv > rank_tol * max(sv.max(initial=0.0), 1e-300)))
    if r == 0:
        H = euclidean(1)
        cert = Gamma2Certificate(LinearMap(np.zeros((1, M.shape[1])), T.domain, H),
                                 LinearMap(np.zeros((M.shape[0], 1)), H, T.codomain), 0.0, 0.0, 0.0)
        return iv.CertifiedInterval(0.0, 0.0, op.lower_witness, cert, exact=True)
    A = U[:, :r] * np.sqrt(sv[:r])[None, :]
    B = np.sqrt(sv[:r])[:, None] * Vh[:r]
    H = euclidean(r)
    RS = OperatorSpace(H, T.codomain)
    SS = OperatorSpace(T.domain, H)
    real = T.domain.field == "real" and T.codomain.field == "real" and np.isrealobj(T.matrix)

    def unpack(z):
        L = z[: r * r].reshape(r, r)
        if not real:
            L = L + 1j * z[r * r:].reshape(r, r)
        return L

    def objective(z):
        L = unpack(z)
        try:
            Li = np.linalg.inv(L)
        except np.linalg.LinAlgError:
            return np.inf, np.zeros_like(z)
        R, S = A @ L, Li @ B
        rv, GR = _op_value_grad(RS, R)
        sv_, GS = _op_value_grad(SS, S)
        if rv <= 0 or sv_ <= 0:
            return np.inf, np.zeros_like(z)
        gL = A.conj().T @ GR / rv - Li.conj().T @ GS @ S.conj().T / sv_
        g = gL.real.ravel() if real else np.concatenate([gL.real.ravel(), gL.imag.ravel()])
        return np.log(rv) + np.log(sv_), g

    rng = np.random.default_rng(budget.seed)
    eye = np.eye(r)
    starts = [eye]
    while len(starts) < max(1, budget.restarts):
        P = rng.normal(scale=0.5, size=(r, r))
        if not real:
            P = P + 1j * rng.normal(scale=0.5, size=(r, r))
        starts.append(eye + P)
    best = None
    stagnated = False
    for L0 in starts:
        z0 = L0.real.ravel() if real else np.concatenate([L0.real.ravel(), L0.imag.ravel()])
        res = minimize(objective, z0, jac=True, method="L-BFGS-B", options={"maxiter": budget.iters})
        for z in (z0, res.x):
            L = unpack(z)
            if np.linalg.cond(L) > 1e12:
                continue
            R, S = A @ L, np.linalg.solve(L, B)
            rv, svv = _op_upper(RS, R), _op_upper(SS, S)
            if best is None or rv * svv < best[0]:
                best = (rv * svv, R, S, rv, svv)
        stagnated = stagnated or not np.all(np.isfinite(res.x))
    val, R, S, rv, svv = best
    c = np.sqrt(svv / rv)
    R, S, rv, svv = R * c, S / c, rv * c, svv / c
    cert = Gamma2Certificate(LinearMap(S, T.domain, H), LinearMap(R, H, T.codomain), rv * svv, rv, svv)
    lower = min(op.lower, cert.value)
    return iv.CertifiedInterval(lower, cert.value, lower_witness=op.lower_witness, upper_witness=cert,
                                status=iv.STAGNATED_STATUS if stagnated else iv.CONVERGED,
                                exact=op.exact and abs(cert.value - op.lower) <= 1e-9 * max(1.0, op.lower))


def gamma2_interp_check(E0: NormedSpace, E1: NormedSpace, F0: NormedSpace, F1: NormedSpace, theta: float,
                        operators, e_bound: Entry | None, f_bound: Entry | None,
                        params: SolverParams = FAST_PARAMS, budget: FactorBudget = FactorBudget(),
                        tol: float = 1e-3) -> iv.CheckReport:
    """Norm of T in the couple of Hilbert-factorable operator spaces against
    (embedding bound of E) (embedding bound of F) gamma_2(T: [E0,E1]_t' -> [F0,F1]_t).

    The left side is bounded below by the interpolation norm in the couple of
    plain operator spaces (gamma_2 dominates the operator norm). Without
    proven embedding bounds the verdict is INFORMATIONAL.
    """
    Et = interpolated_space(InterpCouple(E0, E1), theta)
    Ft = interpolated_space(InterpCouple(F0, F1), theta)
    couple = InterpCouple(OperatorSpace(E0.dual(), F0), OperatorSpace(E1.dual(), F1))
    status, worst, values = iv.PASS, np.inf, []
    informational = e_bound is None or f_bound is None or e_bound.heuristic or f_bound.heuristic
    c = (e_bound.value if e_bound else 1.0) * (f_bound.value if f_bound else 1.0)
    for T in operators:
        T = np.asarray(T, dtype=complex)
        g2 = gamma2_norm(LinearMap(T, Et.dual(), Ft), budget)
        lhs = interp_lower(couple, T.reshape(-1), theta, params).value
        rhs = c * g2.upper
        st, margin = iv.inequality_status(lhs, rhs, tol)
        values.append((lhs, rhs, margin))
        worst = min(worst, margin)
        if st == iv.FAIL:
            status = iv.FAIL
    if informational:
        status = iv.INFORMATIONAL
    return iv.CheckReport(status, margin=worst, values=values)
