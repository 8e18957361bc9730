"""Finite-dimensional lattice norms on R^n and the constructions built on them.

Every norm acts on absolute values, so evaluating at a real or complex vector
gives the norm of its modulus vector. Closed-form families (weighted l_p) are
exact; duals, Calderon products and custom hulls are evaluated by convex
optimization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.optimize import linprog, minimize as _scipy_minimize, nnls

from . import intervals as iv
from ._kernels import _pnorm_rows_numpy
from .registry import DEFAULT_REGISTRY, ConstantsRegistry, Entry, combine

TOL_CLOSED = 1e-6
TOL_OPT = 1e-3


def minimize(*args, **kwargs):
    """scipy.optimize.minimize without SLSQP's bound-clipping warnings."""
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", category=RuntimeWarning)
        return _scipy_minimize(*args, **kwargs)


def conjugate_exponent(p: float) -> float:
    if p == 1.0:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _fmt_p(p: float) -> str:
    if np.isinf(p):
        return "inf"
    fr = Fraction(p).limit_denominator(64)
    if abs(float(fr) - p) < 1e-12:
        return str(fr)
    return f"{p:.6g}"


def _as_rows(x, dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected vectors of length {dim}, got shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries in input vector")
    return np.abs(arr).astype(float), single


class LatticeNorm:
    """Base class: a lattice norm on R^dim.

    Subclasses implement ``_eval`` on a (B, dim) array of nonnegative rows.
    """

    dim: int
    unverified_normed: bool = False

    def __call__(self, x):
        U, single = _as_rows(x, self.dim)
        out = self._eval(U)
        return float(out[0]) if single else out

    def _eval(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, u) -> np.ndarray:
        """A norming functional at u >= 0 (a subgradient of the norm).

        The default is a central difference; subclasses override it.
        """
        u = np.abs(np.asarray(u, dtype=float))
        h = 1e-7 * max(1.0, u.max())
        E = np.eye(self.dim) * h
        up = self._eval(u[None, :] + E)
        dn = self._eval(np.maximum(u[None, :] - E, 0.0))
        return (up - dn) / (2 * h)

    def bounds(self, x) -> iv.CertifiedInterval:
        v = self(x)
        return iv.CertifiedInterval.point(v)

    def as_lp(self) -> "LpNorm | None":
        return None

    def dual_norm_of(self, phi) -> float | None:
        """Exact dual norm of phi if a closed form exists, else None."""
        lp = self.as_lp()
        return None if lp is None else lp.dual()(phi)

    @property
    def descriptor(self) -> str:
        raise NotImplementedError

    def analytic_constant(self, kind, registry: ConstantsRegistry) -> Entry | None:
        return None

    def __repr__(self):
        return self.descriptor


def eval_norm(X: LatticeNorm, x) -> float:
    """Norm of one vector; raises on dimension mismatch or non-finite input."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("eval_norm expects a single vector")
    return X(x)


# ---------------------------------------------------------------------------
# closed-form families
# ---------------------------------------------------------------------------


class LpNorm(LatticeNorm):
    """||x|| = ||w * x||_p, with optional positive weights w."""

    def __init__(self, dim: int, p: float, weights=None):
        if dim < 1:
            raise ValueError("dim must be positive")
        p = float(p)
        if not p > 0:
            raise ValueError("p must be positive")
        self.dim = int(dim)
        self.p = p
        w = np.ones(self.dim) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (self.dim,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite, one per coordinate")
        self.weights = w
        self.unverified_normed = p < 1.0

    @property
    def weighted(self) -> bool:
        return not np.allclose(self.weights, 1.0)

    def _eval(self, U):
        return _pnorm_rows_numpy(U * self.weights, self.p)

    def grad(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        a = u * self.weights
        if np.isinf(self.p):
            g = np.zeros(self.dim)
            if a.max() > 0:
                g[int(np.argmax(a))] = self.weights[int(np.argmax(a))]
            return g
        val = _pnorm_rows_numpy(a[None, :], self.p)[0]
        if val == 0:
            return np.zeros(self.dim)
        if self.p == 1.0:
            return self.weights.copy()
        return self.weights * (a / val) ** (self.p - 1.0)

    def as_lp(self):
        return self

    def dual(self) -> "LpNorm":
        if self.p < 1:
            raise ValueError("dual of a quasi-norm is not supported")
        return LpNorm(self.dim, conjugate_exponent(self.p), 1.0 / self.weights)

    @property
    def mixed_spec(self):
        return (self.p, self.weights, 1.0, np.ones(self.dim), 1)

    @property
    def descriptor(self):
        base = f"l{_fmt_p(self.p)}^{self.dim}"
        if self.weighted:
            base += "[w=" + ",".join(f"{w:.6g}" for w in self.weights) + "]"
        return base

    def analytic_constant(self, kind, registry):
        p = self.p
        prov = "l_p is r-convex for r <= p and r-concave for r >= p, constant 1"
        if kind == "M2_concavity_upper":
            return Entry(1.0, prov) if p <= 2 else None
        if kind == "M2_convexity_upper":
            return Entry(1.0, prov) if p >= 2 else None
        if isinstance(kind, tuple) and len(kind) == 2:
            name, r = kind
            if name == "convexity" and r <= p:
                return Entry(1.0, prov)
            if name == "concavity" and r >= p:
                return Entry(1.0, prov)
        return None


def lp(dim: int, p: float, weights=None) -> LpNorm:
    return LpNorm(dim, p, weights)


class CustomNorm(LatticeNorm):
    """Gauge of the solid convex hull of finitely many generating points."""

    def __init__(self, points):
        V = np.abs(np.atleast_2d(np.asarray(points, dtype=float)))
        if V.ndim != 2 or V.shape[0] < 1:
            raise ValueError("need at least one generating point")
        if not np.all(np.isfinite(V)):
            raise ValueError("non-finite generating point")
        if np.any(V.max(axis=0) <= 0):
            raise ValueError("the hull must reach every coordinate axis")
        self.points = V
        self.dim = V.shape[1]

    def _solve(self, u):
        res = linprog(-u, A_ub=self.points, b_ub=np.ones(len(self.points)),
                      bounds=[(0, None)] * self.dim, method="highs")
        if res.status != 0:
            raise RuntimeError(f"gauge LP failed: {res.message}")
        return -res.fun, res.x

    def _eval(self, U):
        return np.array([self._solve(u)[0] if u.any() else 0.0 for u in U])

    def grad(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        return self._solve(u)[1] if u.any() else np.zeros(self.dim)

    def dual_norm_of(self, phi):
        return float(np.max(self.points @ np.abs(phi)))

    @property
    def descriptor(self):
        return "hull(" + ";".join(",".join(f"{v:.6g}" for v in row) for row in self.points) + ")"


# ---------------------------------------------------------------------------
# constraint helpers for the convex programs below
# ---------------------------------------------------------------------------


def _embed(vals, support, dim):
    out = np.zeros(dim)
    out[support] = vals
    return out


def _log_ball_constraints(X: LatticeNorm, support):
    """SLSQP 'ineq' constraint(s) encoding ||exp(v)|| <= 1 on the support."""
    lpX = X.as_lp()
    if lpX is not None and np.isinf(lpX.p):
        lw = np.log(lpX.weights[support])
        return [{"type": "ineq", "fun": lambda v: -(v + lw), "jac": lambda v: -np.eye(v.size)}]
    if lpX is not None:
        p = lpX.p
        lw = np.log(lpX.weights[support])

        def fun(v):
            z = p * (v + lw)
            m = z.max()
            return np.array([-(m + np.log(np.exp(z - m).sum())) / p])

        def jac(v):
            z = p * (v + lw)
            e = np.exp(z - z.max())
            return -(e / e.sum())[None, :]

        return [{"type": "ineq", "fun": fun, "jac": jac}]

    dim = X.dim

    def fun_g(v):
        return np.array([-np.log(X(_embed(np.exp(v), support, dim)))])

    def jac_g(v):
        u = _embed(np.exp(v), support, dim)
        return -(X.grad(u)[support] * np.exp(v) / X(u))[None, :]

    return [{"type": "ineq", "fun": fun_g, "jac": jac_g}]


def _linear_ball_constraints(X: LatticeNorm, support, offset=0, nvars=None):
    """SLSQP constraint(s) encoding ||x|| <= 1 for x >= 0 on the support.

    The variables for X occupy slots [offset, offset + len(support)) of a
    vector of length nvars.
    """
    s = len(support)
    nvars = s if nvars is None else nvars
    sl = slice(offset, offset + s)
    lpX = X.as_lp()
    dim = X.dim
    if lpX is not None and np.isinf(lpX.p):
        w = lpX.weights[support]
        J = np.zeros((s, nvars))
        J[:, sl] = -np.diag(w)
        return [{"type": "ineq", "fun": lambda z: 1.0 - w * z[sl], "jac": lambda z: J}]
    if lpX is not None and lpX.p == 1.0:
        w = lpX.weights[support]
        J = np.zeros((1, nvars))
        J[0, sl] = -w
        return [{"type": "ineq", "fun": lambda z: np.array([1.0 - w @ z[sl]]), "jac": lambda z: J}]

    def fun(z):
        return np.array([1.0 - X(_embed(np.maximum(z[sl], 0.0), support, dim))])

    def jac(z):
        J = np.zeros((1, nvars))
        J[0, sl] = -X.grad(_embed(np.maximum(z[sl], 0.0), support, dim))[support]
        return J

    return [{"type": "ineq", "fun": fun, "jac": jac}]


# ---------------------------------------------------------------------------
# duals
# ---------------------------------------------------------------------------


def _power_block_max(c, s, p, w):
    """argmax of sum c_i g_i^s over ||g||_{l_p(w)} <= 1, for 0 < s < 1 <= p."""
    if np.isinf(p):
        return 1.0 / w
    g = (c * w ** (-p)) ** (1.0 / (p - s))
    nrm = np.linalg.norm(w * g, p)
    return g / nrm if nrm > 0 else g


def _geometric_mean_alternate(yS, a, b, t, iters=2000):
    """Exact block maximization for weighted l_p factors (a, b are LpNorms)."""
    pa, wa, pb, wb = a.p, a.weights, b.p, b.weights
    g = _power_block_max(yS, 1.0 - t, pa, wa)
    h = _power_block_max(yS, t, pb, wb)
    val = yS @ (g ** (1 - t) * h ** t)
    ok = False
    for _ in range(iters):
        g = _power_block_max(yS * h ** t, 1.0 - t, pa, wa)
        h = _power_block_max(yS * g ** (1 - t), t, pb, wb)
        new = yS @ (g ** (1 - t) * h ** t)
        if new - val <= 1e-15 * new:
            ok = True
            val = max(val, new)
            break
        val = new
    return g, h, ok


def _geometric_mean_max(u, S, A: LatticeNorm, B: LatticeNorm, t: float, start=None):
    """sup of <u, g^(1-t) h^t> over g, h >= 0 supported on S with ||g||_A <= 1
    and ||h||_B <= 1.

    The objective is concave. For weighted l_p factors each block has a
    closed-form maximizer and block ascent is used; otherwise SLSQP.
    """
    s = S.size
    a, b = A.as_lp(), B.as_lp()
    if a is not None and b is not None:
        yS = u[S]
        ga, hb, ok = _geometric_mean_alternate(
            yS, LpNorm(s, a.p, a.weights[S]), LpNorm(s, b.p, b.weights[S]), t)
        g, h = _embed(ga, S, A.dim), _embed(hb, S, A.dim)
        g, h = g / max(A(g), 1e-300), h / max(B(h), 1e-300)
        return float(u @ (g ** (1 - t) * h ** t)), g, h, ok
    n = A.dim
    yS = u[S]

    def obj(z):
        g, h = np.maximum(z[:s], 1e-300), np.maximum(z[s:], 1e-300)
        return -yS @ (g ** (1 - t) * h ** t)

    def jac(z):
        g, h = np.maximum(z[:s], 1e-300), np.maximum(z[s:], 1e-300)
        return -np.concatenate([yS * (1 - t) * (h / g) ** t, yS * t * (g / h) ** (1 - t)])

    cons = _linear_ball_constraints(A, S, 0, 2 * s) + _linear_ball_constraints(B, S, s, 2 * s)
    if start is None:
        g0 = _embed(yS, S, n)
        z0 = np.concatenate([yS / A(g0), yS / B(g0)])
    else:
        z0 = np.concatenate([start[0][S] / A(start[0]), start[1][S] / B(start[1])])
    res = minimize(obj, z0, jac=jac, method="SLSQP", constraints=cons,
                   bounds=[(1e-14, None)] * (2 * s), options={"ftol": 1e-15, "maxiter": 500})
    g = _embed(np.maximum(res.x[:s], 0.0), S, n)
    h = _embed(np.maximum(res.x[s:], 0.0), S, n)
    g, h = g / max(A(g), 1e-300), h / max(B(h), 1e-300)
    return float(u @ (g ** (1 - t) * h ** t)), g, h, bool(res.success)


class DualNorm(LatticeNorm):
    """y -> sup{ <x, |y|> : ||x||_base <= 1 }, computed by convex maximization."""

    def __init__(self, base: LatticeNorm, starts: int = 2):
        self.base = base
        self.dim = base.dim
        self.starts = starts
        self._cache: dict = {}

    def _solve(self, u):
        key = u.tobytes()
        if key in self._cache:
            return self._cache[key]
        S = np.flatnonzero(u > 0)
        if S.size == 0:
            out = (0.0, np.zeros(self.dim), True)
            self._cache[key] = out
            return out
        if isinstance(self.base, CustomNorm):
            vals = self.base.points @ u
            j = int(np.argmax(vals))
            out = (float(vals[j]), self.base.points[j].copy(), True)
            self._cache[key] = out
            return out
        if isinstance(self.base, CalderonNorm):
            out = self._solve_calderon(u, S)
            self._cache[key] = out
            return out
        yS = u[S]
        cons = _linear_ball_constraints(self.base, S)
        best = (-np.inf, None, False)
        starts = [yS, np.ones(S.size)]
        for x0 in starts[: max(1, self.starts)]:
            x0 = x0 / self.base(_embed(x0, S, self.dim))
            res = minimize(lambda x: -yS @ x, x0, jac=lambda x: -yS, method="SLSQP",
                           constraints=cons, bounds=[(0, None)] * S.size,
                           options={"ftol": 1e-13, "maxiter": 400})
            x = _embed(np.maximum(res.x, 0.0), S, self.dim)
            nx = self.base(x)
            val = float(u @ x / nx) if nx > 0 else 0.0
            if val > best[0]:
                best = (val, x / nx, bool(res.success))
        self._cache[key] = best
        return best

    def _solve_calderon(self, u, S):
        # the Calderon unit ball is { g^(1-t) h^t : ||g||_0 <= 1, ||h||_1 <= 1 }
        C: CalderonNorm = self.base
        val, g, h, ok = _geometric_mean_max(u, S, C.X0, C.X1, C.theta)
        return val, g ** (1 - C.theta) * h ** C.theta, ok

    def _eval(self, U):
        return np.array([self._solve(u)[0] if u.any() else 0.0 for u in U])

    def grad(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        return self._solve(u)[1] if u.any() else np.zeros(self.dim)

    def bounds(self, x, slack: float = TOL_OPT):
        if not np.any(x):
            return iv.CertifiedInterval(0.0, 0.0, exact=True)
        val, xstar, ok = self._solve(np.abs(np.asarray(x, dtype=float)))
        return iv.CertifiedInterval(val, val * (1 + slack), lower_witness=xstar,
                                    status=iv.CONVERGED if ok else iv.STAGNATED_STATUS)

    def dual_norm_of(self, phi):
        # the dual of a dual norm is the base norm (finite dimensions)
        return self.base(phi)

    def as_lp(self):
        return None

    @property
    def descriptor(self):
        return f"dual({self.base.descriptor})"

    def analytic_constant(self, kind, registry):
        swap = {"M2_concavity_upper": "M2_convexity_upper", "M2_convexity_upper": "M2_concavity_upper"}
        if isinstance(kind, tuple) and len(kind) == 2:
            # r-convexity of X' is r'-concavity of X with the same constant
            name, r = kind
            other = {"convexity": "concavity", "concavity": "convexity"}[name]
            e = registry.lookup(self.base, (other, conjugate_exponent(r)))
            return None if e is None else Entry(e.value, "duality of convexity/concavity: " + e.provenance, e.heuristic)
        if kind in swap:
            e = registry.lookup(self.base, swap[kind])
            return None if e is None else Entry(e.value, "duality of 2-convexity/2-concavity: " + e.provenance, e.heuristic)
        return None


def dual(X: LatticeNorm, closed_form: bool = True) -> LatticeNorm:
    """Dual lattice norm; closed form for weighted l_p unless closed_form=False."""
    if closed_form:
        lpX = X.as_lp()
        if lpX is not None:
            return lpX.dual()
        if isinstance(X, DualNorm):
            return X.base
    return DualNorm(X)


# ---------------------------------------------------------------------------
# powers
# ---------------------------------------------------------------------------


class PowerNorm(LatticeNorm):
    """||x||_r = || |x|^(1/r) ||^r."""

    def __init__(self, base: LatticeNorm, r: float, verified: bool = True):
        if not r > 0:
            raise ValueError("power exponent must be positive")
        self.base = base
        self.r = float(r)
        self.dim = base.dim
        self.unverified_normed = not verified

    def _eval(self, U):
        return self.base._eval(U ** (1.0 / self.r)) ** self.r

    def grad(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        v = u ** (1.0 / self.r)
        b = self.base(v)
        if b == 0:
            return np.zeros(self.dim)
        gb = self.base.grad(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(u > 0, u ** (1.0 / self.r - 1.0), 0.0)
        return b ** (self.r - 1.0) * gb * d

    def as_lp(self):
        lpX = self.base.as_lp()
        if lpX is None:
            return None
        p = lpX.p if np.isinf(lpX.p) else lpX.p / self.r
        return LpNorm(self.dim, p, lpX.weights ** self.r)

    def dual_norm_of(self, phi):
        lpX = self.as_lp()
        if lpX is None or lpX.p < 1:
            return None
        return lpX.dual()(phi)

    def triangle_failures(self, n_samples: int = 1000, seed: int = 0, tol: float = TOL_CLOSED) -> int:
        """Count sampled pairs violating the triangle inequality."""
        rng = np.random.default_rng(seed)
        A = rng.exponential(size=(n_samples, self.dim)) * (rng.random((n_samples, self.dim)) < 0.8)
        B = rng.exponential(size=(n_samples, self.dim)) * (rng.random((n_samples, self.dim)) < 0.8)
        lhs = self._eval(A + B)
        rhs = self._eval(A) + self._eval(B)
        return int(np.sum(lhs > rhs * (1 + tol) + 1e-15))

    @property
    def descriptor(self):
        return f"({self.base.descriptor})^{self.r:.6g}"

    def analytic_constant(self, kind, registry):
        lpX = self.as_lp()
        return None if lpX is None else lpX.analytic_constant(kind, registry)


def power(X: LatticeNorm, r: float, registry: ConstantsRegistry = DEFAULT_REGISTRY) -> PowerNorm:
    """Power lattice X^r.

    For r > 1 the result is a norm only if X is r-convex with constant 1; when
    the registry cannot confirm that, the result is tagged unverified_normed.
    """
    if not r > 0:
        raise ValueError("power exponent must be positive")
    if r <= 1:
        verified = True
    else:
        e = registry.lookup(X, ("convexity", r))
        verified = e is not None and e.value <= 1.0 + 1e-12 and not e.heuristic
    return PowerNorm(X, r, verified)


# ---------------------------------------------------------------------------
# Calderon products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalderonWitness:
    """Factorization |f| <= scale * g^(1-t) h^t and the dual functional."""

    g: np.ndarray
    h: np.ndarray
    scale: float
    functional: np.ndarray | None = None


def calderon_closed_form(X0: LatticeNorm, X1: LatticeNorm, theta: float) -> LpNorm | None:
    """Weighted l_p closed form of the Calderon product, if both factors are l_p."""
    a, b = X0.as_lp(), X1.as_lp()
    if a is None or b is None:
        return None
    inv = (1 - theta) / a.p + theta / b.p
    p = np.inf if inv == 0 else 1.0 / inv
    w = a.weights ** (1 - theta) * b.weights ** theta
    return LpNorm(a.dim, p, w)


class CalderonNorm(LatticeNorm):
    """Norm of X0^(1-t) X1^t, solved as a geometric program in log coordinates.

    The gauge form used is: maximize s such that s|f| <= g^(1-t) h^t,
    ||g||_0 <= 1, ||h||_1 <= 1; the norm is 1/s.
    """

    def __init__(self, X0: LatticeNorm, X1: LatticeNorm, theta: float, starts: int | None = None):
        if X0.dim != X1.dim:
            raise ValueError("Calderon product needs lattices of equal dimension")
        if not 0 < theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        self.X0, self.X1 = X0, X1
        self.theta = float(theta)
        self.dim = X0.dim
        closed = X0.as_lp() is not None and X1.as_lp() is not None
        self.starts = starts if starts is not None else (1 if closed else 8)
        self._cache: dict = {}

    @cached_property
    def oracle(self) -> LpNorm | None:
        return calderon_closed_form(self.X0, self.X1, self.theta)

    def _solve(self, f):
        key = f.tobytes()
        if key in self._cache:
            return self._cache[key]
        out = self._solve_uncached(f)
        if len(self._cache) > 4096:
            self._cache.clear()
        self._cache[key] = out
        return out

    def _solve_uncached(self, f):
        t = self.theta
        n = self.dim
        S = np.flatnonzero(f > 0)
        if S.size == 0:
            z = np.zeros(n)
            return iv.CertifiedInterval(0.0, 0.0, z, CalderonWitness(z, z, 0.0), exact=True)
        lf = np.log(f[S])
        s = S.size
        n0, n1 = self.X0(f), self.X1(f)
        trivial = n0 ** (1 - t) * n1 ** t

        def lin_fun(z):
            return (1 - t) * z[:s] + t * z[s:2 * s] - z[-1] - lf

        Jlin = np.hstack([(1 - t) * np.eye(s), t * np.eye(s), -np.ones((s, 1))])
        cons = [{"type": "ineq", "fun": lin_fun, "jac": lambda z: Jlin}]
        for block, X in ((slice(0, s), self.X0), (slice(s, 2 * s), self.X1)):
            for c in _log_ball_constraints(X, S):
                cons.append(self._lift(c, block, 2 * s + 1))
        obj_jac = np.zeros(2 * s + 1)
        obj_jac[-1] = -1.0

        rng = np.random.default_rng(s)
        best_hi, best_w = trivial, CalderonWitness(f / n0, f / n1, 1.0)
        ok_any = False
        for k in range(self.starts):
            g0 = lf - np.log(n0)
            h0 = lf - np.log(n1)
            if k > 0:
                g0 = g0 + rng.normal(scale=0.5, size=s)
                h0 = h0 + rng.normal(scale=0.5, size=s)
                g0 -= np.log(self.X0(_embed(np.exp(g0), S, n)))
                h0 -= np.log(self.X1(_embed(np.exp(h0), S, n)))
            tau0 = np.min((1 - t) * g0 + t * h0 - lf)
            z0 = np.concatenate([g0, h0, [tau0]])
            res = minimize(lambda z: -z[-1], z0, jac=lambda z: obj_jac, method="SLSQP",
                           constraints=cons, options={"ftol": 1e-15, "maxiter": 500})
            g = _embed(np.exp(res.x[:s]), S, n)
            h = _embed(np.exp(res.x[s:2 * s]), S, n)
            scale = float(np.max(f[S] / (g[S] ** (1 - t) * h[S] ** t)))
            hi = scale * self.X0(g) ** (1 - t) * self.X1(h) ** t
            ok_any |= bool(res.success)
            if hi < best_hi:
                best_hi, best_w = hi, CalderonWitness(g, h, scale)
        g, h = best_w.g, best_w.h
        lo, y, certified = self._dual_certificate(f, S, g, h, cons, best_hi)
        w = CalderonWitness(g, h, best_w.scale, y)
        status = iv.CONVERGED if ok_any else iv.STAGNATED_STATUS
        return iv.CertifiedInterval(min(lo, best_hi), best_hi, y, w, status=status, exact=certified)

    def _dual_certificate(self, f, S, g, h, cons, upper):
        """Lower bound <f, y> / ||y||_dual with y = phi0^(1-t) phi1^t.

        Two choices of (phi0, phi1) are tried: the norming functionals of g
        and h, and the pair recovered from the optimality multipliers of the
        gauge program (phi0 = lam / g, phi1 = lam / h).
        """
        t = self.theta
        s = S.size
        pairs = [(self.X0.grad(g), self.X1.grad(h))]
        z = np.concatenate([np.log(g[S]), np.log(h[S]),
                            [-np.log(upper) if upper > 0 else 0.0]])
        # only (nearly) active constraints may carry multipliers
        cols, lin_idx = [], []
        for k, c in enumerate(cons):
            val = np.atleast_1d(c["fun"](z))
            J = np.atleast_2d(c["jac"](z))
            for i in range(len(val)):
                if val[i] <= 1e-6:
                    if k == 0:
                        lin_idx.append((i, len(cols)))
                    cols.append(J[i])
        target = np.zeros(2 * s + 1)
        target[-1] = -1.0
        try:
            m, _ = nnls(np.array(cols).T, target, maxiter=50 * len(cols))
            lamS = np.zeros(s)
            for i, col in lin_idx:
                lamS[i] = m[col]
            lam = _embed(lamS, S, self.dim)
            if lam.sum() > 0:
                with np.errstate(divide="ignore", invalid="ignore"):
                    pairs.append((np.where(g > 0, lam / g, 0.0), np.where(h > 0, lam / h, 0.0)))
        except (RuntimeError, ValueError, IndexError):
            pass
        best = (-np.inf, None)
        certified = True
        for phi0, phi1 in pairs:
            d0, d1 = self.X0.dual_norm_of(phi0), self.X1.dual_norm_of(phi1)
            if d0 is None or d1 is None:
                certified = False
                break
            if d0 <= 0 or d1 <= 0:
                continue
            denom = d0 ** (1 - t) * d1 ** t
            y = phi0 ** (1 - t) * phi1 ** t / denom
            lo = float(f @ y)
            if lo > best[0]:
                best = (lo, y)
        if certified and best[1] is not None and best[0] < upper * (1 - 1e-9):
            D0, D1 = dual(self.X0), dual(self.X1)
            if not isinstance(D0, CalderonNorm) and not isinstance(D1, CalderonNorm):
                start = max(pairs, key=lambda pr: float(f @ (pr[0] ** (1 - t) * pr[1] ** t)))
                start = tuple(np.where(v > 0, v, 1e-12) * (f > 0) for v in start)
                try:
                    val, p0, p1, _ = _geometric_mean_max(f, S, D0, D1, t, start)
                    if val > best[0]:
                        best = (val, p0 ** (1 - t) * p1 ** t)
                except (ValueError, ZeroDivisionError):
                    pass
        if not certified or best[1] is None:
            y = self.X0.grad(g) ** (1 - t) * self.X1.grad(h) ** t
            return upper * (1 - TOL_OPT), y, False
        return best[0], best[1], True

    @staticmethod
    def _lift(c, block, nvars):
        fun, jac = c["fun"], c["jac"]

        def f2(z):
            return fun(z[block])

        def j2(z):
            Jb = np.atleast_2d(jac(z[block]))
            J = np.zeros((Jb.shape[0], nvars))
            J[:, block] = Jb
            return J

        return {"type": "ineq", "fun": f2, "jac": j2}

    def _eval(self, U):
        return np.array([self._solve(u).upper for u in U])

    def bounds(self, x):
        return self._solve(np.abs(np.asarray(x, dtype=float)))

    def grad(self, u):
        res = self._solve(np.abs(np.asarray(u, dtype=float)))
        return np.asarray(res.lower_witness, dtype=float)

    def dual_norm_of(self, phi):
        return None

    @property
    def descriptor(self):
        return f"[{self.X0.descriptor},{self.X1.descriptor}]_{self.theta:.6g}"

    def analytic_constant(self, kind, registry):
        t = self.theta
        if kind in ("M2_concavity_upper", "M2_convexity_upper") or isinstance(kind, tuple):
            return combine([registry.lookup(self.X0, kind), registry.lookup(self.X1, kind)],
                           lambda a, b: a ** (1 - t) * b ** t,
                           "convexity/concavity constants interpolate geometrically")
        return None


def calderon_product(X0: LatticeNorm, X1: LatticeNorm, theta: float, starts: int | None = None) -> CalderonNorm:
    return CalderonNorm(X0, X1, theta, starts)


def interpolated_lattice(X0: LatticeNorm, X1: LatticeNorm, theta: float) -> LatticeNorm:
    """Calderon product, as a closed form when one exists."""
    if X0.descriptor == X1.descriptor:
        return X0
    closed = calderon_closed_form(X0, X1, theta)
    return closed if closed is not None else CalderonNorm(X0, X1, theta)


# ---------------------------------------------------------------------------
# 2-convexity / 2-concavity searches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchBudget:
    k_max: int = 4
    starts: int = 8
    iters: int = 30


@dataclass
class FamilyWitness:
    vectors: np.ndarray
    ratio: float

    def recompute(self, X: LatticeNorm, kind: str) -> float:
        return _family_ratio(X, self.vectors, kind)


def _family_ratio(X: LatticeNorm, F: np.ndarray, kind: str) -> float:
    F = np.abs(np.atleast_2d(F))
    if F.shape[0] == 0:
        raise ValueError("empty family")
    norms = X._eval(F)
    sq = np.sqrt((norms ** 2).sum())
    mid = X(np.sqrt((F ** 2).sum(axis=0)))
    if kind == "concavity":
        return float(sq / mid) if mid > 0 else 0.0
    return float(mid / sq) if sq > 0 else 0.0


@dataclass
class FamilySearchResult:
    value: float
    witness: FamilyWitness
    ratios: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.value, self.witness))


def _family_search(X: LatticeNorm, kind: str, budget: SearchBudget, seed: int,
                   extra_families=()) -> FamilySearchResult:
    n = X.dim
    candidates = [np.eye(n), np.ones((1, n))]
    candidates += [np.abs(np.atleast_2d(np.asarray(F, dtype=float))) for F in extra_families]
    ratios = []
    best = (-np.inf, None)
    for F in candidates:
        r = _family_ratio(X, F, kind)
        ratios.append(r)
        if r > best[0]:
            best = (r, F)
    for s in range(budget.starts):
        rng = np.random.default_rng([seed, s])
        k = 1 + s % max(1, budget.k_max)
        F0 = rng.exponential(size=(k, n)) * (rng.random((k, n)) < 0.7)
        F0[np.arange(k), rng.integers(0, n, size=k)] += 1.0

        def negratio(z, k=k):
            return -_family_ratio(X, z.reshape(k, n), kind)

        if budget.iters > 0:
            res = minimize(negratio, F0.ravel(), method="L-BFGS-B",
                           bounds=[(0, None)] * (k * n), options={"maxiter": budget.iters})
            F = np.maximum(res.x.reshape(k, n), 0.0)
        else:
            F = F0
        if not F.any():
            F = F0
        for cand in (F0, F):
            r = _family_ratio(X, cand, kind)
            ratios.append(r)
            if r > best[0]:
                best = (r, cand)
    return FamilySearchResult(best[0], FamilyWitness(best[1], best[0]), ratios)


def concavity2_lower(X: LatticeNorm, budget: SearchBudget = SearchBudget(), seed: int = 0,
                     extra_families=()) -> FamilySearchResult:
    """Lower bound on the 2-concavity constant from the best family found."""
    return _family_search(X, "concavity", budget, seed, extra_families)


def convexity2_lower(X: LatticeNorm, budget: SearchBudget = SearchBudget(), seed: int = 0,
                     extra_families=()) -> FamilySearchResult:
    """Lower bound on the 2-convexity constant from the best family found."""
    return _family_search(X, "convexity", budget, seed, extra_families)


def concavity_interp_check(X0: LatticeNorm, X1: LatticeNorm, theta: float,
                           budget: SearchBudget = SearchBudget(starts=4, iters=10),
                           registry: ConstantsRegistry = DEFAULT_REGISTRY,
                           tol: float = TOL_OPT, seed: int = 0) -> iv.CheckReport:
    """Every concavity ratio found on the Calderon product stays below the
    geometric mean of the endpoint bounds."""
    e0, e1 = registry.M2_concavity(X0), registry.M2_concavity(X1)
    if e0 is None or e1 is None:
        missing = [X.descriptor for X, e in ((X0, e0), (X1, e1)) if e is None]
        return iv.CheckReport(iv.SKIPPED, detail="no 2-concavity bound for " + ", ".join(missing))
    bound = e0.value ** (1 - theta) * e1.value ** theta
    res = concavity2_lower(calderon_product(X0, X1, theta), budget, seed)
    worst = max(res.ratios)
    status, margin = iv.inequality_status(worst, bound, tol)
    if status == iv.PASS and (e0.heuristic or e1.heuristic):
        status = iv.INFORMATIONAL
    return iv.CheckReport(status, iv.CertifiedInterval(worst, worst), iv.CertifiedInterval.point(bound),
                          margin, witnesses=[res.witness], values=res.ratios)
