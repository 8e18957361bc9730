"""Complex interpolation of finite-dimensional couples with two-sided bounds.

Upper bounds come from explicit analytic candidates on the strip
0 <= Re z <= 1. The strip is mapped conformally onto the unit disk with
theta sent to 0 (w = exp(i pi z), zeta = (w - w_t) / (w - conj(w_t))), so
the edge Re z = 1 becomes the arc 0 < arg zeta < 2 pi theta and the edge
Re z = 0 the complementary arc. Candidates have the form

    f(z) = diag(exp(S a (z - theta))) * (c_0 + sum_k c_k zeta(z)^k)

where the columns of S describe diagonal phase isometries of both spaces, so
on edge j the norm only depends on the real factor exp(S a (j - theta)).
The boundary maximum is controlled on a grid plus a Lipschitz correction.

Lower bounds come from the dual couple: any functional phi gives
||x||_theta >= |<phi, x>| / ||phi||_dual_theta, and the dual norm is bounded
above by the same candidate machinery with the constant term free subject
to Re <phi, x> = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import intervals as iv
from .lattice import CalderonNorm, LpNorm, calderon_closed_form, interpolated_lattice
from .spaces import (
    InjectiveTensor,
    LatticeSpace,
    NormedSpace,
    OperatorSpace,
    ProjectiveTensor,
    VectorValued,
)


@dataclass(frozen=True)
class SolverParams:
    """Knobs of the candidate optimization.

    ``temperatures`` are soft-max temperatures relative to the current
    boundary maximum; ``smoothing`` gives, per stage, the exponent that stands
    in for infinity during that stage (0 keeps the exact norms).
    """

    degree: int = 8
    grid: int = 128
    restarts: int = 6
    temperatures: tuple = (3e-2, 1e-2, 3e-3, 1e-3, 3e-4)
    smoothing: tuple = (16, 32, 64, 0, 0)
    maxiter: int = 150
    eval_refine: int = 8
    sweep: bool = True
    seed: int = 0
    width_tol: float = 0.05
    tensor_restarts: int = 3

    def degrees(self) -> list[int]:
        if not self.sweep:
            return [self.degree]
        out, d = [0], 1
        while d < self.degree:
            out.append(d)
            d *= 2
        if self.degree > 0:
            out.append(self.degree)
        return out


DEFAULT_PARAMS = SolverParams()
FAST_PARAMS = SolverParams(degree=4, grid=48, restarts=2, temperatures=(1e-2, 1e-3),
                           smoothing=(32, 0), maxiter=40, eval_refine=8)


# ---------------------------------------------------------------------------
# couples
# ---------------------------------------------------------------------------


def smoothed(space: NormedSpace, P: float, restarts: int | None = None) -> NormedSpace:
    """Copy of a space with every l_infinity piece replaced by l_P.

    ``restarts`` also lowers the restart count of injective tensor norms,
    which is all the optimization stages need (certification uses the
    original spaces).
    """
    if not P and (restarts is None or not isinstance(space, InjectiveTensor)):
        return space
    if isinstance(space, LatticeSpace):
        lpX = space.X.as_lp()
        if lpX is not None and np.isinf(lpX.p):
            return LatticeSpace(LpNorm(lpX.dim, P, lpX.weights), space.field)
        return space
    if isinstance(space, VectorValued):
        X = space.X
        lpX = X.as_lp()
        if lpX is not None and np.isinf(lpX.p):
            X = LpNorm(lpX.dim, P, lpX.weights)
        return VectorValued(X, smoothed(space.E, P))
    if isinstance(space, ProjectiveTensor):
        return space
    if isinstance(space, InjectiveTensor):
        r = space.restarts if restarts is None else min(restarts, space.restarts)
        return InjectiveTensor(smoothed(space.A, P), smoothed(space.B, P),
                               restarts=r, iters=space.iters, slack=space.slack)
    return space


class InterpCouple:
    """Two norms on the same coordinate space."""

    def __init__(self, space0: NormedSpace, space1: NormedSpace):
        if space0.dim != space1.dim:
            raise ValueError("couple spaces must have equal dimension")
        self.space0, self.space1 = space0, space1
        self.dim = space0.dim

    @property
    def spaces(self):
        return (self.space0, self.space1)

    @property
    def lattice_couple(self) -> bool:
        return self.space0.lattice is not None and self.space1.lattice is not None

    @property
    def trivial(self) -> bool:
        return self.space0.descriptor == self.space1.descriptor

    def dual(self) -> "InterpCouple":
        return InterpCouple(self.space0.dual(), self.space1.dual())

    def structure(self) -> np.ndarray:
        S0, S1 = self.space0.structure(), self.space1.structure()
        cols = [c for c in S0.T if any(np.allclose(c, d) for d in S1.T)]
        cols.append(np.ones(self.dim))
        return np.array(cols).T

    def smoothed(self, P, restarts: int | None = None) -> "InterpCouple":
        return InterpCouple(smoothed(self.space0, P, restarts), smoothed(self.space1, P, restarts))

    @property
    def descriptor(self):
        return f"[{self.space0.descriptor},{self.space1.descriptor}]"

    def __repr__(self):
        return self.descriptor


# ---------------------------------------------------------------------------
# conformal geometry
# ---------------------------------------------------------------------------


def zeta_of(z, theta):
    """Disk coordinate of a strip point (theta maps to 0)."""
    w = np.exp(1j * np.pi * np.asarray(z))
    wt = np.exp(1j * np.pi * theta)
    return (w - wt) / (w - np.conj(wt))


def edge_grid(theta: float, m: int, edge: int):
    """Midpoint grid on the arc of the unit circle that images edge Re z = edge.

    Returns (zeta points, arc spacing). Every point of the arc lies within
    half a spacing (in angle) of a grid point.
    """
    if edge == 1:
        start, length = 0.0, 2 * np.pi * theta
    else:
        start, length = 2 * np.pi * theta, 2 * np.pi * (1 - theta)
    phi = start + length * (np.arange(m) + 0.5) / m
    return np.exp(1j * phi), length / m


@dataclass
class AnalyticCandidate:
    """f(z) = diag(exp(S a (z - theta))) (c_0 + sum_k c_k zeta^k)."""

    theta: float
    c0: np.ndarray
    coeffs: np.ndarray
    a: np.ndarray
    structure: np.ndarray
    grid: int
    correction: float = 0.0

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0]

    def multiplier(self, edge: int) -> np.ndarray:
        return np.exp((edge - self.theta) * (self.structure @ self.a))

    def boundary(self, edge: int, zeta) -> np.ndarray:
        zeta = np.atleast_1d(zeta)
        P = np.broadcast_to(self.c0, (zeta.size, self.c0.size)).astype(complex)
        if self.degree:
            Zk = zeta[:, None] ** np.arange(1, self.degree + 1)[None, :]
            P = P + Zk @ self.coeffs
        return P * self.multiplier(edge)[None, :]

    def __call__(self, z) -> np.ndarray:
        """Value at a point of the closed strip."""
        zeta = zeta_of(z, self.theta)
        P = self.c0.astype(complex)
        for k in range(self.degree):
            P = P + self.coeffs[k] * zeta ** (k + 1)
        return np.exp((z - self.theta) * (self.structure @ self.a)) * P


def certify(couple: InterpCouple, cand: AnalyticCandidate, refine: int = 8) -> tuple[float, list]:
    """Upper bound on sup over the strip boundary of the edge norms of cand."""
    per_edge = []
    m = cand.grid * max(1, refine)
    for edge, space in ((0, couple.space0), (1, couple.space1)):
        zeta, step = edge_grid(cand.theta, m, edge)
        vals = space.norm_upper(cand.boundary(edge, zeta))
        corr = 0.0
        if cand.degree:
            D = cand.multiplier(edge)
            cn = space.norm_upper(cand.coeffs * D[None, :])
            corr = 0.5 * step * float(np.sum(np.arange(1, cand.degree + 1) * cn))
        per_edge.append((float(vals.max()), corr))
    value = max(v + c for v, c in per_edge)
    return value, per_edge


# ---------------------------------------------------------------------------
# candidate optimization
# ---------------------------------------------------------------------------


def _real(c):
    return np.concatenate([c.real.ravel(), c.imag.ravel()])


def _cplx(r, shape):
    n = r.size // 2
    return (r[:n] + 1j * r[n:]).reshape(shape)


class _Problem:
    """Soft-max boundary objective for a fixed degree and grid."""

    def __init__(self, couple, theta, base, free, degree, grid, S):
        self.couple = couple
        self.theta = theta
        self.base = base
        self.free = free
        self.nf = 0 if free is None else free.shape[1]
        self.degree = degree
        self.S = S
        self.r = S.shape[1]
        self.N = base.size
        self.grid = grid
        self.zetas = [edge_grid(theta, grid, e)[0] for e in (0, 1)]
        self.powers = [z[:, None] ** np.arange(0, degree + 1)[None, :] for z in self.zetas]

    def unpack(self, z):
        a = z[: self.r]
        u = z[self.r: self.r + self.nf]
        c = _cplx(z[self.r + self.nf:], (self.degree, self.N)) if self.degree else np.zeros((0, self.N), complex)
        c0 = self.base if self.nf == 0 else self.base + self.free @ u
        return a, u, c0, c

    def pack(self, a, u, c):
        parts = [np.asarray(a, float), np.asarray(u, float)]
        if self.degree:
            parts.append(_real(np.asarray(c, complex)))
        return np.concatenate(parts)

    def values(self, z, spaces):
        a, u, c0, c = self.unpack(z)
        out = []
        for edge in (0, 1):
            D = np.exp((edge - self.theta) * (self.S @ a))
            P = np.broadcast_to(c0, (self.grid, self.N)).astype(complex)
            if self.degree:
                P = P + self.powers[edge][:, 1:] @ c
            V = P * D[None, :]
            vals, G = spaces[edge].norm_grad(V)
            out.append((D, V, vals, G))
        return out

    def objective(self, z, spaces, T):
        with np.errstate(over="ignore", invalid="ignore"):
            parts = self.values(z, spaces)
        allv = np.concatenate([p[2] for p in parts])
        mx = allv.max()
        if not np.isfinite(mx):
            # line-search overshoot: reject the step
            return np.inf, np.zeros_like(z)
        e = np.exp((allv - mx) / T)
        s = e.sum()
        f = mx + T * np.log(s)
        w = e / s
        ga = np.zeros(self.r)
        gP0 = np.zeros(self.N, complex)
        gc = np.zeros((self.degree, self.N), complex)
        off = 0
        for edge, (D, V, vals, G) in enumerate(parts):
            wg = w[off: off + self.grid]
            off += self.grid
            WG = wg[:, None] * G
            ga += (edge - self.theta) * (self.S.T @ np.real(np.conj(WG) * V).sum(axis=0))
            DG = WG * D[None, :]
            gP0 += DG.sum(axis=0)
            if self.degree:
                gc += np.conj(self.powers[edge][:, 1:]).T @ DG
        grad = [ga]
        if self.nf:
            grad.append(np.real(self.free.conj().T @ gP0))
        if self.degree:
            grad.append(_real(gc))
        return f, np.concatenate(grad)

    def hard_max(self, z, spaces):
        with np.errstate(over="ignore", invalid="ignore"):
            m = max(p[2].max() for p in self.values(z, spaces))
        return m if np.isfinite(m) else np.inf


def _run_stages(prob: _Problem, z0, params: SolverParams):
    z = z0.copy()
    ok = True
    couple = prob.couple
    for T_rel, P in zip(params.temperatures, params.smoothing):
        spaces = couple.smoothed(P, params.tensor_restarts).spaces
        scale = max(prob.hard_max(z, spaces), 1e-300)
        T = T_rel * scale
        res = minimize(prob.objective, z, args=(spaces, T), jac=True, method="L-BFGS-B",
                       options={"maxiter": params.maxiter, "gtol": 1e-12 * scale, "ftol": 1e-14})
        if np.all(np.isfinite(res.x)) and res.fun <= prob.objective(z, spaces, T)[0] + 1e-15 * scale:
            z = res.x
        ok = ok and bool(np.all(np.isfinite(res.x)))
    return z, ok


def _solve(couple: InterpCouple, theta: float, base, free, params: SolverParams,
           warm: AnalyticCandidate | None = None, u0=None):
    """Degree sweep; returns (best certified value, candidate, history, converged)."""
    S = couple.structure()
    N = base.size
    history = []
    best_val, best_cand = np.inf, None
    converged = True
    rng = np.random.default_rng([params.seed, N])
    nf = 0 if free is None else free.shape[1]
    u_init = np.zeros(nf) if u0 is None else np.asarray(u0, float)
    prev = None
    for d in params.degrees():
        prob = _Problem(couple, theta, base, free, d, params.grid, S)
        if prev is None:
            c0 = base if nf == 0 else base + free @ u_init
            n0 = couple.space0.norm_upper(c0[None, :])[0]
            n1 = couple.space1.norm_upper(c0[None, :])[0]
            lam = np.log(n0 / n1) if n0 > 0 and n1 > 0 else 0.0
            starts = [np.zeros(S.shape[1]), np.zeros(S.shape[1])]
            starts[1][-1] = lam
            if warm is not None and warm.a.shape == (S.shape[1],):
                starts.append(warm.a.copy())
            for _ in range(max(0, params.restarts - len(starts))):
                a = rng.normal(scale=0.5, size=S.shape[1])
                a[-1] += lam
                starts.append(a)
            cands = []
            for a in starts:
                z, ok = _run_stages(prob, prob.pack(a, u_init, np.zeros((d, N))), params)
                cands.append((prob.hard_max(z, couple.spaces), z, ok))
            _, z, ok = min(cands, key=lambda t: t[0])
        else:
            a, u, _, c = prev[0].unpack(prev[1])
            c_new = np.zeros((d, N), complex)
            c_new[: c.shape[0]] = c
            z, ok = _run_stages(prob, prob.pack(a, u, c_new), params)
        converged = converged and ok
        a, u, c0, c = prob.unpack(z)
        cand = AnalyticCandidate(theta, c0.copy(), c.copy(), a.copy(), S, params.grid)
        val, per_edge = certify(couple, cand, params.eval_refine)
        cand.correction = max(c for _, c in per_edge)
        history.append((d, val))
        if val < best_val:
            best_val, best_cand = val, cand
        prev = (prob, z)
    return best_val, best_cand, history, converged


def _check_theta(theta):
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")


def _log_convexity_upper(couple, x, theta):
    n0 = couple.space0.norm_upper(x[None, :])[0]
    n1 = couple.space1.norm_upper(x[None, :])[0]
    return float(n0 ** (1 - theta) * n1 ** theta), (n0, n1)


@dataclass
class UpperResult:
    value: float
    candidate: AnalyticCandidate | None
    history: list = field(default_factory=list)
    converged: bool = True


def interp_upper(couple: InterpCouple, x, theta: float, params: SolverParams = DEFAULT_PARAMS) -> UpperResult:
    """Certified upper bound on ||x||_theta from the best analytic candidate."""
    _check_theta(theta)
    x = np.asarray(x, dtype=complex)
    if x.shape != (couple.dim,):
        raise ValueError("vector length does not match the couple")
    scale = float(np.abs(x).max())
    if scale == 0:
        return UpperResult(0.0, None, [], True)
    xs = x / scale
    val, cand, hist, ok = _solve(couple, theta, xs, None, params)
    # the log-convexity candidate e^{lambda (z - theta)} x is always available
    lc, _ = _log_convexity_upper(couple, xs, theta)
    if lc < val:
        S = couple.structure()
        n0, n1 = _log_convexity_upper(couple, xs, theta)[1]
        a = np.zeros(S.shape[1])
        a[-1] = np.log(n0 / n1) if n0 > 0 and n1 > 0 else 0.0
        cand = AnalyticCandidate(theta, xs, np.zeros((0, xs.size), complex), a, S, params.grid)
        val = lc
    cand = replace(cand, c0=cand.c0 * scale, coeffs=cand.coeffs * scale)
    hist = [(d, v * scale) for d, v in hist]
    return UpperResult(val * scale, cand, hist, ok)


def _hyperplane_basis(x):
    """Complex basis F (N x (2N-1)) of {c : Re <c, x> = 0}, real-orthonormal."""
    N = x.size
    row = np.concatenate([x.real, -x.imag])
    _, _, Vt = np.linalg.svd(row[None, :])
    Q = Vt[1:].T
    return Q[:N] + 1j * Q[N:], Q


@dataclass
class LowerResult:
    value: float
    functional: np.ndarray | None
    dual_upper: float = np.inf
    candidate: AnalyticCandidate | None = None
    converged: bool = True
    history: list = field(default_factory=list)


def envelope_functional(couple: InterpCouple, cand: AnalyticCandidate, temperature: float = 1e-3):
    """conj of the gradient of the soft-max boundary value with respect to c_0."""
    S = cand.structure
    parts = []
    for edge, space in ((0, couple.space0), (1, couple.space1)):
        zeta, _ = edge_grid(cand.theta, cand.grid, edge)
        V = cand.boundary(edge, zeta)
        vals, G = space.norm_grad(V)
        parts.append((cand.multiplier(edge), vals, G))
    allv = np.concatenate([p[1] for p in parts])
    T = temperature * max(allv.max(), 1e-300)
    w = np.exp((allv - allv.max()) / T)
    w /= w.sum()
    g = np.zeros(cand.c0.size, complex)
    off = 0
    for D, vals, G in parts:
        g += ((w[off: off + len(vals)])[:, None] * G * D[None, :]).sum(axis=0)
        off += len(vals)
    return np.conj(g)


def interp_lower(couple: InterpCouple, x, theta: float, params: SolverParams = DEFAULT_PARAMS,
                 start=None, upper: UpperResult | None = None) -> LowerResult:
    """Lower bound |<phi, x>| / (upper bound of phi in the dual couple)."""
    _check_theta(theta)
    x = np.asarray(x, dtype=complex)
    if x.shape != (couple.dim,):
        raise ValueError("vector length does not match the couple")
    scale = float(np.abs(x).max())
    if scale == 0:
        return LowerResult(0.0, np.zeros_like(x), 0.0)
    xs = x / scale
    dc = couple.dual()
    base = np.conj(xs) / np.vdot(xs, xs).real
    F, Q = _hyperplane_basis(xs)
    seeds = []
    if start is not None:
        seeds.append(np.asarray(start, complex))
    if upper is not None and upper.candidate is not None:
        cand = replace(upper.candidate, c0=upper.candidate.c0 / scale,
                       coeffs=upper.candidate.coeffs / scale)
        seeds.append(envelope_functional(couple, cand))
    for sp in couple.spaces:
        _, G = sp.norm_grad(xs[None, :])
        seeds.append(np.conj(G[0]))
    # pick the seed with the best degree-0 quality, then run the full sweep from it
    scored = []
    for phi in seeds:
        pr = np.sum(phi * xs)
        if abs(pr) < 1e-14:
            continue
        phi = phi / pr
        u0 = Q.T @ _real(phi - base)
        n0 = dc.space0.norm_upper(phi[None, :])[0]
        n1 = dc.space1.norm_upper(phi[None, :])[0]
        scored.append((n0 ** (1 - theta) * n1 ** theta, u0))
    if not scored:
        scored.append((np.inf, np.zeros(F.shape[1])))
    scored.sort(key=lambda t: t[0])
    u0 = scored[0][1]
    val, cand, hist, ok = _solve(dc, theta, base, F, params, u0=u0)
    phi = cand.c0
    pairing = abs(np.sum(phi * xs))
    lo = pairing / val if val > 0 else 0.0
    # every dual candidate has Re <phi, x> = 1, so 1 / value is a lower bound per degree
    hist = [(d, scale / v if v > 0 else 0.0) for d, v in hist]
    return LowerResult(lo * scale, phi / scale, val / scale, cand, ok, hist)


def interp_norm(couple: InterpCouple, x, theta: float, params: SolverParams = DEFAULT_PARAMS,
                oracle: bool = True) -> iv.CertifiedInterval:
    """Two-sided bounds on ||x||_theta; for lattice couples the Calderon
    product value is attached as ``meta['calderon']``."""
    up = interp_upper(couple, x, theta, params)
    lo = interp_lower(couple, x, theta, params, upper=up)
    ups = np.minimum.accumulate([v for _, v in up.history]) if up.history else []
    los = np.maximum.accumulate([v for _, v in lo.history]) if lo.history else []
    sweep = [(d, float(a), float(b)) for (d, _), a, b in zip(up.history, los, ups)]
    meta = {"history": up.history, "sweep": sweep, "dual_upper": lo.dual_upper}
    lower, upper = lo.value, up.value
    ok = up.converged and lo.converged and upper - lower <= params.width_tol * upper
    status = iv.CONVERGED if ok else iv.STAGNATED_STATUS
    if lower > upper:
        # only possible through heuristic slack in the edge norms
        meta["crossed"] = (lower, upper)
        status = iv.STAGNATED_STATUS
        lower = upper
    exact = couple.space0.exact and couple.space1.exact
    if oracle and couple.lattice_couple:
        X0, X1 = couple.space0.lattice, couple.space1.lattice
        closed = calderon_closed_form(X0, X1, theta)
        if closed is not None:
            meta["calderon"] = float(closed(np.abs(x)))
        else:
            meta["calderon"] = CalderonNorm(X0, X1, theta).bounds(np.abs(x))
    return iv.CertifiedInterval(lower, upper, lower_witness=lo.functional, upper_witness=up.candidate,
                                status=status, exact=exact, meta=meta)


# ---------------------------------------------------------------------------
# interpolated spaces
# ---------------------------------------------------------------------------


class InterpolatedSpace(NormedSpace):
    """[E0, E1]_theta evaluated by the solver (slow; used when no closed form)."""

    def __init__(self, couple: InterpCouple, theta: float, params: SolverParams = FAST_PARAMS):
        self.couple = couple
        self.theta = theta
        self.params = params
        self.dim = couple.dim
        self.field = couple.space0.field
        self._cache: dict = {}

    def _bounds(self, v):
        key = v.tobytes()
        if key not in self._cache:
            up = interp_upper(self.couple, v, self.theta, self.params)
            lo = interp_lower(self.couple, v, self.theta, self.params, upper=up)
            self._cache[key] = (min(lo.value, up.value), up.value, lo.functional)
        return self._cache[key]

    def _norm(self, V):
        return np.array([self._bounds(v)[0] for v in np.atleast_2d(V)])

    def norm_upper(self, V):
        return np.array([self._bounds(v)[1] for v in np.atleast_2d(V).astype(complex)])

    def norm_grad(self, V):
        V = np.atleast_2d(V).astype(complex)
        vals = np.zeros(len(V))
        G = np.zeros_like(V)
        for i, v in enumerate(V):
            lo, _, phi = self._bounds(v)
            vals[i] = lo
            if phi is not None:
                G[i] = np.conj(phi) * (lo / max(abs(np.sum(phi * v)), 1e-300))
        return vals, G

    @property
    def exact(self):
        return False

    def dual(self):
        return InterpolatedSpace(self.couple.dual(), self.theta, self.params)

    def structure(self):
        return self.couple.structure()[:, :-1] if self.couple.structure().shape[1] > 1 else np.ones((self.dim, 1))

    @property
    def descriptor(self):
        return f"{self.couple.descriptor}_{self.theta:.6g}"


def interpolated_space(couple: InterpCouple, theta: float, params: SolverParams = FAST_PARAMS) -> NormedSpace:
    """[E0, E1]_theta, in closed form when the Calderon formula provides one.

    Lattice couples give the Calderon product; couples X0(E0), X1(E1) give
    (X0^(1-theta) X1^theta)([E0, E1]_theta). Anything else is evaluated by
    the solver.
    """
    s0, s1 = couple.space0, couple.space1
    if couple.trivial:
        return s0
    if isinstance(s0, LatticeSpace) and isinstance(s1, LatticeSpace):
        return LatticeSpace(interpolated_lattice(s0.X, s1.X, theta), s0.field)
    if isinstance(s0, VectorValued) and isinstance(s1, VectorValued) and s0.n == s1.n and s0.m == s1.m:
        Xt = interpolated_lattice(s0.X, s1.X, theta)
        Et = interpolated_space(InterpCouple(s0.E, s1.E), theta, params)
        return VectorValued(Xt, Et)
    return InterpolatedSpace(couple, theta, params)


# ---------------------------------------------------------------------------
# checks and d_theta estimates
# ---------------------------------------------------------------------------


def vector_valued_calderon_check(X0, X1, E0: NormedSpace, E1: NormedSpace, theta: float, samples,
                                 params: SolverParams = DEFAULT_PARAMS, tol: float = 1e-3) -> iv.CheckReport:
    """Interpolation of X0(E0), X1(E1) against the Calderon-product norm of the
    fiberwise interpolated values."""
    couple = InterpCouple(VectorValued(X0, E0), VectorValued(X1, E1))
    fcouple = InterpCouple(E0, E1)
    Xt = interpolated_lattice(X0, X1, theta)
    n, m = X0.dim, E0.dim
    worst = np.inf
    status = iv.PASS
    values = []
    for x in samples:
        x = np.asarray(x, dtype=complex)
        lhs = interp_norm(couple, x, theta, params, oracle=False)
        flo, fhi = np.zeros(n), np.zeros(n)
        for k in range(n):
            fib = x[k * m:(k + 1) * m]
            if fcouple.trivial:
                flo[k] = fhi[k] = E0.norm(fib)
            else:
                b = interp_norm(fcouple, fib, theta, params, oracle=False)
                flo[k], fhi[k] = b.lower, b.upper
        if isinstance(Xt, CalderonNorm):
            v_lo, v_hi = Xt.bounds(flo).lower, Xt.bounds(fhi).upper
        else:
            v_lo, v_hi = Xt(flo), Xt(fhi)
        gap = max(lhs.lower - v_hi * (1 + tol), v_lo * (1 - tol) - lhs.upper)
        values.append((lhs, (v_lo, v_hi)))
        worst = min(worst, -gap)
        if gap > 0:
            status = iv.FAIL
        elif lhs.status == iv.STAGNATED_STATUS and status == iv.PASS:
            status = iv.STAGNATED
    return iv.CheckReport(status, margin=worst, values=values)


def contraction_check(M0, M1, N0, N1, theta: float, operators, params: SolverParams = DEFAULT_PARAMS,
                      tol: float = 1e-3) -> iv.CheckReport:
    """||T: [M0,M1]_theta -> [N0,N1]_theta|| against the interpolation norm of
    T in the couple of operator spaces, for each sampled T."""
    Mt = interpolated_space(InterpCouple(M0, M1), theta)
    Nt = interpolated_space(InterpCouple(N0, N1), theta)
    couple = InterpCouple(OperatorSpace(M0, N0), OperatorSpace(M1, N1))
    target = OperatorSpace(Mt, Nt)
    status, worst, values = iv.PASS, np.inf, []
    for T in operators:
        T = np.asarray(T, dtype=complex)
        v = T.reshape(-1)
        lhs = float(target._norm(v[None, :])[0])
        rhs = interp_upper(couple, v, theta, params).value
        st, margin = iv.inequality_status(lhs, rhs, tol)
        values.append((lhs, rhs, margin))
        worst = min(worst, margin)
        if st == iv.FAIL:
            status = iv.FAIL
    return iv.CheckReport(status, margin=worst, values=values)


@dataclass(frozen=True)
class EstimateBudget:
    samples: int = 6
    rank_one: int = 3
    improve_steps: int = 2
    seed: int = 0
    params: SolverParams = FAST_PARAMS


@dataclass
class EmbeddingEstimate:
    value: float
    witness: np.ndarray
    ratios: list
    flagged: bool = False


def _product_lower(mcouple, ncouple, theta, z, dm, dn, params):
    """Lower bound for z in the tensor couple from product functionals a' (x) b'.

    a', b' are norming functionals of z in the interpolated factors; their
    dual interpolation norms are bounded by the solver on the dual couples.
    """
    Mt = interpolated_space(mcouple, theta)
    Nt = interpolated_space(ncouple, theta)
    xp, yp = InjectiveTensor(Mt, Nt).functionals(z[None, :])
    a, b = xp[0], yp[0]
    if not np.any(a) or not np.any(b):
        return 0.0
    ua = interp_upper(mcouple.dual(), a, theta, params).value
    ub = interp_upper(ncouple.dual(), b, theta, params).value
    pairing = abs(np.sum(np.outer(a, b).ravel() * z))
    return pairing / (ua * ub) if ua > 0 and ub > 0 else 0.0


def tensor_embedding_ratio(mcouple: InterpCouple, ncouple: InterpCouple, theta: float, z,
                           params: SolverParams = FAST_PARAMS):
    """(numerator lower, denominator, solver upper) for one tensor z of shape dM x dN.

    The denominator is the attained value of the injective norm (best
    alternating maximization), not its slack-inflated upper bound, so the
    ratio is a best-found estimate rather than a certified lower bound.
    """
    dm, dn = mcouple.dim, ncouple.dim
    z = np.asarray(z, dtype=complex).reshape(-1)
    tcouple = InterpCouple(InjectiveTensor(mcouple.space0, ncouple.space0),
                           InjectiveTensor(mcouple.space1, ncouple.space1))
    Mt = interpolated_space(mcouple, theta)
    Nt = interpolated_space(ncouple, theta)
    den = float(InjectiveTensor(Mt, Nt)._norm(z[None, :])[0])
    up = interp_upper(tcouple, z, theta, params)
    num = interp_lower(tcouple, z, theta, params, upper=up).value
    num = max(num, _product_lower(mcouple, ncouple, theta, z, dm, dn, params))
    return num, den, up.value


def tensor_embedding_estimate(M0, M1, N0, N1, theta: float, budget: EstimateBudget = EstimateBudget()) -> EmbeddingEstimate:
    """Lower estimate of the norm of [M0,M1]_t (x)eps [N0,N1]_t -> [M0 (x)eps N0, M1 (x)eps N1]_t."""
    _check_theta(theta)
    mc, nc = InterpCouple(M0, M1), InterpCouple(N0, N1)
    dm, dn = mc.dim, nc.dim
    rng = np.random.default_rng([budget.seed, dm, dn])
    cplx = "complex" in (M0.field, N0.field)

    def rnd(*shape):
        out = rng.standard_normal(shape)
        return out + 1j * rng.standard_normal(shape) if cplx else out

    seeds = [np.outer(rnd(dm), rnd(dn)) for _ in range(budget.rank_one)]
    seeds += [rnd(dm, dn) for _ in range(budget.samples)]
    ratios = []
    best = (-np.inf, None)
    flagged = False
    for z in seeds:
        num, den, _ = tensor_embedding_ratio(mc, nc, theta, z, budget.params)
        r = num / den if den > 0 else 0.0
        ratios.append(r)
        if r > best[0]:
            best = (r, z)
    # local improvement around the best tensor
    z0 = best[1]
    step = 0.3
    for _ in range(budget.improve_steps):
        z = z0 + step * np.abs(z0).max() * rnd(dm, dn)
        num, den, _ = tensor_embedding_ratio(mc, nc, theta, z, budget.params)
        r = num / den if den > 0 else 0.0
        ratios.append(r)
        if r > best[0]:
            best, z0 = (r, z), z
        else:
            step *= 0.5
    if not all(np.isfinite(ratios)):
        flagged = True
    return EmbeddingEstimate(best[0], best[1], ratios, flagged)


def operator_embedding_estimate(M0, M1, theta: float, k: int, budget: EstimateBudget = EstimateBudget()) -> EmbeddingEstimate:
    """Lower estimate of the norm of L(l_2^k, [M0,M1]_t) -> [L(l_2^k, M0), L(l_2^k, M1)]_t.

    Operators l_2^k -> M are stored as dimM x k matrices, i.e. tensors in
    M (x)eps l_2^k.
    """
    if k < 1:
        raise ValueError("k must be positive")
    from .spaces import euclidean

    E = euclidean(k, M0.field)
    return tensor_embedding_estimate(M0, M1, E, E, theta, budget)
