"""Rademacher averages, type 2 / cotype 2 estimates and composite bounds.

Estimators here only ever produce lower bounds on constants. Upper bounds
come from the registry, and every bound below is an Entry (value plus
provenance) or None when some ingredient is missing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import intervals as iv
from ._kernels import rademacher_sums
from .lattice import LatticeNorm, SearchBudget
from .registry import DEFAULT_REGISTRY, ConstantsRegistry, Entry, combine
from .spaces import NormedSpace, VectorValued

ENUM_CAP = 14
SQRT2 = float(np.sqrt(2.0))


@dataclass
class RademacherFamily:
    """Vectors x_1..x_k (rows) in a normed space."""

    vectors: np.ndarray
    space: NormedSpace

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        if V.shape[0] < 1 or V.shape[1] != self.space.dim:
            raise ValueError("family needs k >= 1 vectors of the space dimension")
        if not np.all(np.isfinite(V)):
            raise ValueError("family vectors must be finite")
        self.vectors = V

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    def norms(self) -> np.ndarray:
        return self.space.norm(self.vectors)


@dataclass(frozen=True)
class Average:
    """A Rademacher average; ``stderr`` is 0 for exact enumeration."""

    value: float
    stderr: float = 0.0
    exact: bool = True

    def __float__(self):
        return self.value


def sign_patterns(k: int) -> np.ndarray:
    """All 2^(k-1) sign vectors with first sign +1 (norms are even), in Gray
    code order so that rows line up with the kernel's output."""
    n = np.arange(2 ** (k - 1))
    codes = n ^ (n >> 1)
    bits = (codes[:, None] >> np.arange(k - 1)[None, :]) & 1
    return np.concatenate([np.ones((codes.size, 1)), 1.0 - 2.0 * bits], axis=1)


def pattern_norms(fam: RademacherFamily) -> np.ndarray:
    """||sum eps_i x_i|| over all patterns with eps_1 = +1."""
    spec = fam.space.mixed_spec
    if spec is not None:
        return np.asarray(rademacher_sums(fam.vectors, spec))
    S = sign_patterns(fam.k) @ fam.vectors
    return fam.space.norm(S)


def rademacher_average(fam: RademacherFamily, moment: int = 2, mc_samples: int = 20000,
                       seed: int = 0) -> Average:
    """E ||sum eps_i x_i|| (moment 1) or (E ||sum eps_i x_i||^2)^(1/2) (moment 2).

    Exact over all sign patterns for k <= 14, Monte Carlo with a standard
    error otherwise.
    """
    if moment not in (1, 2):
        raise ValueError("moment must be 1 or 2")
    if fam.k <= ENUM_CAP:
        v = pattern_norms(fam)
        return Average(float(v.mean()) if moment == 1 else float(np.sqrt(np.mean(v ** 2))))
    rng = np.random.default_rng(seed)
    eps = rng.choice([-1.0, 1.0], size=(mc_samples, fam.k))
    v = fam.space.norm(eps @ fam.vectors)
    if moment == 1:
        return Average(float(v.mean()), float(v.std(ddof=1) / np.sqrt(mc_samples)), False)
    m2 = float(np.mean(v ** 2))
    se2 = float(np.std(v ** 2, ddof=1) / np.sqrt(mc_samples))
    val = np.sqrt(m2)
    return Average(float(val), se2 / (2 * val) if val > 0 else 0.0, False)


def khinchine_kahane_check(fam: RademacherFamily) -> float:
    """Slack sqrt(2) * E||.|| - (E||.||^2)^(1/2); negative slack means the
    evaluator is broken, so it raises."""
    if fam.k > ENUM_CAP:
        raise ValueError(f"exact check needs k <= {ENUM_CAP}")
    v = pattern_norms(fam)
    m1, m2 = float(v.mean()), float(np.sqrt(np.mean(v ** 2)))
    slack = SQRT2 * m1 - m2
    if slack < -1e-12 * max(1.0, m2):
        raise RuntimeError(f"moment comparison violated: {m2} > sqrt(2) * {m1}")
    return slack


# ---------------------------------------------------------------------------
# type / cotype estimators
# ---------------------------------------------------------------------------


@dataclass
class ConstantEstimate:
    """Best ratio found, its family, and every ratio the search evaluated."""

    value: float
    witness: RademacherFamily
    ratios: list

    def __iter__(self):
        return iter((self.value, self.witness))


def _ratio_and_grad(E: NormedSpace, X: np.ndarray, kind: str, P: np.ndarray):
    """log ratio and its gradient in the real coordinates of X (k x n)."""
    k, n = X.shape
    nx, Gx = E.norm_grad(X)
    S = P @ X
    ns, Gs = E.norm_grad(S)
    D2 = float(np.sum(nx ** 2))
    A2 = float(np.mean(ns ** 2))
    if D2 <= 0 or A2 <= 0:
        return -np.inf, np.zeros(2 * k * n)
    gD = (nx[:, None] * Gx) / D2
    gA = (P.T @ (ns[:, None] * Gs)) / (len(ns) * A2)
    sign = 1.0 if kind == "cotype" else -1.0
    val = sign * 0.5 * (np.log(D2) - np.log(A2))
    g = sign * (gD - gA)
    return val, np.concatenate([g.real.ravel(), g.imag.ravel()])


def family_ratio(fam: RademacherFamily, kind: str) -> float:
    """(sum ||x_i||^2)^(1/2) / average (cotype) or its inverse (type)."""
    D = float(np.sqrt(np.sum(fam.norms() ** 2)))
    A = rademacher_average(fam, 2).value
    if D == 0 or A == 0:
        return 0.0
    return D / A if kind == "cotype" else A / D


def _constant_search(E: NormedSpace, kind: str, budget: SearchBudget, families=(), seed: int = 0) -> ConstantEstimate:
    n = E.dim
    real = E.field == "real"
    seeds = [np.eye(n)[:1]]
    if budget.k_max >= 2 and budget.starts > 0:
        k = min(budget.k_max, n)
        seeds.append(np.eye(n)[:k])
        seeds.append(np.vstack([np.ones(n), np.eye(n)[0]]))
    seeds += [np.atleast_2d(np.asarray(f, dtype=complex)) for f in families]
    best = (-np.inf, None)
    ratios = []

    def consider(X):
        nonlocal best
        fam = RademacherFamily(X, E)
        r = family_ratio(fam, kind)
        ratios.append(r)
        if r > best[0]:
            best = (r, fam)

    for X in seeds:
        consider(X)
    if budget.k_max >= 2:
        for s in range(budget.starts):
            rng = np.random.default_rng([seed, s])
            k = 2 + s % max(1, budget.k_max - 1)
            k = min(k, budget.k_max, ENUM_CAP)
            X0 = rng.standard_normal((k, n))
            if not real:
                X0 = X0 + 1j * rng.standard_normal((k, n))
            P = sign_patterns(k)

            def f(z):
                X = z[: k * n].reshape(k, n) + (0 if real else 1j * z[k * n:].reshape(k, n))
                v, g = _ratio_and_grad(E, X, kind, P)
                if not np.isfinite(v):
                    return 0.0, np.zeros_like(z)
                return -v, -(g[: k * n] if real else g)

            z0 = X0.real.ravel() if real else np.concatenate([X0.real.ravel(), X0.imag.ravel()])
            res = minimize(f, z0, jac=True, method="L-BFGS-B", options={"maxiter": budget.iters})
            z = res.x
            X = z[: k * n].reshape(k, n) + (0 if real else 1j * z[k * n:].reshape(k, n))
            consider(X0)
            consider(X)
    return ConstantEstimate(best[0], best[1], ratios)


def cotype2_lower(E: NormedSpace, budget: SearchBudget = SearchBudget(), families=(), seed: int = 0) -> ConstantEstimate:
    """Lower bound on C_2(E): max of (sum ||x_i||^2)^(1/2) / (E||sum eps_i x_i||^2)^(1/2)."""
    return _constant_search(E, "cotype", budget, families, seed)


def type2_lower(E: NormedSpace, budget: SearchBudget = SearchBudget(), families=(), seed: int = 0) -> ConstantEstimate:
    """Lower bound on T_2(E): max of (E||sum eps_i x_i||^2)^(1/2) / (sum ||x_i||^2)^(1/2)."""
    return _constant_search(E, "type", budget, families, seed)


# ---------------------------------------------------------------------------
# composite bounds
# ---------------------------------------------------------------------------


def _geo(a, b, theta):
    return a ** (1 - theta) * b ** theta


def type2_interp_bound(F0: NormedSpace, F1: NormedSpace, theta: float,
                       registry: ConstantsRegistry = DEFAULT_REGISTRY) -> Entry | None:
    """T_2(F0)^(1-theta) T_2(F1)^theta, an upper bound for the operator
    embedding norm of the couple (F0, F1); None when an entry is missing."""
    return combine([registry.T2(F0), registry.T2(F1)], lambda a, b: _geo(a, b, theta),
                   "type 2 interpolation bound")


def cotype_interp_bound(E0: NormedSpace, E1: NormedSpace, theta: float,
                        registry: ConstantsRegistry = DEFAULT_REGISTRY) -> Entry | None:
    """Upper bound on C_2([E0, E1]_theta) through the type 2 constants of the duals.

    For E0 = E1 the registry's C_2(E0) is also admissible; the smaller of
    the available bounds is returned.
    """
    cands = []
    dual = combine([registry.T2(E0.dual()), registry.T2(E1.dual())], lambda a, b: _geo(a, b, theta),
                   "cotype of interpolated space via dual type 2")
    if dual is not None:
        cands.append(dual)
    if E0.descriptor == E1.descriptor:
        e = registry.C2(E0)
        if e is not None:
            cands.append(e)
    if not cands:
        return None
    return min(cands, key=lambda e: (e.heuristic, e.value))


def vector_valued_cotype_bound(X: LatticeNorm, E: NormedSpace,
                               registry: ConstantsRegistry = DEFAULT_REGISTRY) -> Entry | None:
    """sqrt(2) M_(2)(X) C_2(E), an upper bound for C_2(X(E))."""
    return combine([registry.M2_concavity(X), registry.C2(E)], lambda m, c: SQRT2 * m * c,
                   "cotype of X(E) via 2-concavity of X")


def vector_valued_cotype_check(X: LatticeNorm, E: NormedSpace, budget: SearchBudget = SearchBudget(),
                               registry: ConstantsRegistry = DEFAULT_REGISTRY, tol: float = 1e-6,
                               seed: int = 0) -> iv.CheckReport:
    """Every cotype ratio found on X(E) must stay below the bound above."""
    bound = vector_valued_cotype_bound(X, E, registry)
    if bound is None:
        return iv.CheckReport(iv.SKIPPED, detail="missing registry entry")
    est = cotype2_lower(VectorValued(X, E), budget, seed=seed)
    worst = max(est.ratios)
    status, margin = iv.inequality_status(worst, bound.value, tol)
    if bound.heuristic and status != iv.SKIPPED:
        status = iv.INFORMATIONAL
    return iv.CheckReport(status, iv.CertifiedInterval(worst, worst), iv.CertifiedInterval.point(bound.value),
                          margin, detail=bound.provenance, witnesses=[est.witness], values=est.ratios)


def tensor_cotype_factor(G0: NormedSpace, G1: NormedSpace, theta: float, same_space: bool | None = None,
                         registry: ConstantsRegistry = DEFAULT_REGISTRY) -> Entry | None:
    """C_2(G)^(5/2) for a trivial couple, (T_2(G0')^(1-t) T_2(G1')^t)^(7/2) otherwise."""
    if same_space is None:
        same_space = G0.descriptor == G1.descriptor
    if same_space:
        return combine([registry.C2(G0)], lambda c: c ** 2.5, "cotype 2 factor, equal spaces")
    return combine([registry.T2(G0.dual()), registry.T2(G1.dual())],
                   lambda a, b: _geo(a, b, theta) ** 3.5, "dual type 2 factor, distinct spaces")


def _lattice_parts(space: NormedSpace):
    """(lattice, fiber space or None) for X(E) or a plain lattice space."""
    if isinstance(space, VectorValued):
        return space.X, space.E
    if space.lattice is not None:
        return space.lattice, None
    return None, None


def operator_embedding_bound(M0: NormedSpace, M1: NormedSpace, theta: float,
                             registry: ConstantsRegistry = DEFAULT_REGISTRY) -> Entry | None:
    """Smallest applicable proven upper bound on the embedding norm of the
    couple (M0, M1) for l_2-valued operators.

    Candidates: 1 for a trivial couple; the type 2 bound; for X0(E0), X1(E1)
    the cotype form sqrt(2) C_2(E) M_(2)(X0)^(1-t) M_(2)(X1)^t when E0 = E1
    (a plain lattice has scalar fibers, C_2 = 1), and the dual type 2 form
    sqrt(2) M_(2)(X0)^(1-t) M_(2)(X1)^t (T_2(E0')^(1-t) T_2(E1')^t)^2.
    """
    cands = []
    if M0.descriptor == M1.descriptor:
        cands.append(Entry(1.0, "trivial couple"))
    t2 = type2_interp_bound(M0, M1, theta, registry)
    if t2 is not None:
        cands.append(t2)
    (X0, E0), (X1, E1) = _lattice_parts(M0), _lattice_parts(M1)
    if X0 is not None and X1 is not None and X0.dim == X1.dim:
        m = combine([registry.M2_concavity(X0), registry.M2_concavity(X1)],
                    lambda a, b: SQRT2 * _geo(a, b, theta), "2-concavity factor")
        if m is not None:
            if E0 is None and E1 is None:
                cands.append(Entry(m.value, "lattice couple: " + m.provenance, m.heuristic))
            elif E0 is not None and E1 is not None:
                if E0.descriptor == E1.descriptor:
                    e = combine([m, registry.C2(E0)], lambda a, c: a * c, "common fiber: cotype and 2-concavity")
                    if e is not None:
                        cands.append(e)
                e = combine([m, registry.T2(E0.dual()), registry.T2(E1.dual())],
                            lambda a, b, c: a * _geo(b, c, theta) ** 2, "distinct fibers: dual type 2")
                if e is not None:
                    cands.append(e)
    if not cands:
        return None
    return min(cands, key=lambda e: (e.heuristic, e.value))
