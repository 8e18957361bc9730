"""Verification suites.

Each suite expands its section of the instance file into tasks (one per
instance, theta and rank) and every task returns a list of records. Tasks are
independent and carry their own seed, so they can run in any order or in
parallel; the report keeps the planned order.

Records aggregate the samples of one check: the lhs/rhs columns hold the
sample with the smallest margin. Inequalities compare the lhs lower value with
the rhs upper value, so a loose solver can hide a violation but never invent
one.
"""

from __future__ import annotations

import itertools
import logging
import time
import zlib
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .. import intervals as iv
from ..constants import (
    SQRT2,
    RademacherFamily,
    cotype_interp_bound,
    khinchine_kahane_check,
    operator_embedding_bound,
    rademacher_average,
    tensor_cotype_factor,
    type2_interp_bound,
    vector_valued_cotype_check,
)
from ..factorize import FactorBudget, gamma2_interp_check, maurey_rosenthal, mr_bound_check
from ..interp import (
    InterpCouple,
    contraction_check,
    interp_lower,
    interp_upper,
    interpolated_space,
    operator_embedding_estimate,
    tensor_embedding_estimate,
    vector_valued_calderon_check,
)
from ..lattice import (
    CalderonNorm,
    DualNorm,
    calderon_closed_form,
    concavity_interp_check,
    dual,
    lp,
    power,
)
from ..registry import ConstantsRegistry, Entry, combine
from ..spaces import InjectiveTensor, LinearMap, VectorValued, diag_norm_identity, euclidean
from .config import Config, TensorInstance, VectorValuedInstance
from .specs import parse_exponent, parse_lattice, parse_space

log = logging.getLogger(__name__)

SUITE_ORDER = ("lemma4", "prop3", "cor6_7", "prop8", "theorem", "factorization")
NAN = float("nan")


@dataclass(frozen=True)
class CheckRecord:
    suite: str
    instance: str
    theta: float | None
    lhs_lo: float
    lhs_hi: float
    rhs_lo: float
    rhs_hi: float
    margin: float
    status: str
    seconds: float = 0.0


@dataclass(frozen=True)
class Task:
    suite: str
    kind: str
    key: str
    theta: float | None
    payload: Any = None


def task_seed(seed: int, task: Task) -> int:
    """Per-task seed from the run seed and a checksum of the task identity."""
    tag = f"{task.suite}|{task.kind}|{task.key}|{task.theta}".encode()
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag)])
    return int(ss.generate_state(1)[0])


class _Ctx:
    """Everything a task needs besides its payload."""

    def __init__(self, cfg: Config, task: Task, seed: int):
        self.cfg = cfg
        self.task = task
        self.seed = task_seed(seed, task)
        self.rng = np.random.default_rng(self.seed)
        self.tol = cfg.tolerance
        self.registry: ConstantsRegistry = cfg.registry()
        self.params = cfg.solver.params(self.seed)
        self.records: list[CheckRecord] = []
        self._t0 = time.perf_counter()

    def record(self, instance, lhs, rhs, margin, status):
        now = time.perf_counter()
        lo, hi = _pair(lhs)
        rlo, rhi = _pair(rhs)
        self.records.append(CheckRecord(self.task.suite, instance, self.task.theta, lo, hi, rlo, rhi,
                                        float(margin), status, now - self._t0))
        self._t0 = now

    def cplx(self, *shape):
        return self.rng.standard_normal(shape) + 1j * self.rng.standard_normal(shape)


def _pair(v):
    if v is None:
        return NAN, NAN
    if isinstance(v, iv.CertifiedInterval):
        return float(v.lower), float(v.upper)
    if isinstance(v, tuple):
        return float(v[0]), float(v[1])
    return float(v), float(v)


def identity_status(lhs: tuple, rhs: tuple, tol: float) -> tuple[str, float]:
    """FAIL iff the two intervals are apart by more than tol (relative).

    The margin is minus the relative distance of the midpoints.
    """
    scale = max(lhs[1], rhs[1], 1e-300)
    gap = max(0.0, lhs[0] - rhs[1], rhs[0] - lhs[1]) / scale
    margin = -abs(0.5 * (lhs[0] + lhs[1]) - 0.5 * (rhs[0] + rhs[1])) / scale
    return (iv.FAIL if gap > tol else iv.PASS), margin


def _bound_status(lhs_lower: float, bound: Entry, tol: float) -> tuple[str, float]:
    status, margin = iv.inequality_status(lhs_lower, bound.value, tol)
    if bound.heuristic:
        status = iv.INFORMATIONAL
    return status, margin


def _worst(rows):
    """Row (lhs, rhs, margin, status) with the smallest margin; FAIL wins."""
    fails = [r for r in rows if r[3] == iv.FAIL]
    pool = fails or rows
    return min(pool, key=lambda r: r[2])


def _emit_worst(ctx: _Ctx, instance: str, rows):
    if not rows:
        return
    lhs, rhs, margin, status = _worst(rows)
    statuses = {r[3] for r in rows}
    for s in (iv.FAIL, iv.STAGNATED, iv.INFORMATIONAL):
        if s in statuses:
            status = s
            break
    ctx.record(instance, lhs, rhs, margin, status)


# ---------------------------------------------------------------------------
# lattice identities
# ---------------------------------------------------------------------------


def _positive_samples(rng, n, count, zeros=True):
    out = []
    for _ in range(count):
        v = rng.exponential(size=n)
        if zeros and n > 1 and rng.random() < 0.25:
            v[rng.integers(n)] = 0.0
        out.append(v)
    return out


def lattice_identity_anchor(ctx: _Ctx, anchor):
    X = parse_lattice(anchor.X)
    lhs, rhs = diag_norm_identity(np.asarray(anchor.lam), X, ctx.registry)
    status, margin = identity_status((lhs.lower, lhs.upper), (rhs, rhs), ctx.tol)
    lam = ",".join(f"{v:g}" for v in anchor.lam)
    ctx.record(f"{X.descriptor}:diag[{lam}]", lhs, rhs, margin, status)


def lattice_diagonal_identity(ctx: _Ctx, X):
    rows = []
    for lam in _positive_samples(ctx.rng, X.dim, ctx.cfg.suites.lemma4.samples):
        lhs, rhs = diag_norm_identity(lam, X, ctx.registry)
        st, m = identity_status((lhs.lower, lhs.upper), (rhs, rhs), ctx.tol)
        rows.append(((lhs.lower, lhs.upper), rhs, m, st))
    _emit_worst(ctx, f"{X.descriptor}:diag", rows)


def lattice_couple_identities(ctx: _Ctx, couple):
    """Calderon oracle agreement, duality and power identities, concavity."""
    X0, X1 = couple
    t = ctx.task.theta
    key = ctx.task.key
    samples = ctx.cfg.suites.lemma4.samples
    fs = _positive_samples(ctx.rng, X0.dim, samples)

    C = CalderonNorm(X0, X1, t)
    closed = calderon_closed_form(X0, X1, t)
    rows = []
    for f in fs:
        b = C.bounds(f)
        v = float(closed(f))
        st, m = identity_status((b.lower, b.upper), (v, v), ctx.tol)
        rows.append((b, v, m, st))
    _emit_worst(ctx, f"{key}:calderon", rows)

    # dual of the product (maximization over the product's unit ball) against
    # the product of the duals (its primal factorization value only: the lower
    # certificate of that product runs the same maximization as the left side)
    D = DualNorm(CalderonNorm(X0, X1, t))
    P = CalderonNorm(dual(X0), dual(X1), t)
    rows = []
    for y in fs:
        a = D.bounds(y)
        b = P.bounds(y).upper
        st, m = identity_status((a.lower, a.upper), (b, b), ctx.tol)
        rows.append((a, b, m, st))
    _emit_worst(ctx, f"{key}:dual", rows)

    # powers: r <= 1 on the couple, r = 2 on the (2-convex) dual couple
    for r, (A0, A1) in ((0.5, (X0, X1)), (2.0, (dual(X0), dual(X1)))):
        base = CalderonNorm(A0, A1, t)
        prod = CalderonNorm(power(A0, r, ctx.registry), power(A1, r, ctx.registry), t)
        rows = []
        for f in fs:
            b = base.bounds(f ** (1.0 / r))
            lhs = (b.lower ** r, b.upper ** r)
            rhs = prod.bounds(f)
            st, m = identity_status(lhs, (rhs.lower, rhs.upper), ctx.tol)
            rows.append((lhs, rhs, m, st))
        _emit_worst(ctx, f"{key}:power{r:g}", rows)

    rep = concavity_interp_check(X0, X1, t, ctx.cfg.suites.lemma4.concavity_search.budget(),
                                 registry=ctx.registry, seed=ctx.seed)
    ctx.record(f"{key}:concavity", rep.lhs, rep.rhs, rep.margin, rep.status)


def _plan_lemma4(cfg: Config):
    sec = cfg.suites.lemma4
    for i, a in enumerate(sec.anchors):
        yield Task("lemma4", "anchor", f"{a.X}#{i}", None, a)
    exps = [parse_exponent(p) for p in sec.exponents]
    for n in sec.dims:
        for p in exps:
            X = lp(n, p)
            yield Task("lemma4", "diag", X.descriptor, None, X)
    for n in sec.dims:
        for p0, p1 in itertools.combinations(exps, 2):
            X0, X1 = lp(n, p0), lp(n, p1)
            for t in sec.thetas:
                yield Task("lemma4", "couple", f"{X0.descriptor}~{X1.descriptor}", t, (X0, X1))


# ---------------------------------------------------------------------------
# embedding constants for l_2-valued operators
# ---------------------------------------------------------------------------


def _fibers(inst: VectorValuedInstance):
    if inst.E0 is None:
        return None, None
    return parse_space(inst.E0), parse_space(inst.E1)


def _m2_geo(ctx, inst, t):
    X0, X1 = parse_lattice(inst.X0), parse_lattice(inst.X1)
    return combine([ctx.registry.M2_concavity(X0), ctx.registry.M2_concavity(X1)],
                   lambda a, b: a ** (1 - t) * b ** t, "2-concavity of the lattices")


def _l2_fiber_embedding_bound(ctx, E0, E1, n, t):
    """Smallest proven upper bound for the embedding constant of (l_2^n(E0), l_2^n(E1))."""
    if E0 is None or E0.descriptor == E1.descriptor:
        return Entry(1.0, "trivial couple")
    cands = []
    L0, L1 = VectorValued(lp(n, 2.0), E0), VectorValued(lp(n, 2.0), E1)
    e = type2_interp_bound(L0, L1, t, ctx.registry)
    if e is not None:
        cands.append(e)
    e = combine([ctx.registry.T2(E0.dual()), ctx.registry.T2(E1.dual())],
                lambda a, b: a ** (1 - t) * b ** t, "type 2 of the dual fibers")
    if e is not None:
        cands.append(e)
    return min(cands, key=lambda e: (e.heuristic, e.value)) if cands else None


def vector_valued_embedding_bound(ctx, inst: VectorValuedInstance, t: float) -> Entry | None:
    """sqrt(2) C_2([E0,E1]_t) M_(2)(X0)^(1-t) M_(2)(X1)^t d_t[l_2^n(E0), l_2^n(E1)]."""
    E0, E1 = _fibers(inst)
    n = parse_lattice(inst.X0).dim
    c2 = Entry(1.0, "scalar fibers") if E0 is None else cotype_interp_bound(E0, E1, t, ctx.registry)
    return combine([c2, _m2_geo(ctx, inst, t), _l2_fiber_embedding_bound(ctx, E0, E1, n, t)],
                   lambda c, m, d: SQRT2 * c * m * d, "vector-valued embedding bound")


def vector_valued_embedding(ctx: _Ctx, payload):
    inst, k = payload
    t = ctx.task.theta
    name = f"{inst.key}:k={k}"
    bound = vector_valued_embedding_bound(ctx, inst, t)
    if bound is None:
        ctx.record(name, None, None, NAN, iv.SKIPPED)
        return
    M0, M1 = inst.spaces()
    est = operator_embedding_estimate(M0, M1, t, k, ctx.cfg.suites.prop3.estimate.budget(ctx.seed, ctx.params))
    status, margin = _bound_status(est.value, bound, ctx.tol)
    if est.flagged and status == iv.PASS:
        status = iv.STAGNATED
    ctx.record(name, est.value, bound.value, margin, status)


def _plan_prop3(cfg: Config):
    sec = cfg.suites.prop3
    for inst in sec.instances:
        for t in sec.thetas:
            for k in sec.k:
                yield Task("prop3", "embed", f"{inst.key}:k={k}", t, (inst, k))


def lattice_embedding_bounds(ctx, inst: VectorValuedInstance, t: float) -> dict:
    """The three proven routes for X0(E0), X1(E1); None where an entry is missing.

    common-fiber: sqrt(2) C_2(E) M^(1-t) M^t (E0 = E1 only);
    dual-type2:   sqrt(2) M^(1-t) M^t (T_2(E0')^(1-t) T_2(E1')^t)^2;
    type2:        T_2(X0(E0))^(1-t) T_2(X1(E1))^t.
    """
    E0, E1 = _fibers(inst)
    m = _m2_geo(ctx, inst, t)
    if E0 is None:
        common = combine([m], lambda a: SQRT2 * a, "scalar fibers")
        dual_t2 = common
    else:
        common = None
        if E0.descriptor == E1.descriptor:
            common = combine([m, ctx.registry.C2(E0)], lambda a, c: SQRT2 * a * c, "common fiber cotype")
        dual_t2 = combine([m, ctx.registry.T2(E0.dual()), ctx.registry.T2(E1.dual())],
                          lambda a, b, c: SQRT2 * a * (b ** (1 - t) * c ** t) ** 2, "dual fiber type 2")
    M0, M1 = inst.spaces()
    return {"common": common, "dual_type2": dual_t2, "type2": type2_interp_bound(M0, M1, t, ctx.registry)}


def lattice_embedding(ctx: _Ctx, payload):
    inst, k = payload
    t = ctx.task.theta
    name = f"{inst.key}:k={k}"
    M0, M1 = inst.spaces()
    est = operator_embedding_estimate(M0, M1, t, k, ctx.cfg.suites.cor6_7.estimate.budget(ctx.seed, ctx.params))
    # every ratio is at least 1 (the interpolated tensor norm dominates the
    # injective norm of the interpolated factors)
    status = iv.PASS if est.value >= 1.0 - ctx.tol else iv.FAIL
    ctx.record(f"{name}:lower", est.value, 1.0, est.value - 1.0, status)
    for route, bound in lattice_embedding_bounds(ctx, inst, t).items():
        if bound is None:
            ctx.record(f"{name}:{route}", est.value, None, NAN, iv.SKIPPED)
            continue
        status, margin = _bound_status(est.value, bound, ctx.tol)
        ctx.record(f"{name}:{route}", est.value, bound.value, margin, status)


def _plan_cor6_7(cfg: Config):
    sec = cfg.suites.cor6_7
    for inst in sec.instances:
        for t in sec.thetas:
            for k in sec.k:
                yield Task("cor6_7", "embed", f"{inst.key}:k={k}", t, (inst, k))


# ---------------------------------------------------------------------------
# tensor embedding constants
# ---------------------------------------------------------------------------


def tensor_embedding_bound(ctx, inst: TensorInstance, t: float) -> Entry | None:
    """16 [(M(X0) M(Y0))^(1-t) (M(X1) M(Y1))^t]^(5/2) t[E] t[F] with
    M = 2-concavity constant and t[.] the cotype factors of the fibers."""
    reg = ctx.registry
    lat = [parse_lattice(s) for s in (inst.X.X0, inst.Y.X0, inst.X.X1, inst.Y.X1)]
    m = combine([reg.M2_concavity(L) for L in lat],
                lambda a, b, c, d: ((a * b) ** (1 - t) * (c * d) ** t) ** 2.5, "2-concavity products")
    facs = []
    for side in (inst.X, inst.Y):
        E0, E1 = _fibers(side)
        facs.append(Entry(1.0, "scalar fibers") if E0 is None else tensor_cotype_factor(E0, E1, t, registry=reg))
    return combine([m] + facs, lambda a, b, c: 16.0 * a * b * c, "tensor embedding bound")


def tensor_embedding(ctx: _Ctx, inst: TensorInstance):
    t = ctx.task.theta
    bound = tensor_embedding_bound(ctx, inst, t)
    if bound is None:
        ctx.record(inst.key, None, None, NAN, iv.SKIPPED)
        return
    M0, M1 = inst.X.spaces()
    N0, N1 = inst.Y.spaces()
    est = tensor_embedding_estimate(M0, M1, N0, N1, t, ctx.cfg.suites.prop8.estimate.budget(ctx.seed, ctx.params))
    status, margin = _bound_status(est.value, bound, ctx.tol)
    if est.flagged and status == iv.PASS:
        status = iv.STAGNATED
    ctx.record(inst.key, est.value, bound.value, margin, status)


def _plan_prop8(cfg: Config):
    sec = cfg.suites.prop8
    for inst in sec.instances:
        for t in sec.thetas:
            yield Task("prop8", "embed", inst.key, t, inst)


# ---------------------------------------------------------------------------
# tensor interpolation, contraction, vector-valued interpolation
# ---------------------------------------------------------------------------


def tensor_interpolation(ctx: _Ctx, inst):
    """Both directions of the two-sided estimate on sampled tensors.

    lower: injective norm of z over the interpolated factors <= interpolation
    norm of z in the couple of injective tensor products;
    upper: interpolation norm <= (tensor embedding bound) * injective norm.
    """
    t = ctx.task.theta
    M0, M1 = inst.X.spaces()
    N0, N1 = inst.Y.spaces()
    mc, nc = InterpCouple(M0, M1), InterpCouple(N0, N1)
    tc = InterpCouple(InjectiveTensor(M0, N0), InjectiveTensor(M1, N1))
    target = InjectiveTensor(interpolated_space(mc, t), interpolated_space(nc, t))
    bound = tensor_embedding_bound(ctx, inst, t)
    dm, dn = mc.dim, nc.dim
    zs = [np.outer(ctx.cplx(dm), ctx.cplx(dn)) for _ in range(min(inst.rank_one, inst.samples))]
    zs += [ctx.cplx(dm, dn) for _ in range(inst.samples - len(zs))]
    low_rows, up_rows = [], []
    for z in zs:
        v = z.reshape(-1)
        den = (float(target._norm(v[None, :])[0]), float(target.norm_upper(v[None, :])[0]))
        up = interp_upper(tc, v, t, ctx.params)
        lo = interp_lower(tc, v, t, ctx.params, upper=up)
        interval = (min(lo.value, up.value), up.value)
        st, m = iv.inequality_status(den[0], up.value, ctx.tol)
        low_rows.append((den, interval, m, st))
        if bound is not None:
            st, m = _bound_status(interval[0], Entry(bound.value * den[1], bound.provenance, bound.heuristic), ctx.tol)
            up_rows.append((interval, (bound.value * den[0], bound.value * den[1]), m, st))
    _emit_worst(ctx, f"{inst.key}:lower", low_rows)
    if bound is None:
        ctx.record(f"{inst.key}:upper", None, None, NAN, iv.SKIPPED)
    else:
        _emit_worst(ctx, f"{inst.key}:upper", up_rows)


def interpolation_contraction(ctx: _Ctx, inst):
    t = ctx.task.theta
    M0, M1, N0, N1 = (parse_space(s) for s in (inst.M0, inst.M1, inst.N0, inst.N1))
    ops = [ctx.cplx(N0.dim, M0.dim) for _ in range(inst.operators)]
    rep = contraction_check(M0, M1, N0, N1, t, ops, ctx.params, ctx.tol)
    rows = [(lhs, rhs, m, iv.inequality_status(lhs, rhs, ctx.tol)[0]) for lhs, rhs, m in rep.values]
    _emit_worst(ctx, f"{inst.key}:contraction", rows)


def vector_valued_interpolation(ctx: _Ctx, inst):
    t = ctx.task.theta
    X0, X1 = parse_lattice(inst.X0), parse_lattice(inst.X1)
    E0, E1 = _fibers(inst)
    if E0 is None:
        E0 = E1 = euclidean(1)
    xs = [ctx.cplx(X0.dim * E0.dim) for _ in range(inst.samples)]
    rep = vector_valued_calderon_check(X0, X1, E0, E1, t, xs, ctx.params, ctx.tol)
    rows = []
    for lhs, (v_lo, v_hi) in rep.values:
        gap = max(lhs.lower - v_hi * (1 + ctx.tol), v_lo * (1 - ctx.tol) - lhs.upper)
        st = iv.FAIL if gap > 0 else (iv.STAGNATED if lhs.status == iv.STAGNATED_STATUS else iv.PASS)
        rows.append((lhs, (v_lo, v_hi), -gap, st))
    _emit_worst(ctx, f"{inst.key}:calderon", rows)


def _plan_theorem(cfg: Config):
    sec = cfg.suites.theorem
    for t in sec.thetas:
        for inst in sec.instances:
            yield Task("theorem", "tensor", inst.key, t, inst)
        for inst in sec.contraction:
            yield Task("theorem", "contraction", inst.key, t, inst)
        for inst in sec.calderon:
            yield Task("theorem", "calderon", inst.key, t, inst)


# ---------------------------------------------------------------------------
# factorizations and cotype
# ---------------------------------------------------------------------------


def _factor_budget(ctx):
    sec = ctx.cfg.suites.factorization
    return FactorBudget(sec.budget_restarts, sec.budget_iters, ctx.seed)


def multiplier_factorization(ctx: _Ctx, inst):
    X, E = parse_lattice(inst.X), parse_space(inst.E)
    target = VectorValued(X, E)
    budget = _factor_budget(ctx)
    rows = []
    for i in range(inst.samples):
        M = ctx.cplx(target.dim, inst.k)
        if i == 0:
            M[: E.dim] = 0.0  # one inactive fiber
        res = maurey_rosenthal(LinearMap(M, euclidean(inst.k), target), X, E, budget)
        rep = mr_bound_check(res, ctx.registry, ctx.tol)
        err = float(np.max(np.abs(res.reconstruct() - M)))
        status = iv.FAIL if err > 1e-10 * max(1.0, float(np.max(np.abs(M)))) else rep.status
        rows.append((res.product, rep.rhs, rep.margin, status))
    _emit_worst(ctx, f"{inst.key}:multiplier", rows)
    zero = maurey_rosenthal(LinearMap(np.zeros((target.dim, inst.k)), euclidean(inst.k), target), X, E, budget)
    rep = mr_bound_check(zero, ctx.registry, ctx.tol)
    ctx.record(f"{inst.key}:zero", zero.product, rep.rhs, rep.margin, rep.status)


def hilbert_factorization_interp(ctx: _Ctx, inst):
    t = ctx.task.theta
    E0, E1, F0, F1 = (parse_space(s) for s in (inst.E0, inst.E1, inst.F0, inst.F1))
    e_bound = operator_embedding_bound(E0, E1, t, ctx.registry)
    f_bound = operator_embedding_bound(F0, F1, t, ctx.registry)
    ops = [ctx.cplx(F0.dim, E0.dim) for _ in range(inst.operators)]
    rep = gamma2_interp_check(E0, E1, F0, F1, t, ops, e_bound, f_bound, ctx.params, _factor_budget(ctx), ctx.tol)
    rows = [(lhs, rhs, m, iv.inequality_status(lhs, rhs, ctx.tol)[0]) for lhs, rhs, m in rep.values]
    lhs, rhs, margin, status = _worst(rows)
    if rep.status == iv.INFORMATIONAL and status != iv.FAIL:
        status = iv.INFORMATIONAL
    ctx.record(f"{inst.key}:gamma2", lhs, rhs, margin, status)


def vector_valued_cotype(ctx: _Ctx, inst):
    X, E = parse_lattice(inst.X), parse_space(inst.E)
    rep = vector_valued_cotype_check(X, E, ctx.cfg.suites.factorization.search.budget(), ctx.registry,
                                     ctx.tol, ctx.seed)
    ctx.record(f"{inst.key}:cotype", rep.lhs, rep.rhs, rep.margin, rep.status)


def moment_comparison(ctx: _Ctx, space_desc):
    """Second against first Rademacher moment, exact enumeration."""
    E = parse_space(space_desc)
    sec = ctx.cfg.suites.factorization.moments
    for k in sec.k:
        rows = []
        for _ in range(sec.families):
            fam = RademacherFamily(ctx.cplx(k, E.dim), E)
            m2 = rademacher_average(fam, 2).value
            try:
                slack = khinchine_kahane_check(fam)
                st = iv.PASS
            except RuntimeError:
                slack = SQRT2 * rademacher_average(fam, 1).value - m2
                st = iv.FAIL
            rows.append((m2, m2 + slack, slack, st))
        _emit_worst(ctx, f"{E.descriptor}:moments:k={k}", rows)


def _plan_factorization(cfg: Config):
    sec = cfg.suites.factorization
    for inst in sec.mr:
        yield Task("factorization", "mr", inst.key, None, inst)
    for t in sec.thetas:
        for inst in sec.gamma2:
            yield Task("factorization", "gamma2", inst.key, t, inst)
    for inst in sec.cotype:
        yield Task("factorization", "cotype", inst.key, None, inst)
    for s in sec.moments.spaces:
        yield Task("factorization", "moments", s, None, s)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

RUNNERS: dict[tuple[str, str], Callable] = {
    ("lemma4", "anchor"): lattice_identity_anchor,
    ("lemma4", "diag"): lattice_diagonal_identity,
    ("lemma4", "couple"): lattice_couple_identities,
    ("prop3", "embed"): vector_valued_embedding,
    ("cor6_7", "embed"): lattice_embedding,
    ("prop8", "embed"): tensor_embedding,
    ("theorem", "tensor"): tensor_interpolation,
    ("theorem", "contraction"): interpolation_contraction,
    ("theorem", "calderon"): vector_valued_interpolation,
    ("factorization", "mr"): multiplier_factorization,
    ("factorization", "gamma2"): hilbert_factorization_interp,
    ("factorization", "cotype"): vector_valued_cotype,
    ("factorization", "moments"): moment_comparison,
}

PLANNERS = {
    "lemma4": _plan_lemma4,
    "prop3": _plan_prop3,
    "cor6_7": _plan_cor6_7,
    "prop8": _plan_prop8,
    "theorem": _plan_theorem,
    "factorization": _plan_factorization,
}


def plan(cfg: Config, suites=SUITE_ORDER) -> list[Task]:
    unknown = set(suites) - set(PLANNERS)
    if unknown:
        raise ValueError(f"unknown suites {sorted(unknown)}")
    return [task for s in SUITE_ORDER if s in suites for task in PLANNERS[s](cfg)]


def run_task(task: Task, cfg: Config, seed: int) -> list[CheckRecord]:
    """Run one task; an exception becomes a single STAGNATED record."""
    ctx = _Ctx(cfg, task, seed)
    try:
        RUNNERS[(task.suite, task.kind)](ctx, task.payload)
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        log.warning("%s %s (theta=%s) raised %s: %s", task.suite, task.key, task.theta, type(exc).__name__, exc)
        ctx.records.append(CheckRecord(task.suite, f"{task.key}:error", task.theta, NAN, NAN, NAN, NAN, NAN,
                                       iv.STAGNATED, time.perf_counter() - ctx._t0))
    return ctx.records


