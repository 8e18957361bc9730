"""Finite-dimensional normed spaces, linear maps, and injective tensor norms.

Vectors are complex numpy arrays. Pairings are bilinear, <a, b> = sum a_i b_i,
and every space reports norm gradients in the convention
dN = Re sum(conj(G) * dv), so that conj(G) is a norming functional of v.

Tensors in A (x) B are stored as dA x dB matrices, flattened row-major.
Operators M -> N are dimN x dimM matrices; L(M, N) is identified with the
injective tensor product N (x)_eps M'.
"""

from __future__ import annotations

from functools import cached_property
from itertools import product as iproduct

import numpy as np

from . import intervals as iv
from ._kernels import injective_altmax, mixed_norm, mixed_norm_grad
from .lattice import LatticeNorm, LpNorm, dual, lp, power
from .registry import DEFAULT_REGISTRY, ConstantsRegistry, Entry

SIGN_ENUM_MAX = 12
HEURISTIC_SLACK = 1e-3

KHINCHINE_L1 = "l_1 has cotype 2 constant sqrt(2) (classical Khinchine inequality, best constant)"
HILBERT = "Hilbert space: type 2 and cotype 2 constants equal 1 (parallelogram law)"


def _rows(x, dim) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected vectors of length {dim}, got shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries in input vector")
    return arr.astype(complex), single


def _phase(V):
    a = np.abs(V)
    return np.where(a > 0, V / np.where(a > 0, a, 1.0), 0.0)


class NormedSpace:
    """A norm on C^dim (or R^dim when ``field == "real"``)."""

    dim: int
    field: str = "complex"

    # --- evaluation -------------------------------------------------------
    def norm(self, x):
        V, single = _rows(x, self.dim)
        out = self._norm(V)
        return float(out[0]) if single else out

    def _norm(self, V) -> np.ndarray:
        return self.norm_grad(V)[0]

    def norm_grad(self, V) -> tuple[np.ndarray, np.ndarray]:
        """Values and gradients G with dN = Re sum(conj(G) dV), row-wise."""
        raise NotImplementedError

    def norm_upper(self, V) -> np.ndarray:
        """Upper bounds on the norms (equal to ``_norm`` for exact spaces)."""
        return self._norm(np.atleast_2d(V).astype(complex))

    def bounds(self, x) -> iv.CertifiedInterval:
        V, _ = _rows(x, self.dim)
        lo = float(self._norm(V)[0])
        hi = float(self.norm_upper(V)[0])
        return iv.CertifiedInterval(lo, max(lo, hi), exact=self.exact)

    @property
    def exact(self) -> bool:
        return True

    def dual(self) -> "NormedSpace":
        raise NotImplementedError

    def dual_norm(self, y):
        return self.dual().norm(y)

    # --- structure --------------------------------------------------------
    def structure(self) -> np.ndarray:
        """Columns s such that diag(exp(i s b)) is an isometry for real b.

        Interpolation candidates use these as analytic diagonal multipliers.
        """
        return np.ones((self.dim, 1))

    @property
    def mixed_spec(self):
        return None

    @property
    def lattice(self) -> LatticeNorm | None:
        """The lattice norm on the coordinates, if the space is one."""
        return None

    @property
    def descriptor(self) -> str:
        raise NotImplementedError

    def analytic_constant(self, kind, registry: ConstantsRegistry) -> Entry | None:
        if self.dim == 1 and kind in ("T2_upper", "C2_upper"):
            return Entry(1.0, "one-dimensional space")
        return None

    def __repr__(self):
        return self.descriptor


class LatticeSpace(NormedSpace):
    """Complexified lattice: the norm of a vector is the lattice norm of its moduli."""

    def __init__(self, X: LatticeNorm, field: str = "complex"):
        if field not in ("real", "complex"):
            raise ValueError("field must be 'real' or 'complex'")
        self.X = X
        self.dim = X.dim
        self.field = field

    @cached_property
    def mixed_spec(self):
        lpX = self.X.as_lp()
        if lpX is None or lpX.p < 1:
            return None
        return lpX.mixed_spec

    @property
    def lattice(self):
        return self.X

    def _norm(self, V):
        if self.mixed_spec is not None:
            return mixed_norm(V, self.mixed_spec)
        return self.X._eval(np.abs(V))

    def norm_grad(self, V):
        V = np.atleast_2d(V).astype(complex)
        if self.mixed_spec is not None:
            return mixed_norm_grad(V, self.mixed_spec)
        U = np.abs(V)
        vals = self.X._eval(U)
        G = np.array([self.X.grad(u) for u in U]) * _phase(V)
        return vals, G

    def norm_upper(self, V):
        V = np.atleast_2d(V).astype(complex)
        if self.mixed_spec is None and hasattr(self.X, "bounds"):
            return np.array([self.X.bounds(np.abs(v)).upper for v in V])
        return self._norm(V)

    @property
    def exact(self):
        return self.mixed_spec is not None or not hasattr(self.X, "oracle")

    def dual(self):
        return LatticeSpace(dual(self.X), self.field)

    def structure(self):
        return np.eye(self.dim)

    @property
    def descriptor(self):
        return self.X.descriptor

    def analytic_constant(self, kind, registry):
        base = super().analytic_constant(kind, registry)
        if base is not None:
            return base
        lpX = self.X.as_lp()
        if lpX is None:
            return None
        if lpX.p == 2.0 and kind in ("T2_upper", "C2_upper"):
            return Entry(1.0, HILBERT)
        if lpX.p == 1.0 and kind == "C2_upper":
            return Entry(np.sqrt(2.0), KHINCHINE_L1)
        return None


def lattice_space(X: LatticeNorm, field: str = "complex") -> LatticeSpace:
    return LatticeSpace(X, field)


def euclidean(n: int, field: str = "complex") -> LatticeSpace:
    return LatticeSpace(lp(n, 2.0), field)


class VectorValued(NormedSpace):
    """X(E): blocks of length E.dim, normed by the lattice norm of fiber norms."""

    def __init__(self, X: LatticeNorm, E: NormedSpace):
        self.X = X
        self.E = E
        self.n = X.dim
        self.m = E.dim
        self.dim = self.n * self.m
        self.field = E.field

    @cached_property
    def mixed_spec(self):
        lpX = self.X.as_lp()
        sE = self.E.mixed_spec
        if lpX is None or lpX.p < 1 or sE is None or sE[4] != 1:
            return None
        q, wE = sE[0], sE[1]
        return (lpX.p, lpX.weights, q, np.tile(wE, self.n), self.m)

    @property
    def lattice(self):
        return None

    def fiber_norms(self, V, upper: bool = False):
        V = np.atleast_2d(V).astype(complex)
        B = V.shape[0]
        F = V.reshape(B * self.n, self.m)
        vals = self.E.norm_upper(F) if upper else self.E._norm(F)
        return vals.reshape(B, self.n)

    def _norm(self, V):
        if self.mixed_spec is not None:
            return mixed_norm(V, self.mixed_spec)
        return self.X._eval(self.fiber_norms(V))

    def norm_grad(self, V):
        V = np.atleast_2d(V).astype(complex)
        if self.mixed_spec is not None:
            return mixed_norm_grad(V, self.mixed_spec)
        B = V.shape[0]
        fv, fG = self.E.norm_grad(V.reshape(B * self.n, self.m))
        fv = fv.reshape(B, self.n)
        fG = fG.reshape(B, self.n, self.m)
        vals = self.X._eval(fv)
        gX = np.array([self.X.grad(u) for u in fv])
        return vals, (gX[:, :, None] * fG).reshape(B, self.dim)

    def norm_upper(self, V):
        V = np.atleast_2d(V).astype(complex)
        if self.mixed_spec is not None:
            return self._norm(V)
        fu = self.fiber_norms(V, upper=True)
        if hasattr(self.X, "bounds") and self.X.as_lp() is None:
            return np.array([self.X.bounds(u).upper for u in fu])
        return self.X._eval(fu)

    @property
    def exact(self):
        return self.E.exact and (self.X.as_lp() is not None or not hasattr(self.X, "oracle"))

    def dual(self):
        return VectorValued(dual(self.X), self.E.dual())

    def structure(self):
        SE = self.E.structure()
        if SE.shape[1] == self.m and np.allclose(SE, np.eye(self.m)):
            return np.eye(self.dim)
        return np.kron(np.eye(self.n), SE)

    @property
    def descriptor(self):
        return f"{self.X.descriptor}({self.E.descriptor})"

    def analytic_constant(self, kind, registry):
        base = super().analytic_constant(kind, registry)
        if base is not None:
            return base
        if kind not in ("T2_upper", "C2_upper"):
            return None
        if self.m == 1:
            e = registry.lookup(LatticeSpace(self.X, self.field), kind)
            return None if e is None else Entry(e.value, "scalar fibers: " + e.provenance, e.heuristic)
        if self.n == 1:
            e = registry.lookup(self.E, kind)
            return None if e is None else Entry(e.value, "single fiber: " + e.provenance, e.heuristic)
        lpX = self.X.as_lp()
        if lpX is None:
            return None
        if lpX.p == 2.0:
            e = registry.lookup(self.E, kind)
            if e is not None:
                return Entry(e.value, "l_2(F) has the same type 2 / cotype 2 constant as F (Kahane averaging): "
                             + e.provenance, e.heuristic)
        sE = self.E.mixed_spec
        if lpX.p == 1.0 and kind == "C2_upper" and sE is not None and sE[0] == 1.0 and sE[4] == 1:
            return Entry(np.sqrt(2.0), "l_1(l_1) is a weighted l_1 space; " + KHINCHINE_L1)
        return None


def make_vector_valued(X: LatticeNorm, E: NormedSpace) -> VectorValued:
    return VectorValued(X, E)


class CustomSpace(NormedSpace):
    """A norm given by callables on single complex vectors."""

    def __init__(self, dim: int, norm_fn, dual_fn, descriptor: str, field: str = "complex"):
        self.dim = dim
        self._fn = norm_fn
        self._dual_fn = dual_fn
        self._desc = descriptor
        self.field = field

    def _norm(self, V):
        return np.array([float(self._fn(v)) for v in V])

    def norm_grad(self, V):
        V = np.atleast_2d(V).astype(complex)
        vals = self._norm(V)
        G = np.zeros_like(V)
        for b, v in enumerate(V):
            h = 1e-7 * max(1.0, np.abs(v).max())
            for i in range(self.dim):
                e = np.zeros(self.dim, dtype=complex)
                e[i] = h
                dr = (self._fn(v + e) - self._fn(v - e)) / (2 * h)
                di = (self._fn(v + 1j * e) - self._fn(v - 1j * e)) / (2 * h)
                G[b, i] = dr + 1j * di
        return vals, G

    def dual(self):
        return CustomSpace(self.dim, self._dual_fn, self._fn, f"dual({self._desc})", self.field)

    @property
    def descriptor(self):
        return self._desc


# ---------------------------------------------------------------------------
# tensors
# ---------------------------------------------------------------------------


def _lp_of(space: NormedSpace):
    s = space.mixed_spec
    if s is None or s[4] != 1:
        return None
    return s[0], s[1]


def _sign_patterns(k: int) -> np.ndarray:
    """All sign vectors in {-1, 1}^k with first entry +1."""
    if k == 1:
        return np.ones((1, 1))
    rest = np.array(list(iproduct((1.0, -1.0), repeat=k - 1)))
    return np.hstack([np.ones((rest.shape[0], 1)), rest])


def _altmax_generic(Z, A: NormedSpace, B: NormedSpace, Y0, iters):
    Bn, dA, dB = Z.shape
    R = Y0.shape[1]
    Zr = np.repeat(Z, R, axis=0)
    Y = Y0.reshape(Bn * R, dB).astype(complex)
    Xp = np.zeros((Bn * R, dA), dtype=complex)
    vals = np.zeros(Bn * R)
    for _ in range(iters):
        v = np.einsum("bij,bj->bi", Zr, Y)
        _, GA = A.norm_grad(v)
        Xp = np.conj(GA)
        w = np.einsum("bij,bi->bj", Zr, Xp)
        vals, GB = B.norm_grad(w)
        Y = np.conj(GB)
    vals = vals.reshape(Bn, R)
    arg = np.argmax(vals, axis=1)
    rows = np.arange(Bn) * R + arg
    return vals[np.arange(Bn), arg], Xp[rows], Y[rows]


class InjectiveTensor(NormedSpace):
    """A (x)_eps B: sup of |<x' (x) y', z>| over the dual unit balls."""

    def __init__(self, A: NormedSpace, B: NormedSpace, restarts: int = 8, iters: int = 30,
                 slack: float = HEURISTIC_SLACK):
        self.A, self.B = A, B
        self.dA, self.dB = A.dim, B.dim
        self.dim = self.dA * self.dB
        self.field = "real" if (A.field == "real" and B.field == "real") else "complex"
        self.restarts = restarts
        self.iters = iters
        self.slack = slack
        self._warm: np.ndarray | None = None

    # exactness rules, decided once per space
    @cached_property
    def _mode(self) -> str:
        la, lb = _lp_of(self.A), _lp_of(self.B)
        if la is not None and np.isinf(la[0]):
            return "rows"
        if lb is not None and np.isinf(lb[0]):
            return "cols"
        if la is not None and lb is not None and la[0] == 2.0 and lb[0] == 2.0:
            return "svd"
        if self.field == "real":
            if la is not None and la[0] == 1.0 and self.dA <= SIGN_ENUM_MAX:
                return "signs_rows"
            if lb is not None and lb[0] == 1.0 and self.dB <= SIGN_ENUM_MAX:
                return "signs_cols"
        return "altmax"

    @property
    def exact(self):
        return self._mode != "altmax"

    def _evaluate(self, V):
        """Values with norming rank-one functionals (x', y'), row-wise."""
        V = np.atleast_2d(V).astype(complex)
        Bn = V.shape[0]
        Z = V.reshape(Bn, self.dA, self.dB)
        mode = self._mode
        if mode in ("rows", "cols"):
            Zt = Z if mode == "rows" else np.transpose(Z, (0, 2, 1))
            S, O = (self.A, self.B) if mode == "rows" else (self.B, self.A)
            w = _lp_of(S)[1]
            k, d = Zt.shape[1], Zt.shape[2]
            rows = (Zt * w[None, :, None]).reshape(Bn * k, d)
            rv, rG = O.norm_grad(rows)
            rv = rv.reshape(Bn, k)
            i = np.argmax(rv, axis=1)
            vals = rv[np.arange(Bn), i]
            s = np.zeros((Bn, k), dtype=complex)
            s[np.arange(Bn), i] = w[i]
            o = np.conj(rG.reshape(Bn, k, d)[np.arange(Bn), i])
            return (vals, s, o) if mode == "rows" else (vals, o, s)
        if mode == "svd":
            wa, wb = _lp_of(self.A)[1], _lp_of(self.B)[1]
            M = Z * wa[None, :, None] * wb[None, None, :]
            U, sv, Vh = np.linalg.svd(M)
            vals = sv[:, 0]
            xp = wa[None, :] * np.conj(U[:, :, 0])
            yp = wb[None, :] * np.conj(Vh[:, 0, :])
            return vals, xp, yp
        if mode in ("signs_rows", "signs_cols"):
            Zt = Z if mode == "signs_rows" else np.transpose(Z, (0, 2, 1))
            S, O = (self.A, self.B) if mode == "signs_rows" else (self.B, self.A)
            w = _lp_of(S)[1]
            k, d = Zt.shape[1], Zt.shape[2]
            P = _sign_patterns(k) * w[None, :]
            sums = np.einsum("sk,bkd->bsd", P.astype(complex), Zt)
            nv = O._norm(sums.reshape(-1, d)).reshape(Bn, P.shape[0])
            j = np.argmax(nv, axis=1)
            vals = nv[np.arange(Bn), j]
            best = sums[np.arange(Bn), j]
            _, G = O.norm_grad(best)
            s = P[j].astype(complex)
            o = np.conj(G)
            return (vals, s, o) if mode == "signs_rows" else (vals, o, s)
        return self._altmax(Z)

    def _starts(self, Bn):
        rng = np.random.default_rng(12345)
        R = max(1, self.restarts)
        Y0 = rng.standard_normal((R, self.dB))
        if self.field == "complex":
            Y0 = Y0 + 1j * rng.standard_normal((R, self.dB))
        Y0[0] = 1.0
        for r in range(1, min(R, self.dB + 1)):
            Y0[r] = 0.0
            Y0[r, r - 1] = 1.0
        return np.broadcast_to(Y0, (Bn, R, self.dB)).astype(complex)

    def _altmax(self, Z):
        Bn = Z.shape[0]
        Y0 = self._starts(Bn)
        if self.A.mixed_spec is not None and self.B.mixed_spec is not None:
            vals, xp, yp = injective_altmax(np.ascontiguousarray(Z), self.A.mixed_spec,
                                            self.B.mixed_spec, np.ascontiguousarray(Y0), self.iters)
        else:
            vals, xp, yp = _altmax_generic(Z, self.A, self.B, Y0, self.iters)
        return np.asarray(vals), np.asarray(xp), np.asarray(yp)

    def _norm(self, V):
        return self._evaluate(V)[0]

    def norm_grad(self, V):
        vals, xp, yp = self._evaluate(V)
        G = np.conj(xp[:, :, None] * yp[:, None, :]).reshape(len(vals), self.dim)
        return vals, G

    def norm_upper(self, V):
        vals = self._norm(np.atleast_2d(V).astype(complex))
        return vals if self.exact else vals * (1 + self.slack)

    def functionals(self, V):
        """Norming rank-one functionals (x', y') for each row."""
        _, xp, yp = self._evaluate(V)
        return xp, yp

    def dual(self):
        return ProjectiveTensor(self.A.dual(), self.B.dual())

    def structure(self):
        SA, SB = self.A.structure(), self.B.structure()
        return np.hstack([np.kron(SA, np.ones((self.dB, 1))), np.kron(np.ones((self.dA, 1)), SB)])

    @property
    def descriptor(self):
        return f"{self.A.descriptor}(x)eps{self.B.descriptor}"


class ProjectiveTensor(NormedSpace):
    """A (x)_pi B, used only as the dual of an injective product.

    Exact when a factor is (weighted) l_1 or both are (weighted) l_2;
    otherwise the value is the best of several explicit decompositions (rows,
    columns, sign averages over a lattice factor, singular vectors), which is
    an upper bound.
    """

    def __init__(self, A: NormedSpace, B: NormedSpace):
        self.A, self.B = A, B
        self.dA, self.dB = A.dim, B.dim
        self.dim = self.dA * self.dB
        self.field = "real" if (A.field == "real" and B.field == "real") else "complex"

    @cached_property
    def _unit_norms(self):
        return (self.A.norm(np.eye(self.dA)), self.B.norm(np.eye(self.dB)))

    @cached_property
    def _mode(self):
        la, lb = _lp_of(self.A), _lp_of(self.B)
        if la is not None and la[0] == 1.0:
            return "rows"
        if lb is not None and lb[0] == 1.0:
            return "cols"
        if la is not None and lb is not None and la[0] == 2.0 and lb[0] == 2.0:
            return "nuclear"
        return "bound"

    @property
    def exact(self):
        return self._mode != "bound"

    def _rowcol(self, Z, which):
        Bn = Z.shape[0]
        if which == "rows":
            a = self._unit_norms[0]
            rv, rG = self.B.norm_grad(Z.reshape(Bn * self.dA, self.dB))
            rv = rv.reshape(Bn, self.dA)
            return (rv * a).sum(axis=1), (rG.reshape(Bn, self.dA, self.dB) * a[None, :, None])
        b = self._unit_norms[1]
        Zt = np.transpose(Z, (0, 2, 1))
        cv, cG = self.A.norm_grad(Zt.reshape(Bn * self.dB, self.dA))
        cv = cv.reshape(Bn, self.dB)
        G = np.transpose(cG.reshape(Bn, self.dB, self.dA) * b[None, :, None], (0, 2, 1))
        return (cv * b).sum(axis=1), G

    def _signs(self, Z, which):
        """Sign-average decomposition Z = E[(eps c) (x) Z^T (eps / c)] over the
        rows (or columns), with c_i = 1 / ||e_i||; valid for a lattice factor."""
        if which == "cols":
            vals, G = ProjectiveTensor(self.B, self.A)._signs(np.transpose(Z, (0, 2, 1)), "rows")
            return vals, np.transpose(G, (0, 2, 1))
        Bn = Z.shape[0]
        a = self._unit_norms[0]
        c = 1.0 / a
        cn = float(self.A.norm(c[None, :].astype(complex))[0])
        P = _sign_patterns(self.dA)
        S = np.einsum("sk,bkd->bsd", P, Z / c[None, :, None])
        sv, sG = self.B.norm_grad(S.reshape(-1, self.dB))
        sv, sG = sv.reshape(Bn, len(P)), sG.reshape(Bn, len(P), self.dB)
        G = cn * np.einsum("sk,bsd->bkd", P, sG) / len(P) / c[None, :, None]
        return cn * sv.mean(axis=1), G

    @cached_property
    def _bound_candidates(self):
        out = ["rows", "cols"]
        if self.A.lattice is not None and self.dA <= SIGN_ENUM_MAX:
            out.append("signs_rows")
        if self.B.lattice is not None and self.dB <= SIGN_ENUM_MAX:
            out.append("signs_cols")
        return out

    def _svd_bound(self, Z):
        U, sv, Vh = np.linalg.svd(Z)
        Bn, r = Z.shape[0], sv.shape[1]
        ua = self.A._norm(np.transpose(U[:, :, :r], (0, 2, 1)).reshape(Bn * r, self.dA)).reshape(Bn, r)
        vb = self.B._norm(Vh[:, :r, :].reshape(Bn * r, self.dB)).reshape(Bn, r)
        return (sv * ua * vb).sum(axis=1)

    def norm_grad(self, V):
        V = np.atleast_2d(V).astype(complex)
        Bn = V.shape[0]
        Z = V.reshape(Bn, self.dA, self.dB)
        mode = self._mode
        if mode == "nuclear":
            wa, wb = _lp_of(self.A)[1], _lp_of(self.B)[1]
            M = Z * wa[None, :, None] * wb[None, None, :]
            U, sv, Vh = np.linalg.svd(M, full_matrices=False)
            G = np.einsum("bik,bkj->bij", U, Vh) * wa[None, :, None] * wb[None, None, :]
            return sv.sum(axis=1), G.reshape(Bn, self.dim)
        if mode in ("rows", "cols"):
            vals, G = self._rowcol(Z, mode)
            return vals, G.reshape(Bn, self.dim)
        best_v, best_G = None, None
        for cand in self._bound_candidates:
            v, G = self._rowcol(Z, cand) if cand in ("rows", "cols") else self._signs(Z, cand[6:])
            if best_v is None:
                best_v, best_G = v, G
            else:
                better = v < best_v
                best_v = np.where(better, v, best_v)
                best_G = np.where(better[:, None, None], G, best_G)
        return best_v, best_G.reshape(Bn, self.dim)

    def norm_upper(self, V):
        V = np.atleast_2d(V).astype(complex)
        vals = self.norm_grad(V)[0]
        if self._mode == "bound":
            vals = np.minimum(vals, self._svd_bound(V.reshape(-1, self.dA, self.dB)))
        return vals

    def _norm(self, V):
        return self.norm_upper(V)

    def dual(self):
        return InjectiveTensor(self.A.dual(), self.B.dual())

    def structure(self):
        SA, SB = self.A.structure(), self.B.structure()
        return np.hstack([np.kron(SA, np.ones((self.dB, 1))), np.kron(np.ones((self.dA, 1)), SB)])

    @property
    def descriptor(self):
        return f"{self.A.descriptor}(x)pi{self.B.descriptor}"


class OperatorSpace(InjectiveTensor):
    """L(M, N) with the operator norm, as N (x)_eps M'."""

    def __init__(self, M: NormedSpace, N: NormedSpace, **kw):
        super().__init__(N, M.dual(), **kw)
        self.domain, self.codomain = M, N

    @property
    def descriptor(self):
        return f"L({self.domain.descriptor},{self.codomain.descriptor})"


# ---------------------------------------------------------------------------
# linear maps
# ---------------------------------------------------------------------------


class LinearMap:
    def __init__(self, matrix, domain: NormedSpace, codomain: NormedSpace):
        M = np.atleast_2d(np.asarray(matrix))
        if M.shape != (codomain.dim, domain.dim):
            raise ValueError(f"matrix shape {M.shape} does not match "
                             f"({codomain.dim}, {domain.dim})")
        self.matrix = M
        self.domain, self.codomain = domain, codomain

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.matrix @ other.matrix, other.domain, self.codomain)

    def scaled(self, c) -> "LinearMap":
        return LinearMap(c * self.matrix, self.domain, self.codomain)


def operator_norm(T: LinearMap, restarts: int = 8) -> iv.CertifiedInterval:
    """Operator norm; exact in the closed-form cases, else lower bound from
    alternating maximization and upper = lower * (1 + slack)."""
    S = OperatorSpace(T.domain, T.codomain, restarts=restarts)
    v = T.matrix.reshape(1, -1).astype(complex)
    vals, xp, yp = S._evaluate(v)
    lo = float(vals[0])
    hi = lo if S.exact else lo * (1 + S.slack)
    # yp is a norming functional on M' side, i.e. a unit vector of the domain
    return iv.CertifiedInterval(lo, hi, lower_witness=yp[0], upper_witness=S._mode, exact=S.exact,
                                status=iv.CONVERGED)


def injective_norm(Z, E: NormedSpace, F: NormedSpace, restarts: int = 8) -> iv.CertifiedInterval:
    S = InjectiveTensor(E, F, restarts=restarts)
    Z = np.asarray(Z)
    if Z.shape != (E.dim, F.dim):
        raise ValueError(f"tensor shape {Z.shape} does not match ({E.dim}, {F.dim})")
    vals, xp, yp = S._evaluate(Z.reshape(1, -1))
    lo = float(vals[0])
    hi = lo if S.exact else lo * (1 + S.slack)
    return iv.CertifiedInterval(lo, hi, lower_witness=(xp[0], yp[0]), exact=S.exact)


# ---------------------------------------------------------------------------
# diagonal operators
# ---------------------------------------------------------------------------


def diag_chain_lattice(X: LatticeNorm, registry: ConstantsRegistry = DEFAULT_REGISTRY) -> LatticeNorm:
    """The lattice (((X')^2)')^(1/2) whose norm of lambda is ||D_lambda: l_2 -> X||."""
    return power(dual(power(dual(X), 2.0, registry)), 0.5, registry)


def _require_concavity(X: LatticeNorm, registry):
    e = registry.M2_concavity(X)
    if e is None or e.value > 1.0 + 1e-12 or e.heuristic:
        raise ValueError(f"no certificate that {X.descriptor} is 2-concave with constant 1")


def diag_norm_identity(lam, X: LatticeNorm, registry: ConstantsRegistry = DEFAULT_REGISTRY):
    """(lhs interval, rhs value): the operator norm of D_lambda: l_2^n -> X by
    maximization, and the norm of lambda in the dual/power chain lattice."""
    _require_concavity(X, registry)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (X.dim,):
        raise ValueError("lambda must have one entry per lattice coordinate")
    T = LinearMap(np.diag(lam), euclidean(X.dim, "real"), LatticeSpace(X, "real"))
    lhs = operator_norm(T)
    rhs = diag_chain_lattice(X, registry)(lam)
    return lhs, float(rhs)


def tensor_extension_norm(lam, X: LatticeNorm, E: NormedSpace,
                          registry: ConstantsRegistry = DEFAULT_REGISTRY) -> iv.CertifiedInterval:
    """||D_lambda (x) id: l_2^n(E) -> X(E)|| by maximization."""
    _require_concavity(X, registry)
    lam = np.asarray(lam, dtype=float)
    n, m = X.dim, E.dim
    M = np.kron(np.diag(lam), np.eye(m))
    T = LinearMap(M, VectorValued(lp(n, 2.0), E), VectorValued(X, E))
    return operator_norm(T)


__all__ = [
    "NormedSpace", "LatticeSpace", "VectorValued", "CustomSpace", "InjectiveTensor",
    "ProjectiveTensor", "OperatorSpace", "LinearMap", "lattice_space", "euclidean",
    "make_vector_valued", "operator_norm", "injective_norm", "diag_norm_identity",
    "diag_chain_lattice", "tensor_extension_norm", "LpNorm",
]
