"""Hot numeric kernels: batched mixed l_p norms, alternating maximization for
injective norms, and exhaustive Rademacher sign sums.

Each kernel has a numba ``@njit`` implementation and a pure-numpy twin with
identical semantics. The active backend is chosen once at import time:

    LATINTERP_BACKEND=numpy   force the numpy path
    LATINTERP_BACKEND=numba   require numba (ImportError if missing)

Unset means "numba if importable, else numpy". ``BACKEND`` holds the choice and
both implementations stay reachable as ``*_numpy`` / ``*_numba`` so tests and
the benchmark can compare them directly.

A *mixed norm* on C^(n*m) is described by ``(p, w_outer, q, w_inner, m)``:

    ||v|| = || ( || w_inner[block k] * v[block k] ||_q )_k * w_outer ||_p

with contiguous blocks of length ``m``. ``m == 1`` gives a weighted l_p norm.
"""

from __future__ import annotations

import os

import numpy as np

_REQUESTED = os.environ.get("LATINTERP_BACKEND", "").strip().lower()

try:  # pragma: no cover - depends on environment
    if _REQUESTED == "numpy":
        raise ImportError("numpy backend requested")
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    if _REQUESTED == "numba":
        raise
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _pnorm_rows_numpy(u, p):
    """p-norm along the last axis of a nonnegative array."""
    if np.isinf(p):
        return u.max(axis=-1)
    if p == 1.0:
        return u.sum(axis=-1)
    if p == 2.0:
        return np.sqrt((u * u).sum(axis=-1))
    scale = u.max(axis=-1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return safe[..., 0] * ((u / safe) ** p).sum(axis=-1) ** (1.0 / p)


def _pnorm_grad_numpy(u, val, p):
    """Derivative of the p-norm along the last axis w.r.t. each entry of u >= 0."""
    if np.isinf(p):
        g = np.zeros_like(u)
        idx = np.argmax(u, axis=-1)
        np.put_along_axis(g, idx[..., None], 1.0, axis=-1)
        return np.where(val[..., None] > 0, g, 0.0)
    if p == 1.0:
        return np.where(val[..., None] > 0, np.ones_like(u), 0.0)
    safe = np.where(val > 0, val, 1.0)[..., None]
    return np.where(val[..., None] > 0, (u / safe) ** (p - 1.0), 0.0)


def mixed_norm_numpy(V, p, w_outer, q, w_inner, m):
    V = np.asarray(V)
    B = V.shape[0]
    n = w_outer.shape[0]
    a = np.abs(V).reshape(B, n, m) * w_inner.reshape(1, n, m)
    inner = _pnorm_rows_numpy(a, q) if m > 1 else a[..., 0]
    return _pnorm_rows_numpy(inner * w_outer, p)


def mixed_norm_grad_numpy(V, p, w_outer, q, w_inner, m):
    """Return (values, G) with dN = Re sum(conj(G) dV) for each row of V."""
    V = np.asarray(V, dtype=complex)
    B = V.shape[0]
    n = w_outer.shape[0]
    absV = np.abs(V).reshape(B, n, m)
    wi = w_inner.reshape(1, n, m)
    a = absV * wi
    if m > 1:
        inner = _pnorm_rows_numpy(a, q)
        d_inner = _pnorm_grad_numpy(a, inner, q) * wi
    else:
        inner = a[..., 0]
        d_inner = wi.copy()
    outer_in = inner * w_outer
    val = _pnorm_rows_numpy(outer_in, p)
    d_outer = _pnorm_grad_numpy(outer_in, val, p) * w_outer
    dabs = (d_outer[..., None] * d_inner).reshape(B, n * m)
    absflat = absV.reshape(B, n * m)
    phase = np.where(absflat > 0, V / np.where(absflat > 0, absflat, 1.0), 0.0)
    return val, dabs * phase


def injective_altmax_numpy(Z, specA, specB, Y0, iters):
    """Alternating maximization of |x' Z y'| over the dual unit balls.

    Z: (B, dA, dB); Y0: (B, R, dB) starting points in the dual ball of the
    second factor. Returns (values (B,), X' (B, dA), Y' (B, dB)).
    """
    Bn, dA, dB = Z.shape
    R = Y0.shape[1]
    Zr = np.repeat(Z, R, axis=0)
    Y = Y0.reshape(Bn * R, dB).astype(complex)
    best = np.zeros(Bn * R)
    Xp = np.zeros((Bn * R, dA), dtype=complex)
    for _ in range(iters):
        v = np.einsum("bij,bj->bi", Zr, Y)
        _, GA = mixed_norm_grad_numpy(v, *specA)
        Xp = np.conj(GA)
        w = np.einsum("bij,bi->bj", Zr, Xp)
        prev = best
        best, GB = mixed_norm_grad_numpy(w, *specB)
        Y = np.conj(GB)
        if np.all(best - prev <= 1e-13 * best):
            break
    best = best.reshape(Bn, R)
    arg = np.argmax(best, axis=1)
    rows = np.arange(Bn) * R + arg
    return best[np.arange(Bn), arg], Xp[rows], Y[rows]


def rademacher_sums_numpy(X, p, w_outer, q, w_inner, m):
    """Norms ||sum_i eps_i x_i|| over all sign patterns with eps_0 = +1.

    Fixing the first sign halves the work; the norm is even, so averages over
    the returned 2^(k-1) values equal averages over all 2^k patterns.
    """
    k = X.shape[0]
    n = np.arange(2 ** (k - 1))
    codes = n ^ (n >> 1)  # Gray code order, as in the numba kernel
    bits = (codes[:, None] >> np.arange(k - 1)[None, :]) & 1
    signs = np.concatenate([np.ones((codes.size, 1)), 1.0 - 2.0 * bits], axis=1)
    S = signs @ X
    return mixed_norm_numpy(S, p, w_outer, q, w_inner, m)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _pnorm_1d(u, p):
        n = u.shape[0]
        if np.isinf(p):
            mx = 0.0
            for i in range(n):
                if u[i] > mx:
                    mx = u[i]
            return mx
        if p == 1.0:
            s = 0.0
            for i in range(n):
                s += u[i]
            return s
        mx = 0.0
        for i in range(n):
            if u[i] > mx:
                mx = u[i]
        if mx == 0.0:
            return 0.0
        s = 0.0
        for i in range(n):
            s += (u[i] / mx) ** p
        return mx * s ** (1.0 / p)

    @njit(cache=True)
    def _pnorm_grad_1d(u, val, p, out):
        n = u.shape[0]
        for i in range(n):
            out[i] = 0.0
        if val <= 0.0:
            return
        if np.isinf(p):
            best = 0
            for i in range(1, n):
                if u[i] > u[best]:
                    best = i
            out[best] = 1.0
        elif p == 1.0:
            for i in range(n):
                out[i] = 1.0
        else:
            for i in range(n):
                out[i] = (u[i] / val) ** (p - 1.0)

    @njit(cache=True)
    def _workspace(n, m):
        return np.empty(n), np.empty(m), np.empty(n), np.empty(m)

    @njit(cache=True)
    def _mixed_row(v, p, w_outer, q, w_inner, m, G, want_grad, ws):
        n = w_outer.shape[0]
        inner, a, d_outer, d_in = ws
        for k in range(n):
            for j in range(m):
                a[j] = abs(v[k * m + j]) * w_inner[k * m + j]
            if m > 1:
                inner[k] = _pnorm_1d(a, q) * w_outer[k]
            else:
                inner[k] = a[0] * w_outer[k]
        val = _pnorm_1d(inner, p)
        if not want_grad:
            return val
        _pnorm_grad_1d(inner, val, p, d_outer)
        for k in range(n):
            scale = d_outer[k] * w_outer[k]
            if m > 1:
                for j in range(m):
                    a[j] = abs(v[k * m + j]) * w_inner[k * m + j]
                _pnorm_grad_1d(a, inner[k] / w_outer[k] if w_outer[k] > 0 else 0.0, q, d_in)
            else:
                d_in[0] = 1.0
            for j in range(m):
                idx = k * m + j
                av = abs(v[idx])
                if av > 0.0 and scale != 0.0:
                    G[idx] = scale * d_in[j] * w_inner[idx] * v[idx] / av
                else:
                    G[idx] = 0.0
        return val

    @njit(cache=True)
    def mixed_norm_numba(V, p, w_outer, q, w_inner, m):
        B = V.shape[0]
        out = np.empty(B)
        G = np.empty(V.shape[1], dtype=np.complex128)
        ws = _workspace(w_outer.shape[0], m)
        for b in range(B):
            out[b] = _mixed_row(V[b], p, w_outer, q, w_inner, m, G, False, ws)
        return out

    @njit(cache=True)
    def mixed_norm_grad_numba(V, p, w_outer, q, w_inner, m):
        B = V.shape[0]
        out = np.empty(B)
        G = np.empty(V.shape, dtype=np.complex128)
        ws = _workspace(w_outer.shape[0], m)
        for b in range(B):
            out[b] = _mixed_row(V[b], p, w_outer, q, w_inner, m, G[b], True, ws)
        return out, G

    @njit(cache=True)
    def _injective_numba(Z, pA, woA, qA, wiA, mA, pB, woB, qB, wiB, mB, Y0, iters):
        Bn, dA, dB = Z.shape
        R = Y0.shape[1]
        vals = np.zeros(Bn)
        XB = np.zeros((Bn, dA), dtype=np.complex128)
        YB = np.zeros((Bn, dB), dtype=np.complex128)
        v = np.empty(dA, dtype=np.complex128)
        w = np.empty(dB, dtype=np.complex128)
        GA = np.empty(dA, dtype=np.complex128)
        GB = np.empty(dB, dtype=np.complex128)
        y = np.empty(dB, dtype=np.complex128)
        x = np.empty(dA, dtype=np.complex128)
        wsA = _workspace(woA.shape[0], mA)
        wsB = _workspace(woB.shape[0], mB)
        for b in range(Bn):
            bestv = -1.0
            for r in range(R):
                for j in range(dB):
                    y[j] = Y0[b, r, j]
                val = 0.0
                prev = -1.0
                for _ in range(iters):
                    for i in range(dA):
                        s = 0.0j
                        for j in range(dB):
                            s += Z[b, i, j] * y[j]
                        v[i] = s
                    _mixed_row(v, pA, woA, qA, wiA, mA, GA, True, wsA)
                    for i in range(dA):
                        x[i] = np.conj(GA[i])
                    for j in range(dB):
                        s = 0.0j
                        for i in range(dA):
                            s += Z[b, i, j] * x[i]
                        w[j] = s
                    val = _mixed_row(w, pB, woB, qB, wiB, mB, GB, True, wsB)
                    for j in range(dB):
                        y[j] = np.conj(GB[j])
                    # the value is nondecreasing along the iteration
                    if val - prev <= 1e-13 * val:
                        break
                    prev = val
                if val > bestv:
                    bestv = val
                    for i in range(dA):
                        XB[b, i] = x[i]
                    for j in range(dB):
                        YB[b, j] = y[j]
            vals[b] = bestv
        return vals, XB, YB

    def injective_altmax_numba(Z, specA, specB, Y0, iters):
        return _injective_numba(
            np.ascontiguousarray(Z, dtype=np.complex128),
            *specA,
            *specB,
            np.ascontiguousarray(Y0, dtype=np.complex128),
            int(iters),
        )

    @njit(cache=True)
    def rademacher_sums_numba(X, p, w_outer, q, w_inner, m):
        k, d = X.shape
        count = 1 << (k - 1)
        out = np.empty(count)
        s = np.empty(d, dtype=np.complex128)
        G = np.empty(d, dtype=np.complex128)
        ws = _workspace(w_outer.shape[0], m)
        for j in range(d):
            s[j] = 0.0
            for i in range(k):
                s[j] += X[i, j]
        out[0] = _mixed_row(s, p, w_outer, q, w_inner, m, G, False, ws)
        signs = np.ones(k)
        # Gray code over eps_1..eps_{k-1}: one vector flips per step
        for c in range(1, count):
            bit = 0
            t = c
            while (t & 1) == 0:
                t >>= 1
                bit += 1
            i = bit + 1
            signs[i] = -signs[i]
            for j in range(d):
                s[j] += 2.0 * signs[i] * X[i, j]
            out[c] = _mixed_row(s, p, w_outer, q, w_inner, m, G, False, ws)
        return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _spec_args(spec):
    p, w_outer, q, w_inner, m = spec
    return (
        float(p),
        np.ascontiguousarray(w_outer, dtype=np.float64),
        float(q),
        np.ascontiguousarray(w_inner, dtype=np.float64),
        int(m),
    )


def mixed_norm(V, spec):
    V = np.ascontiguousarray(np.atleast_2d(V), dtype=np.complex128)
    if HAVE_NUMBA:
        return mixed_norm_numba(V, *_spec_args(spec))
    return mixed_norm_numpy(V, *_spec_args(spec))


def mixed_norm_grad(V, spec):
    V = np.ascontiguousarray(np.atleast_2d(V), dtype=np.complex128)
    if HAVE_NUMBA:
        return mixed_norm_grad_numba(V, *_spec_args(spec))
    return mixed_norm_grad_numpy(V, *_spec_args(spec))


def injective_altmax(Z, specA, specB, Y0, iters=30):
    specA, specB = _spec_args(specA), _spec_args(specB)
    if HAVE_NUMBA:
        return injective_altmax_numba(Z, specA, specB, Y0, iters)
    return injective_altmax_numpy(
        np.asarray(Z, dtype=complex), specA, specB, np.asarray(Y0, dtype=complex), iters
    )


def rademacher_sums(X, spec):
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.complex128)
    if HAVE_NUMBA:
        return rademacher_sums_numba(X, *_spec_args(spec))
    return rademacher_sums_numpy(X, *_spec_args(spec))
