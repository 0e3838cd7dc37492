"""Compiled kernels for point-to-complex distances.

A prime complex can hold millions of overlapping maximal triangles, so the
distance query walks a bounding-volume hierarchy over the maximal simplices.
A node is skipped when ``alpha * boxdist(x, node)**2`` already exceeds the
best value found (``alpha`` is the smallest eigenvalue of the metric), and a
query stops as soon as the best value drops to ``atol``.

Per-simplex semantics mirror :func:`nsc.projection.clamp_and_project`:
affine least-squares projection while every barycentric coordinate lies in
``[-gamma, 1 + gamma]``, otherwise the Euclidean-nearest face projection.
The metric quadratic form is applied to the chosen point only.
"""

from __future__ import annotations

import numba
import numpy as np

DEGENERATE_RTOL = 1e-10
LEAF_SIZE = 8


@numba.njit(cache=True, inline="always")
def _quad(r, A, use_A):
    d = r.shape[0]
    if not use_A:
        s = 0.0
        for i in range(d):
            s += r[i] * r[i]
        return s
    s = 0.0
    for i in range(d):
        acc = 0.0
        for j in range(d):
            acc += A[i, j] * r[j]
        s += r[i] * acc
    return s


@numba.njit(cache=True)
def _vertex_value(x, V, a, A, use_A, r):
    d = x.shape[0]
    e = 0.0
    for i in range(d):
        r[i] = x[i] - V[a, i]
        e += r[i] * r[i]
    return e, _quad(r, A, use_A)


@numba.njit(cache=True)
def _edge_value(x, V, a, b, gamma, A, use_A, r):
    d = x.shape[0]
    g = 0.0
    dot = 0.0
    for i in range(d):
        ei = V[b, i] - V[a, i]
        g += ei * ei
        dot += ei * (x[i] - V[a, i])
    if g == 0.0:
        return _vertex_value(x, V, a, A, use_A, r)
    t = dot / g
    if t >= 1.0 + gamma:
        t = 1.0 + gamma
    elif t <= -gamma:
        t = -gamma
    e = 0.0
    for i in range(d):
        r[i] = x[i] - (V[a, i] + t * (V[b, i] - V[a, i]))
        e += r[i] * r[i]
    return e, _quad(r, A, use_A)


@numba.njit(cache=True)
def _triangle_value(x, V, a, b, c, gamma, A, use_A, r):
    d = x.shape[0]
    g11 = 0.0
    g12 = 0.0
    g22 = 0.0
    r1 = 0.0
    r2 = 0.0
    for i in range(d):
        e1 = V[b, i] - V[a, i]
        e2 = V[c, i] - V[a, i]
        w = x[i] - V[a, i]
        g11 += e1 * e1
        g12 += e1 * e2
        g22 += e2 * e2
        r1 += e1 * w
        r2 += e2 * w
    det = g11 * g22 - g12 * g12
    if g11 > 0.0 and g22 > 0.0 and det > DEGENERATE_RTOL * g11 * g22:
        m1 = (g22 * r1 - g12 * r2) / det
        m2 = (g11 * r2 - g12 * r1) / det
        l0 = 1.0 - m1 - m2
        lo = -gamma
        hi = 1.0 + gamma
        if lo <= l0 <= hi and lo <= m1 <= hi and lo <= m2 <= hi:
            e = 0.0
            for i in range(d):
                r[i] = x[i] - (V[a, i] + m1 * (V[b, i] - V[a, i]) + m2 * (V[c, i] - V[a, i]))
                e += r[i] * r[i]
            return e, _quad(r, A, use_A)
    # faces in "drop vertex i" order; the first strictly nearest one wins
    be, bm = _edge_value(x, V, b, c, gamma, A, use_A, r)
    e, m = _edge_value(x, V, a, c, gamma, A, use_A, r)
    if e < be:
        be, bm = e, m
    e, m = _edge_value(x, V, a, b, gamma, A, use_A, r)
    if e < be:
        be, bm = e, m
    return be, bm


@numba.njit(cache=True)
def _solve_spd(G, rhs):
    """Cholesky solve; returns (ok, mu).  ok is False when degenerate."""
    k = G.shape[0]
    L = np.zeros((k, k))
    ratio = 1.0
    for j in range(k):
        s = G[j, j]
        for p in range(j):
            s -= L[j, p] * L[j, p]
        if G[j, j] <= 0.0 or s <= 0.0:
            return False, rhs
        ratio *= s / G[j, j]
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, k):
            t = G[i, j]
            for p in range(j):
                t -= L[i, p] * L[j, p]
            L[i, j] = t / L[j, j]
    if ratio <= DEGENERATE_RTOL:
        return False, rhs
    y = np.empty(k)
    for i in range(k):
        t = rhs[i]
        for p in range(i):
            t -= L[i, p] * y[p]
        y[i] = t / L[i, i]
    mu = np.empty(k)
    for i in range(k - 1, -1, -1):
        t = y[i]
        for p in range(i + 1, k):
            t -= L[p, i] * mu[p]
        mu[i] = t / L[i, i]
    return True, mu


@numba.njit(cache=True)
def _general_value(x, V, verts, gamma, A, use_A, r):
    n = verts.shape[0]
    if n == 1:
        return _vertex_value(x, V, verts[0], A, use_A, r)
    if n == 2:
        return _edge_value(x, V, verts[0], verts[1], gamma, A, use_A, r)
    if n == 3:
        return _triangle_value(x, V, verts[0], verts[1], verts[2], gamma, A, use_A, r)
    d = x.shape[0]
    k = n - 1
    B = np.empty((d, k))
    for j in range(k):
        for i in range(d):
            B[i, j] = V[verts[j + 1], i] - V[verts[0], i]
    w = x - V[verts[0]]
    G = B.T @ B
    ok, mu = _solve_spd(G, B.T @ w)
    if ok:
        inside = True
        l0 = 1.0 - mu.sum()
        if l0 < -gamma or l0 > 1.0 + gamma:
            inside = False
        for j in range(k):
            if mu[j] < -gamma or mu[j] > 1.0 + gamma:
                inside = False
        if inside:
            res = w - B @ mu
            for i in range(d):
                r[i] = res[i]
            return (res * res).sum(), _quad(res, A, use_A)
    be = np.inf
    bm = np.inf
    face = np.empty(n - 1, dtype=verts.dtype)
    for drop in range(n):
        pos = 0
        for i in range(n):
            if i != drop:
                face[pos] = verts[i]
                pos += 1
        e, m = _general_value(x, V, face, gamma, A, use_A, r)
        if e < be:
            be, bm = e, m
    return be, bm


@numba.njit(cache=True)
def _simplex_value(x, V, S, dims, s, gamma, A, use_A, r):
    k = dims[s]
    if k == 0:
        return _vertex_value(x, V, S[s, 0], A, use_A, r)
    if k == 1:
        return _edge_value(x, V, S[s, 0], S[s, 1], gamma, A, use_A, r)
    if k == 2:
        return _triangle_value(x, V, S[s, 0], S[s, 1], S[s, 2], gamma, A, use_A, r)
    return _general_value(x, V, S[s, : k + 1].copy(), gamma, A, use_A, r)


@numba.njit(cache=True)
def simplex_values(X, V, S, dims, gamma, A, use_A):
    """Dense (n_queries, n_simplices) metric values; for tests and tiny models."""
    n, m = X.shape[0], S.shape[0]
    out = np.empty((n, m))
    r = np.empty(X.shape[1])
    for q in range(n):
        for s in range(m):
            out[q, s] = _simplex_value(X[q], V, S, dims, s, gamma, A, use_A, r)[1]
    return out


@numba.njit(cache=True)
def primitive_boxes(V, S, dims, gamma):
    """Axis-aligned boxes holding every point a simplex can project to."""
    m, d = S.shape[0], V.shape[1]
    lo = np.empty((m, d))
    hi = np.empty((m, d))
    for s in range(m):
        k = dims[s]
        for i in range(d):
            mn = np.inf
            mx = -np.inf
            for j in range(k + 1):
                v = V[S[s, j], i]
                mn = min(mn, v)
                mx = max(mx, v)
            if gamma > 0.0 and k >= 1:
                if k == 1:
                    a = V[S[s, 0], i]
                    b = V[S[s, 1], i]
                    ea = a - gamma * (b - a)
                    eb = b + gamma * (b - a)
                    mn = min(ea, eb, mn)
                    mx = max(ea, eb, mx)
                else:
                    c = 0.0
                    for j in range(k + 1):
                        c += V[S[s, j], i]
                    c /= k + 1
                    spread = 0.0
                    for j in range(k + 1):
                        spread = max(spread, abs(V[S[s, j], i] - c))
                    spread *= 1.0 + 2.0 * k * gamma
                    mn = min(mn, c - spread)
                    mx = max(mx, c + spread)
            lo[s, i] = mn
            hi[s, i] = mx
    return lo, hi


@numba.njit(cache=True)
def take_rows(a, order):
    out = np.empty((order.shape[0],) + a.shape[1:], dtype=a.dtype)
    for i in range(order.shape[0]):
        out[i] = a[order[i]]
    return out


@numba.njit(cache=True)
def morton_codes(P):
    """Interleave 21-bit quantized coordinates (up to three columns)."""
    n, d = P.shape
    codes = np.zeros(n, dtype=np.int64)
    if n == 0:
        return codes
    bits = 63 // max(d, 1)
    if bits > 21:
        bits = 21
    scale = float((1 << bits) - 1)
    mn = np.empty(d)
    span = np.empty(d)
    for i in range(d):
        mn[i] = P[:, i].min()
        span[i] = P[:, i].max() - mn[i]
        if span[i] <= 0.0:
            span[i] = 1.0
    for s in range(n):
        code = 0
        for b in range(bits - 1, -1, -1):
            for i in range(d):
                qv = int((P[s, i] - mn[i]) / span[i] * scale)
                code = (code << 1) | ((qv >> b) & 1)
        codes[s] = code
    return codes


@numba.njit(cache=True)
def build_nodes(lo, hi, n_leaf_slots, leaf_size):
    """Bottom-up boxes of an implicit complete binary tree over sorted prims."""
    m, d = lo.shape
    n_nodes = 2 * n_leaf_slots - 1
    nlo = np.full((n_nodes, d), np.inf)
    nhi = np.full((n_nodes, d), -np.inf)
    base = n_leaf_slots - 1
    for leaf in range(n_leaf_slots):
        start = leaf * leaf_size
        stop = min(start + leaf_size, m)
        for s in range(start, stop):
            for i in range(d):
                nlo[base + leaf, i] = min(nlo[base + leaf, i], lo[s, i])
                nhi[base + leaf, i] = max(nhi[base + leaf, i], hi[s, i])
    for node in range(base - 1, -1, -1):
        for i in range(d):
            nlo[node, i] = min(nlo[2 * node + 1, i], nlo[2 * node + 2, i])
            nhi[node, i] = max(nhi[2 * node + 1, i], nhi[2 * node + 2, i])
    return nlo, nhi


@numba.njit(cache=True, inline="always")
def _box_dist2(x, lo, hi, row):
    s = 0.0
    for i in range(x.shape[0]):
        v = x[i]
        if v < lo[row, i]:
            t = lo[row, i] - v
            s += t * t
        elif v > hi[row, i]:
            t = v - hi[row, i]
            s += t * t
    return s


@numba.njit(cache=True, inline="always")
def _triangle_inbounds(x, V, a, b, c, lo, hi):
    d = x.shape[0]
    g11 = 0.0
    g12 = 0.0
    g22 = 0.0
    r1 = 0.0
    r2 = 0.0
    for i in range(d):
        va = V[a, i]
        e1 = V[b, i] - va
        e2 = V[c, i] - va
        w = x[i] - va
        g11 += e1 * e1
        g12 += e1 * e2
        g22 += e2 * e2
        r1 += e1 * w
        r2 += e2 * w
    det = g11 * g22 - g12 * g12
    if not (g11 > 0.0 and g22 > 0.0 and det > DEGENERATE_RTOL * g11 * g22):
        return np.inf
    # bounds tested on det-scaled coordinates so rejections skip the division
    m1 = g22 * r1 - g12 * r2
    m2 = g11 * r2 - g12 * r1
    l0 = det - m1 - m2
    dlo = lo * det
    dhi = hi * det
    if m1 < dlo or m1 > dhi or m2 < dlo or m2 > dhi or l0 < dlo or l0 > dhi:
        return np.inf
    m1 /= det
    m2 /= det
    e = 0.0
    for i in range(d):
        va = V[a, i]
        t = x[i] - va - m1 * (V[b, i] - va) - m2 * (V[c, i] - va)
        e += t * t
    return e


@numba.njit(cache=True)
def _inbounds_value(x, V, S, dims, s, gamma, A, r):
    """Own-projection value of a simplex, +inf when it leaves the gamma range.

    Edges are clamped and vertices plain; only k >= 2 can return +inf.
    """
    k = dims[s]
    if k == 0:
        return _vertex_value(x, V, S[s, 0], A, False, r)[0]
    if k == 1:
        return _edge_value(x, V, S[s, 0], S[s, 1], gamma, A, False, r)[0]
    if k == 2:
        return _triangle_inbounds(x, V, S[s, 0], S[s, 1], S[s, 2], -gamma, 1.0 + gamma)
    return _general_inbounds(x, V, S, s, k, gamma)


@numba.njit(cache=True)
def _general_inbounds(x, V, S, s, k, gamma):
    d = x.shape[0]
    lo = -gamma
    hi = 1.0 + gamma
    B = np.empty((d, k))
    for j in range(k):
        for i in range(d):
            B[i, j] = V[S[s, j + 1], i] - V[S[s, 0], i]
    w = x - V[S[s, 0]]
    ok, mu = _solve_spd(B.T @ B, B.T @ w)
    if not ok:
        return np.inf
    l0 = 1.0 - mu.sum()
    if l0 < lo or l0 > hi:
        return np.inf
    for j in range(k):
        if mu[j] < lo or mu[j] > hi:
            return np.inf
    res = w - B @ mu
    return (res * res).sum()


@numba.njit(cache=True)
def query(X, V, S, dims, lo, hi, nlo, nhi, n_leaf_slots, leaf_size, gamma, A, use_A,
          alpha, atol, inbounds_only, full_dim, init):
    """Minimum simplex value per query row over one hierarchy.

    ``inbounds_only`` switches from the recursive per-simplex value to
    :func:`_inbounds_value`.  With ``full_dim`` every primitive spans the
    ambient space, so an in-bounds value is zero and only boxes containing
    the query can matter.  ``init`` seeds the per-query upper bound.
    """
    n = X.shape[0]
    m = S.shape[0]
    out = init.copy()
    if m == 0:
        return out
    base = n_leaf_slots - 1
    stack = np.empty(128, dtype=np.int64)
    r = np.empty(X.shape[1])
    for q in range(n):
        x = X[q]
        best = out[q]
        if best <= atol:
            continue
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top]
            lb = _box_dist2(x, nlo, nhi, node)
            if full_dim and lb > 0.0:
                continue
            if alpha * lb >= best:
                continue
            if node >= base:
                start = (node - base) * leaf_size
                stop = min(start + leaf_size, m)
                for s in range(start, stop):
                    lb = _box_dist2(x, lo, hi, s)
                    if (full_dim and lb > 0.0) or alpha * lb >= best:
                        continue
                    if inbounds_only and dims[s] == 2:
                        val = _triangle_inbounds(x, V, S[s, 0], S[s, 1], S[s, 2], -gamma, 1.0 + gamma)
                    elif inbounds_only:
                        val = _inbounds_value(x, V, S, dims, s, gamma, A, r)
                    else:
                        val = _simplex_value(x, V, S, dims, s, gamma, A, use_A, r)[1]
                    if val < best:
                        best = val
                if best <= atol:
                    break
                continue
            left = 2 * node + 1
            right = left + 1
            if _box_dist2(x, nlo, nhi, left) <= _box_dist2(x, nlo, nhi, right):
                stack[top] = right
                stack[top + 1] = left
            else:
                stack[top] = left
                stack[top + 1] = right
            top += 2
        out[q] = best
    return out


@numba.njit(cache=True)
def contains_query(X, bary, lo, hi, nlo, nhi, n_leaf_slots, leaf_size, gamma, init):
    """Zero where a full-dimensional simplex holds the query within the gamma range.

    ``bary[s]`` maps ``[x, 1]`` to the barycentric coordinates of simplex
    ``s``; rows of NaN (degenerate simplices) never match.  Other entries keep
    their ``init`` value.
    """
    n, d = X.shape
    m = bary.shape[0]
    kp = bary.shape[1]
    out = init.copy()
    if m == 0:
        return out
    base = n_leaf_slots - 1
    lo_b = -gamma
    hi_b = 1.0 + gamma
    stack = np.empty(128, dtype=np.int64)
    for q in range(n):
        if out[q] <= 0.0:
            continue
        x = X[q]
        found = False
        stack[0] = 0
        top = 1
        while top > 0 and not found:
            top -= 1
            node = stack[top]
            if _box_dist2(x, nlo, nhi, node) > 0.0:
                continue
            if node < base:
                stack[top] = 2 * node + 1
                stack[top + 1] = 2 * node + 2
                top += 2
                continue
            start = (node - base) * leaf_size
            stop = min(start + leaf_size, m)
            for s in range(start, stop):
                if _box_dist2(x, lo, hi, s) > 0.0:
                    continue
                inside = True
                for j in range(kp):
                    lam = bary[s, j, d]
                    for i in range(d):
                        lam += bary[s, j, i] * x[i]
                    if not (lo_b <= lam <= hi_b):
                        inside = False
                        break
                if inside:
                    found = True
                    break
        if found:
            out[q] = 0.0
    return out


@numba.njit(cache=True)
def barycentric_maps(V, S):
    """Affine maps ``[x, 1] -> lambda`` for d-simplices in d dimensions.

    Uses ``T^-1 = G^-1 T^T`` with the same Cholesky pivot-ratio test as the
    projections; degenerate simplices get NaN rows.
    """
    m, kp = S.shape
    d = V.shape[1]
    out = np.empty((m, kp, d + 1))
    T = np.empty((d, d))
    G = np.empty((d, d))
    col = np.empty(d)
    for s in range(m):
        v0 = S[s, 0]
        for j in range(d):
            for i in range(d):
                T[i, j] = V[S[s, j + 1], i] - V[v0, i]
        if d == 2:
            g11 = T[0, 0] * T[0, 0] + T[1, 0] * T[1, 0]
            g22 = T[0, 1] * T[0, 1] + T[1, 1] * T[1, 1]
            det = T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0]
            if not (g11 > 0.0 and g22 > 0.0 and det * det > DEGENERATE_RTOL * g11 * g22):
                out[s, :, :] = np.nan
                continue
            out[s, 1, 0] = T[1, 1] / det
            out[s, 1, 1] = -T[0, 1] / det
            out[s, 2, 0] = -T[1, 0] / det
            out[s, 2, 1] = T[0, 0] / det
        else:
            ok = _inverse_rows(T, G, col, out, s)
            if not ok:
                out[s, :, :] = np.nan
                continue
        c0 = 1.0
        for j in range(d):
            t = 0.0
            for i in range(d):
                t -= out[s, j + 1, i] * V[v0, i]
            out[s, j + 1, d] = t
            c0 -= t
        out[s, 0, d] = c0
        for i in range(d):
            t = 0.0
            for j in range(d):
                t -= out[s, j + 1, i]
            out[s, 0, i] = t
    return out


@numba.njit(cache=True)
def _inverse_rows(T, G, col, out, s):
    d = T.shape[0]
    for a in range(d):
        for b in range(d):
            t = 0.0
            for i in range(d):
                t += T[i, a] * T[i, b]
            G[a, b] = t
    for i in range(d):
        for j in range(d):
            col[j] = T[i, j]
        good, mu = _solve_spd(G, col)
        if not good:
            return False
        # column i of T^-1 gives the x_i coefficients of lambda_1..lambda_d
        for j in range(d):
            out[s, j + 1, i] = mu[j]
    return True
