"""Filtered flag complexes from point clouds: lazy witness and Rips."""

from __future__ import annotations

import numba
import numpy as np
from scipy.spatial.distance import pdist, squareform

from .topology import Filtration

INTERSECTING_BALLS = "intersecting-balls"
SCALE = "scale"

# cap on the temporary (block x p x q) array in edge_time_matrix
_EDGE_BLOCK_CELLS = 20_000_000


def m_values(D: np.ndarray, f: int) -> np.ndarray:
    """Per-witness offsets: the f-th smallest landmark distance, 0 when f=0."""
    D = np.asarray(D, dtype=float)
    p, q = D.shape
    if f < 0 or f > p:
        raise ValueError(f"f must lie in [0, {p}], got {f}")
    if f == 0:
        return np.zeros(q)
    return np.partition(D, f - 1, axis=0)[f - 1]


def edge_time_matrix(D: np.ndarray, f: int = 0) -> np.ndarray:
    """Lazy-witness edge appearance radii.

    ``E[i, j] = max(0, min_k max(D[i, k], D[j, k]) - m_k)`` with a zero
    diagonal.
    """
    D = np.asarray(D, dtype=float)
    p, q = D.shape
    if q == 0:
        raise ValueError("no witnesses: use the Rips construction instead")
    if p < 2:
        raise ValueError("need at least two landmarks")
    m = m_values(D, f)
    E = np.empty((p, p))
    block = max(1, _EDGE_BLOCK_CELLS // (p * q))
    for lo in range(0, p, block):
        hi = min(p, lo + block)
        E[lo:hi] = (np.maximum(D[lo:hi, None, :], D[None, :, :]) - m).min(axis=2)
    np.maximum(E, 0.0, out=E)
    np.fill_diagonal(E, 0.0)
    return E


@numba.njit(cache=True)
def _extend_count(rows, adj):
    n_rows, width = rows.shape
    n = adj.shape[0]
    total = 0
    for r in range(n_rows):
        last = rows[r, width - 1]
        for c in range(last + 1, n):
            ok = True
            for i in range(width):
                if not adj[rows[r, i], c]:
                    ok = False
                    break
            if ok:
                total += 1
    return total


@numba.njit(cache=True)
def _extend_fill(rows, births, adj, E, out_rows, out_births):
    n_rows, width = rows.shape
    n = adj.shape[0]
    pos = 0
    for r in range(n_rows):
        last = rows[r, width - 1]
        for c in range(last + 1, n):
            ok = True
            b = births[r]
            for i in range(width):
                v = rows[r, i]
                if not adj[v, c]:
                    ok = False
                    break
                if E[v, c] > b:
                    b = E[v, c]
            if ok:
                for i in range(width):
                    out_rows[pos, i] = rows[r, i]
                out_rows[pos, width] = c
                out_births[pos] = b
                pos += 1


def flag_filtration(E: np.ndarray, k_max: int, R_max: float) -> Filtration:
    """Flag filtration of a symmetric edge-time matrix.

    Vertices are born at 0, edge ``[i, j]`` at ``E[i, j]`` when that is at
    most ``R_max``, and a k-simplex at the latest birth among its edges when
    all of them are present.
    """
    E = np.asarray(E, dtype=float)
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    n = E.shape[0]
    simplices = [np.arange(n, dtype=np.int64).reshape(-1, 1)]
    births = [np.zeros(n)]
    adj = E <= R_max
    np.fill_diagonal(adj, False)
    iu, ju = np.nonzero(np.triu(adj, 1))
    edges = np.stack([iu, ju], axis=1).astype(np.int64)
    simplices.append(edges)
    births.append(E[iu, ju].copy())
    for _ in range(2, k_max + 1):
        rows, b = simplices[-1], births[-1]
        count = _extend_count(rows, adj) if rows.shape[0] else 0
        out_rows = np.empty((count, rows.shape[1] + 1), dtype=np.int64)
        out_b = np.empty(count)
        if count:
            _extend_fill(rows, b, adj, E, out_rows, out_b)
        simplices.append(out_rows)
        births.append(out_b)
        if count == 0:
            break
    while len(simplices) > 1 and simplices[-1].shape[0] == 0:
        simplices.pop()
        births.pop()
    return Filtration(tuple(simplices), tuple(births), n, k_max)


def lazywitness_filtration(E: np.ndarray, k_max: int = 2, R_max: float = np.inf) -> Filtration:
    return flag_filtration(E, k_max, R_max)


def rips_edge_times(points, ball_convention: str = INTERSECTING_BALLS) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.shape[0] < 2:
        return np.zeros((points.shape[0], points.shape[0]))
    d = squareform(pdist(points))
    if ball_convention == INTERSECTING_BALLS:
        return d / 2.0
    if ball_convention == SCALE:
        return d
    raise ValueError(f"unknown ball convention {ball_convention!r}")


def rips_filtration(
    points, k_max: int = 2, R_max: float = np.inf, ball_convention: str = INTERSECTING_BALLS
) -> Filtration:
    """Vietoris-Rips flag filtration.

    Under ``"intersecting-balls"`` an edge appears once closed balls of
    radius R around its endpoints meet (birth d/2); ``"scale"`` uses the
    distance itself.
    """
    points = np.asarray(points, dtype=float)
    if points.shape[0] < 1:
        raise ValueError("need at least one point")
    return flag_filtration(rips_edge_times(points, ball_convention), k_max, R_max)
