"""Projection of query points onto simplices and metric distances.

The single-simplex functions here are plain NumPy and serve as the
reference; :class:`ComplexIndex` answers the same question for a whole prime
complex through the compiled kernels in :mod:`nsc._engine`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _engine
from .prime import PrimeComplex

DEGENERATE_RTOL = _engine.DEGENERATE_RTOL


class DegenerateSimplexError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectionResult:
    lambdas: np.ndarray
    position: np.ndarray
    clamped: bool


class MetricMatrix:
    """Symmetric positive semidefinite matrix for the quadratic distance."""

    def __init__(self, matrix, atol: float = 1e-9):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("metric must be a square matrix")
        if not np.allclose(A, A.T, rtol=0.0, atol=atol * max(1.0, np.abs(A).max(initial=0.0))):
            raise ValueError("metric must be symmetric")
        A = 0.5 * (A + A.T)
        eig = np.linalg.eigvalsh(A) if A.size else np.zeros(0)
        scale = max(1.0, np.abs(eig).max(initial=0.0))
        if eig.size and eig.min() < -atol * scale:
            raise ValueError("metric must be positive semidefinite")
        A.setflags(write=False)
        self.matrix = A
        self.min_eigenvalue = float(max(0.0, eig.min())) if eig.size else 0.0
        self.is_identity = bool(np.array_equal(A, np.eye(A.shape[0])))

    @classmethod
    def identity(cls, d: int) -> "MetricMatrix":
        return cls(np.eye(d))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def scaled(self, c: float) -> "MetricMatrix":
        return MetricMatrix(c * self.matrix)

    def quadratic(self, r) -> float:
        r = np.asarray(r, dtype=float)
        return float(r @ self.matrix @ r)

    def __eq__(self, other):
        return isinstance(other, MetricMatrix) and np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"MetricMatrix(dim={self.dim}, identity={self.is_identity})"


def _as_metric(A, d: int) -> MetricMatrix:
    if A is None:
        return MetricMatrix.identity(d)
    if isinstance(A, MetricMatrix):
        return A
    return MetricMatrix(A)


def affine_lambdas(x, vertices) -> np.ndarray:
    """Least-squares affine coordinates of ``x`` relative to ``vertices``.

    Solves ``(B^T B) mu = B^T (x - v0)`` with ``B = [v1 - v0, ..., vk - v0]``;
    the residual ``x - sum(lambda_i v_i)`` is orthogonal to the affine hull.
    Raises :class:`DegenerateSimplexError` when the Gram matrix is singular
    (Cholesky pivot ratio below 1e-10).
    """
    x = np.asarray(x, dtype=float)
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    if V.shape[0] == 1:
        return np.ones(1)
    B = (V[1:] - V[0]).T
    G = B.T @ B
    diag = np.diag(G)
    if np.any(diag <= 0.0):
        raise DegenerateSimplexError("degenerate simplex")
    if V.shape[0] == 2:
        mu = np.array([B[:, 0] @ (x - V[0]) / G[0, 0]])
    else:
        try:
            L = np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            raise DegenerateSimplexError("degenerate simplex") from None
        if np.prod(np.diag(L) ** 2 / diag) <= DEGENERATE_RTOL:
            raise DegenerateSimplexError("degenerate simplex")
        mu = np.linalg.solve(G, B.T @ (x - V[0]))
    return np.concatenate([[1.0 - mu.sum()], mu])


def _embed(lam_face, drop, n):
    lam = np.zeros(n)
    lam[[i for i in range(n) if i != drop]] = lam_face
    return lam


def clamp_and_project(x, vertices, gamma: float = 0.0) -> ProjectionResult:
    """Projection onto a simplex extended by ``gamma`` beyond its hull.

    For an edge, the coordinate along ``v0 -> v1`` is clamped to
    ``[-gamma, 1 + gamma]``.  For higher simplices the affine projection is
    kept when every coordinate lies in that range; otherwise the result is
    the Euclidean-nearest projection among the codimension-one faces.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    x = np.asarray(x, dtype=float)
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    n = V.shape[0]
    if n == 1:
        return ProjectionResult(np.ones(1), V[0].copy(), False)
    if n == 2:
        g = float((V[1] - V[0]) @ (V[1] - V[0]))
        if g == 0.0:
            return ProjectionResult(np.array([1.0, 0.0]), V[0].copy(), True)
        t = float((V[1] - V[0]) @ (x - V[0])) / g
        clamped = False
        if t >= 1.0 + gamma:
            t, clamped = 1.0 + gamma, True
        elif t <= -gamma:
            t, clamped = -gamma, True
        return ProjectionResult(np.array([1.0 - t, t]), V[0] + t * (V[1] - V[0]), clamped)
    try:
        lam = affine_lambdas(x, V)
    except DegenerateSimplexError:
        lam = None
    if lam is not None and np.all(lam >= -gamma) and np.all(lam <= 1.0 + gamma):
        return ProjectionResult(lam, V[0] + (V[1:] - V[0]).T @ lam[1:], False)
    best = None
    best_d = np.inf
    for drop in range(n):
        sub = clamp_and_project(x, np.delete(V, drop, axis=0), gamma)
        d = float(np.sum((x - sub.position) ** 2))
        if d < best_d:
            best, best_d, best_drop = sub, d, drop
    return ProjectionResult(_embed(best.lambdas, best_drop, n), best.position, True)


def point_simplex_distance(x, vertices, gamma: float = 0.0, A=None) -> tuple[float, ProjectionResult]:
    """Squared metric distance from ``x`` to its clamped projection."""
    x = np.asarray(x, dtype=float)
    metric = _as_metric(A, x.shape[0])
    if metric.dim != x.shape[0]:
        raise ValueError(f"metric is {metric.dim}-dimensional, point is {x.shape[0]}-dimensional")
    res = clamp_and_project(x, vertices, gamma)
    return metric.quadratic(x - res.position), res


def default_atol(vertex_coordinates: np.ndarray) -> float:
    """Early-exit threshold: 1e-12 of the squared bounding-box diagonal."""
    if vertex_coordinates.size == 0:
        return 0.0
    span = np.ptp(vertex_coordinates, axis=0)
    return 1e-12 * max(float(span @ span), np.finfo(float).tiny)


class _Hierarchy:
    """Implicit BVH over one batch of simplices (Morton-ordered leaves)."""

    def __init__(self, V: np.ndarray, S: np.ndarray, dims: np.ndarray, gamma: float):
        self.size = S.shape[0]
        if self.size == 0:
            return
        lo, hi = _engine.primitive_boxes(V, S, dims, gamma)
        order = np.argsort(_engine.morton_codes(_sort_key_coords(lo, hi)), kind="stable")
        self.S = _engine.take_rows(np.ascontiguousarray(S), order)
        self.dims = np.ascontiguousarray(dims[order])
        self.lo = _engine.take_rows(lo, order)
        self.hi = _engine.take_rows(hi, order)
        n_leaves = -(-self.size // _engine.LEAF_SIZE)
        self.slots = 1 << max(0, int(np.ceil(np.log2(max(n_leaves, 1)))))
        self.nlo, self.nhi = _engine.build_nodes(self.lo, self.hi, self.slots, _engine.LEAF_SIZE)
        self.bary = None

    def prepare_containment(self, V: np.ndarray) -> None:
        """Precompute barycentric maps; only valid when every simplex is full-dimensional."""
        if self.size == 0 or self.bary is not None:
            return
        self.bary = _engine.barycentric_maps(V, self.S)

    def contains(self, X, gamma, init):
        if self.size == 0:
            return init
        return _engine.contains_query(
            X, self.bary, self.lo, self.hi, self.nlo, self.nhi, self.slots, _engine.LEAF_SIZE, gamma, init
        )

    def query(self, X, V, gamma, A, use_A, alpha, atol, inbounds_only, full_dim, init):
        if self.size == 0:
            return init
        return _engine.query(
            X, V, self.S, self.dims, self.lo, self.hi, self.nlo, self.nhi, self.slots,
            _engine.LEAF_SIZE, gamma, A, use_A, alpha, atol, inbounds_only, full_dim, init,
        )


def _stack_layers(layers, lo_dim: int, hi_dim: int) -> tuple[np.ndarray, np.ndarray]:
    chosen = [(k, rows) for k, rows in enumerate(layers) if lo_dim <= k <= hi_dim and rows.shape[0]]
    width = max((k + 1 for k, _ in chosen), default=1)
    total = sum(rows.shape[0] for _, rows in chosen)
    S = np.full((total, width), -1, dtype=np.int64)
    dims = np.empty(total, dtype=np.int64)
    pos = 0
    for k, rows in chosen:
        S[pos:pos + rows.shape[0], : k + 1] = rows
        dims[pos:pos + rows.shape[0]] = k
        pos += rows.shape[0]
    return S, dims


def _snap(values: np.ndarray, atol: float) -> np.ndarray:
    # rounding residue of an interior hit must not decide label ties
    values[values <= atol] = 0.0
    return values


class ComplexIndex:
    """Distance queries from points to one prime complex.

    ``query`` returns, per point, the minimum over maximal simplices of
    :func:`point_simplex_distance`.  Under the identity metric that minimum
    equals the minimum over every face-closure simplex of its own in-range
    projection distance (an in-range projection onto a face is never closer
    than the projection onto the affine hull of any simplex containing it),
    which is what the identity path evaluates.  Other metrics walk the
    maximal simplices with the literal face-descent rule.  Values at or
    below ``atol`` end the search early and are reported as exactly zero.
    """

    def __init__(self, complex_: PrimeComplex, gamma: float = 0.0, atol: float | None = None):
        if complex_.n_simplices == 0:
            raise ValueError("empty class model")
        if gamma < 0:
            raise ValueError("gamma must be non-negative")
        self.complex = complex_
        self.gamma = float(gamma)
        self._V = np.ascontiguousarray(complex_.vertex_coordinates, dtype=float)
        self.atol = default_atol(self._V) if atol is None else float(atol)
        self._maximal = None
        self._low = None
        self._high = None

    @property
    def dim(self) -> int:
        return self._V.shape[1]

    def _closure_parts(self):
        if self._low is None:
            closure = self.complex.closure_layers()
            maximal = self.complex.layers
            low_layers = [maximal[0] if maximal else np.empty((0, 1), dtype=np.int64)]
            low_layers.append(closure[1] if len(closure) > 1 else np.empty((0, 2), dtype=np.int64))
            S_lo, d_lo = _stack_layers(low_layers, 0, 1)
            S_hi, d_hi = _stack_layers(closure, 2, len(closure))
            self._low = _Hierarchy(self._V, S_lo, d_lo, self.gamma)
            self._high = _Hierarchy(self._V, S_hi, d_hi, self.gamma)
            self._full_dim = bool(d_hi.size) and bool(np.all(d_hi == self.dim))
            if self._full_dim:
                self._high.prepare_containment(self._V)
        return self._low, self._high

    def query(self, X, A=None) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=float)))
        d = self.dim
        if X.shape[1] != d:
            raise ValueError(f"points are {X.shape[1]}-dimensional, complex is {d}-dimensional")
        metric = _as_metric(A, d)
        if metric.dim != d:
            raise ValueError("metric dimension does not match the complex")
        M = np.ascontiguousarray(metric.matrix)
        init = np.full(X.shape[0], np.inf)
        if metric.is_identity:
            low, high = self._closure_parts()
            args = (X, self._V, self.gamma, M, False, 1.0, self.atol)
            if self._full_dim:
                best = high.contains(X, self.gamma, init)
                best = low.query(*args, True, False, best)
            else:
                best = low.query(*args, True, False, init)
                best = high.query(*args, True, False, best)
            return _snap(best, self.atol)
        if self._maximal is None:
            S, dims = self.complex.simplex_arrays()
            self._maximal = _Hierarchy(self._V, S, dims, self.gamma)
        atol = self.atol * float(np.trace(M)) / d
        best = self._maximal.query(
            X, self._V, self.gamma, M, True, metric.min_eigenvalue, atol, False, False, init
        )
        return _snap(best, atol)


def _sort_key_coords(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Ordering key for primitives: the boxes themselves when that is at most 8-D.

    Sorting by the whole box keeps primitives of similar extent together,
    which matters for large simplices.  Higher dimensions use three leading
    principal coordinates of the box centers plus the box diagonal length.
    """
    if 2 * lo.shape[1] <= 8:
        return np.ascontiguousarray(np.hstack([lo, hi]))
    C = 0.5 * (lo + hi)
    size = np.linalg.norm(hi - lo, axis=1)[:, None]
    if C.shape[0] < 2:
        return np.ascontiguousarray(np.hstack([C[:, :3], size]))
    sample = C[:: max(1, C.shape[0] // 4096)]
    mean = sample.mean(axis=0)
    _, _, vt = np.linalg.svd(sample - mean, full_matrices=False)
    return np.ascontiguousarray(np.hstack([(C - mean) @ vt[:3].T, size]))


def point_complex_distance(x, pc: PrimeComplex, gamma: float = 0.0, A=None) -> float:
    """Minimum over the maximal simplices of the clamped metric distance."""
    if pc.n_simplices == 0:
        raise ValueError("empty class model")
    return float(ComplexIndex(pc, gamma).query(np.atleast_2d(x), A)[0])


def brute_force_complex_distance(x, pc: PrimeComplex, gamma: float = 0.0, A=None) -> float:
    """Same quantity by looping the reference projection over every simplex."""
    if pc.n_simplices == 0:
        raise ValueError("empty class model")
    V = pc.vertex_coordinates
    return min(point_simplex_distance(x, V[list(s)], gamma, A)[0] for s in pc.maximal_simplices)
