"""Abstract simplices, simplicial complexes and filtrations.

A simplex is a sorted tuple of distinct vertex indices.  Large complexes are
stored per dimension as integer arrays (one row per simplex, rows sorted
ascending) so that flag complexes with millions of triangles stay cheap; the
set-of-tuples view is computed on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

Simplex = tuple[int, ...]

DEFAULT_MAX_DIMENSION = 2


def simplex(vertices: Iterable[int]) -> Simplex:
    """Normalize an iterable of vertex indices into a Simplex."""
    verts = tuple(sorted(int(v) for v in vertices))
    if not verts:
        raise ValueError("a simplex needs at least one vertex")
    if verts[0] < 0:
        raise ValueError(f"negative vertex index in {verts}")
    if len(set(verts)) != len(verts):
        raise ValueError(f"repeated vertex in {verts}")
    return verts


def dimension(s: Simplex) -> int:
    return len(s) - 1


def faces(s: Sequence[int]) -> set[Simplex]:
    """Codimension-one faces of ``s``; a vertex has none."""
    s = simplex(s)
    if len(s) == 1:
        return set()
    return {s[:i] + s[i + 1:] for i in range(len(s))}


def _all_faces(s: Simplex) -> Iterator[Simplex]:
    for size in range(1, len(s) + 1):
        yield from combinations(s, size)


# ---------------------------------------------------------------------------
# array helpers


def _empty(k: int) -> np.ndarray:
    return np.empty((0, k + 1), dtype=np.int64)


def encode_rows(rows: np.ndarray, base: int) -> np.ndarray:
    """Injective int64 key per row (rows of equal width, entries < base)."""
    rows = np.asarray(rows, dtype=np.int64)
    width = rows.shape[1]
    if width and float(base) ** width >= 2.0 ** 62:
        raise OverflowError("simplex keys do not fit into int64")
    keys = np.zeros(rows.shape[0], dtype=np.int64)
    for col in range(width):
        keys = keys * base + rows[:, col]
    return keys


def _unique_rows(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] == 0:
        return rows
    return np.unique(rows, axis=0)


def _face_rows(rows: np.ndarray) -> np.ndarray:
    """All codimension-one faces of each row (with repetition)."""
    width = rows.shape[1]
    parts = [np.delete(rows, i, axis=1) for i in range(width)]
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# complexes


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Face-closed collection of simplices, stored per dimension.

    ``layers[k]`` is an ``(n_k, k + 1)`` array of sorted vertex rows.
    """

    layers: tuple[np.ndarray, ...]
    max_dimension: int = DEFAULT_MAX_DIMENSION
    _set: frozenset = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        top = len(self.layers) - 1
        while top >= 0 and self.layers[top].shape[0] == 0:
            top -= 1
        if top > self.max_dimension:
            raise ValueError(
                f"complex has a {top}-simplex but max_dimension={self.max_dimension}"
            )

    @classmethod
    def from_simplices(
        cls, simplices: Iterable[Sequence[int]], max_dimension: int = DEFAULT_MAX_DIMENSION
    ) -> "SimplicialComplex":
        """Build from simplices that are already face-closed (not checked)."""
        by_dim: dict[int, list[Simplex]] = {}
        for s in simplices:
            s = simplex(s)
            by_dim.setdefault(len(s) - 1, []).append(s)
        top = max(by_dim, default=-1)
        layers = tuple(
            _unique_rows(np.array(by_dim[k], dtype=np.int64).reshape(-1, k + 1))
            if k in by_dim
            else _empty(k)
            for k in range(top + 1)
        )
        return cls(layers, max(max_dimension, 0))

    @property
    def simplices(self) -> frozenset:
        if self._set is None:
            items = frozenset(tuple(int(v) for v in row) for layer in self.layers for row in layer)
            object.__setattr__(self, "_set", items)
        return self._set

    @property
    def dimension(self) -> int:
        for k in range(len(self.layers) - 1, -1, -1):
            if self.layers[k].shape[0]:
                return k
        return -1

    def layer(self, k: int) -> np.ndarray:
        if 0 <= k < len(self.layers):
            return self.layers[k]
        return _empty(k)

    def __len__(self) -> int:
        return sum(layer.shape[0] for layer in self.layers)

    def __iter__(self) -> Iterator[Simplex]:
        for layer in self.layers:
            for row in layer:
                yield tuple(int(v) for v in row)

    def __contains__(self, s) -> bool:
        return simplex(s) in self.simplices

    def __eq__(self, other) -> bool:
        if isinstance(other, SimplicialComplex):
            return self.simplices == other.simplices
        if isinstance(other, (set, frozenset)):
            return self.simplices == frozenset(simplex(s) for s in other)
        return NotImplemented

    def __hash__(self):
        return hash(self.simplices)

    def __le__(self, other: "SimplicialComplex") -> bool:
        return self.simplices <= other.simplices

    def is_face_closed(self) -> bool:
        members = self.simplices
        return all(f in members for s in members for f in faces(s))

    def vertices(self) -> np.ndarray:
        return self.layer(0)[:, 0]


def close_under_faces(
    simplices: Iterable[Sequence[int]], max_dimension: int | None = None
) -> SimplicialComplex:
    """Smallest face-closed superset of ``simplices``."""
    closed: set[Simplex] = set()
    for s in simplices:
        closed.update(_all_faces(simplex(s)))
    top = max((len(s) - 1 for s in closed), default=0)
    cap = max(DEFAULT_MAX_DIMENSION, top) if max_dimension is None else max_dimension
    return SimplicialComplex.from_simplices(closed, cap)


def maximal_layers(layers: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Per-dimension rows that are not a face of any higher row.

    ``layers`` must be face-closed and duplicate-free; this is the array
    path behind :func:`maximal_simplices`.
    """
    out = []
    n_vertices = 1 + max((int(layer.max()) for layer in layers if layer.size), default=0)
    for k, layer in enumerate(layers):
        higher = layers[k + 1] if k + 1 < len(layers) else _empty(k + 1)
        if layer.shape[0] == 0 or higher.shape[0] == 0:
            out.append(layer)
            continue
        covered = encode_rows(_face_rows(higher), n_vertices)
        keep = ~np.isin(encode_rows(layer, n_vertices), covered)
        out.append(layer[keep])
    return out


def closure_layers(layers: Sequence[np.ndarray], n_vertices: int) -> tuple[np.ndarray, ...]:
    """Face closure of per-dimension rows, as sorted unique rows per dimension."""
    top = max((k for k, rows in enumerate(layers) if rows.shape[0]), default=0)
    out = [None] * (top + 1)
    for k in range(top, -1, -1):
        parts = [layers[k]] if k < len(layers) else []
        if k < top:
            parts.append(_face_rows(out[k + 1]))
        rows = np.concatenate(parts, axis=0) if parts else _empty(k)
        if rows.shape[0]:
            keys = np.unique(encode_rows(rows, n_vertices))
            rows = np.empty((keys.size, k + 1), dtype=np.int64)
            for col in range(k, -1, -1):
                rows[:, col] = keys % n_vertices
                keys = keys // n_vertices
        out[k] = rows
    return tuple(out)


def maximal_simplices(k: SimplicialComplex) -> frozenset:
    """Members of ``k`` that are not a face of any other member."""
    return frozenset(
        tuple(int(v) for v in row) for layer in maximal_layers(k.layers) for row in layer
    )


# ---------------------------------------------------------------------------
# filtrations


@dataclass(frozen=True, eq=False)
class Filtration:
    """Simplices annotated with birth radii, monotone under taking faces.

    ``simplices[k]`` holds the sorted vertex rows of the k-simplices and
    ``births[k]`` their birth radii.  Vertices are born at 0.
    """

    simplices: tuple[np.ndarray, ...]
    births: tuple[np.ndarray, ...]
    n_vertices: int
    max_dimension: int = DEFAULT_MAX_DIMENSION

    def __post_init__(self):
        if len(self.simplices) != len(self.births):
            raise ValueError("simplices and births must have one entry per dimension")
        for k, (rows, b) in enumerate(zip(self.simplices, self.births)):
            if rows.shape[0] != b.shape[0] or (rows.size and rows.shape[1] != k + 1):
                raise ValueError(f"malformed dimension-{k} layer")

    @classmethod
    def from_dict(
        cls, entries: dict, max_dimension: int | None = None
    ) -> "Filtration":
        """Build from ``{simplex: birth}``; missing vertices are added at 0."""
        by_dim: dict[int, list[tuple[Simplex, float]]] = {}
        verts = set()
        for s, b in entries.items():
            s = simplex(s)
            verts.update(s)
            by_dim.setdefault(len(s) - 1, []).append((s, float(b)))
        known0 = {s[0] for s, _ in by_dim.get(0, [])}
        for v in verts - known0:
            by_dim.setdefault(0, []).append(((v,), 0.0))
        top = max(by_dim, default=0)
        simplices, births = [], []
        for k in range(top + 1):
            items = sorted(by_dim.get(k, []))
            rows = np.array([s for s, _ in items], dtype=np.int64).reshape(-1, k + 1)
            simplices.append(rows)
            births.append(np.array([b for _, b in items], dtype=float))
        n = 1 + max(verts, default=-1)
        cap = top if max_dimension is None else max_dimension
        return cls(tuple(simplices), tuple(births), n, cap)

    def __len__(self) -> int:
        return sum(rows.shape[0] for rows in self.simplices)

    def items(self) -> Iterator[tuple[Simplex, float]]:
        for rows, b in zip(self.simplices, self.births):
            for row, t in zip(rows, b):
                yield tuple(int(v) for v in row), float(t)

    def to_dict(self) -> dict[Simplex, float]:
        return dict(self.items())

    def birth(self, s: Sequence[int]) -> float:
        s = simplex(s)
        k = len(s) - 1
        if k >= len(self.simplices):
            raise KeyError(s)
        hit = np.flatnonzero((self.simplices[k] == np.array(s)).all(axis=1))
        if hit.size == 0:
            raise KeyError(s)
        return float(self.births[k][hit[0]])

    @property
    def max_birth(self) -> float:
        return max((float(b.max()) for b in self.births if b.size), default=0.0)

    def complex_at(self, radius: float) -> SimplicialComplex:
        return complex_at(self, radius)

    def is_monotone(self) -> bool:
        """Every face is present with birth no later than its cofaces."""
        for k in range(1, len(self.simplices)):
            rows, b = self.simplices[k], self.births[k]
            if rows.shape[0] == 0:
                continue
            lower, lb = self.simplices[k - 1], self.births[k - 1]
            keys = encode_rows(lower, self.n_vertices)
            order = np.argsort(keys)
            for i in range(k + 1):
                fk = encode_rows(np.delete(rows, i, axis=1), self.n_vertices)
                pos = np.searchsorted(keys[order], fk)
                pos = np.minimum(pos, len(keys) - 1)
                found = keys[order][pos] == fk
                if not found.all():
                    return False
                if np.any(lb[order][pos] > b + 1e-12):
                    return False
        return True


def complex_at(f: Filtration, radius: float) -> SimplicialComplex:
    """All simplices of ``f`` born at or before ``radius``."""
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    layers = tuple(rows[b <= radius] for rows, b in zip(f.simplices, f.births))
    return SimplicialComplex(layers, max(f.max_dimension, len(layers) - 1))
