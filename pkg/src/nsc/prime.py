"""Recognition barcodes and prime-complex selection.

Every simplex alive at ``R_max`` contributes a bar ``[birth, R_max]``.  The
prime radius is the bar-length weighted mean of bar midpoints, and the prime
complex is the filtration frozen at that radius, kept as its maximal
simplices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .topology import Filtration, Simplex, closure_layers, complex_at, maximal_layers

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BarcodeInterval:
    simplex: Simplex
    birth: float
    end: float

    def __post_init__(self):
        if not 0.0 <= self.birth <= self.end:
            raise ValueError(f"bad interval [{self.birth}, {self.end}]")

    @property
    def length(self) -> float:
        return self.end - self.birth

    @property
    def median_radius(self) -> float:
        return 0.5 * (self.birth + self.end)

    @property
    def dimension(self) -> int:
        return len(self.simplex) - 1


@dataclass(frozen=True, eq=False)
class Barcode:
    """Array-backed sequence of :class:`BarcodeInterval`.

    ``simplices[k]`` and ``births[k]`` follow the :class:`Filtration` layout;
    all bars end at ``end``.
    """

    simplices: tuple[np.ndarray, ...]
    births: tuple[np.ndarray, ...]
    end: float

    def __len__(self) -> int:
        return sum(b.shape[0] for b in self.births)

    def __iter__(self) -> Iterator[BarcodeInterval]:
        for rows, births in zip(self.simplices, self.births):
            for row, b in zip(rows, births):
                yield BarcodeInterval(tuple(int(v) for v in row), float(b), self.end)

    def __getitem__(self, i: int) -> BarcodeInterval:
        for rows, births in zip(self.simplices, self.births):
            if i < len(births):
                return BarcodeInterval(tuple(int(v) for v in rows[i]), float(births[i]), self.end)
            i -= len(births)
        raise IndexError(i)

    def all_births(self) -> np.ndarray:
        if not self.births:
            return np.zeros(0)
        return np.concatenate(self.births)

    def lengths(self) -> np.ndarray:
        return self.end - self.all_births()

    def medians(self) -> np.ndarray:
        return 0.5 * (self.all_births() + self.end)


def barcode(filtration: Filtration, R_max: float) -> Barcode:
    """Bars of every simplex born no later than ``R_max``."""
    if not R_max > 0:
        raise ValueError(f"R_max must be positive, got {R_max}")
    simplices, births = [], []
    for rows, b in zip(filtration.simplices, filtration.births):
        keep = b <= R_max
        simplices.append(rows[keep])
        births.append(b[keep])
    return Barcode(tuple(simplices), tuple(births), float(R_max))


def _as_arrays(intervals) -> tuple[np.ndarray, np.ndarray, float]:
    if isinstance(intervals, Barcode):
        return intervals.lengths(), intervals.medians(), intervals.end
    intervals = list(intervals)
    lengths = np.array([iv.length for iv in intervals], dtype=float)
    medians = np.array([iv.median_radius for iv in intervals], dtype=float)
    end = max((iv.end for iv in intervals), default=0.0)
    return lengths, medians, end


def prime_radius(intervals: Barcode | Sequence[BarcodeInterval]) -> float:
    """Lifecycle-weighted radius ``sum(l * M) / sum(l)``.

    Falls back to the bar end (``R_max``) with a warning when every bar has
    zero length.
    """
    lengths, medians, end = _as_arrays(intervals)
    if lengths.size == 0:
        raise ValueError("empty barcode")
    total = lengths.sum()
    if total <= 0.0:
        log.warning("degenerate barcode (all bars have zero length); using R_max=%g", end)
        return float(end)
    return float(np.dot(lengths, medians) / total)


@dataclass(frozen=True, eq=False)
class PrimeComplex:
    """One class model: landmark coordinates and the maximal simplices.

    ``layers[k]`` holds the maximal k-simplices as rows of indices into
    ``vertex_coordinates``.
    """

    class_label: int
    vertex_coordinates: np.ndarray
    layers: tuple[np.ndarray, ...]
    prime_radius: float
    barcode: Barcode | None = field(default=None, repr=False)
    closure: tuple[np.ndarray, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        n = self.vertex_coordinates.shape[0]
        for rows in self.layers:
            if rows.size and (rows.min() < 0 or rows.max() >= n):
                raise ValueError("simplex index out of range")

    @property
    def maximal_simplices(self) -> frozenset:
        return frozenset(tuple(int(v) for v in row) for rows in self.layers for row in rows)

    def closure_layers(self) -> tuple[np.ndarray, ...]:
        """Face closure of the maximal simplices, per dimension."""
        if self.closure is None:
            object.__setattr__(self, "closure", closure_layers(self.layers, self.vertex_coordinates.shape[0]))
        return self.closure

    @property
    def n_simplices(self) -> int:
        return sum(rows.shape[0] for rows in self.layers)

    @property
    def dim(self) -> int:
        return self.vertex_coordinates.shape[1]

    def simplex_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Maximal simplices padded with -1 to a common width, plus dims."""
        width = max((k + 1 for k, rows in enumerate(self.layers) if rows.shape[0]), default=1)
        padded = np.full((self.n_simplices, width), -1, dtype=np.int64)
        dims = np.empty(self.n_simplices, dtype=np.int64)
        pos = 0
        for k, rows in enumerate(self.layers):
            m = rows.shape[0]
            padded[pos:pos + m, : k + 1] = rows
            dims[pos:pos + m] = k
            pos += m
        return padded, dims


def select_prime_complex(
    filtration: Filtration, vertex_coordinates, R_max: float, class_label: int = 0
) -> PrimeComplex:
    """Barcode -> prime radius -> complex at that radius -> maximal simplices."""
    if len(filtration) == 0:
        raise ValueError("empty filtration")
    bars = barcode(filtration, R_max)
    r_star = prime_radius(bars)
    frozen = complex_at(filtration, r_star)
    layers = maximal_layers(frozen.layers)
    while len(layers) > 1 and layers[-1].shape[0] == 0:
        layers.pop()
    return PrimeComplex(
        int(class_label),
        np.asarray(vertex_coordinates, dtype=float),
        tuple(layers),
        r_star,
        bars,
        tuple(frozen.layers),
    )
