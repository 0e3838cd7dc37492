"""Landmark and witness selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

MAXMIN = "maxmin"
RANDOM = "random"


@dataclass(frozen=True)
class LandmarkSplit:
    landmark_indices: np.ndarray
    witness_indices: np.ndarray

    def __post_init__(self):
        if np.intersect1d(self.landmark_indices, self.witness_indices).size:
            raise ValueError("landmarks and witnesses must be disjoint")

    @property
    def p(self) -> int:
        return len(self.landmark_indices)

    @property
    def q(self) -> int:
        return len(self.witness_indices)


def _check_count(n: int, p: int) -> None:
    if p > n:
        raise ValueError(f"insufficient points: asked for {p} landmarks from {n}")
    if p < 0:
        raise ValueError("landmark count must be non-negative")


def maxmin_landmarks(points, p: int, seed: int = 0) -> np.ndarray:
    """Greedy farthest-point landmarks.

    The first index is drawn uniformly from ``seed``; each later pick
    maximizes the distance to the nearest landmark chosen so far.  Ties go to
    the lowest index (``np.argmax`` returns the first maximum).
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if n == 0:
        raise ValueError("points must be non-empty")
    _check_count(n, p)
    if p == 0:
        return np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(seed)
    chosen = np.empty(p, dtype=np.int64)
    chosen[0] = rng.integers(n)
    nearest = np.linalg.norm(points - points[chosen[0]], axis=1)
    nearest[chosen[0]] = -1.0
    for k in range(1, p):
        nxt = int(np.argmax(nearest))
        chosen[k] = nxt
        np.minimum(nearest, np.linalg.norm(points - points[nxt], axis=1), out=nearest)
        nearest[chosen[: k + 1]] = -1.0
    return chosen


def random_landmarks(points, p: int, seed: int = 0) -> np.ndarray:
    n = np.asarray(points).shape[0]
    _check_count(n, p)
    rng = np.random.default_rng(seed)
    return rng.choice(n, size=p, replace=False).astype(np.int64)


def landmark_count(n: int, ratio: float) -> int:
    """``floor(n / (ratio + 1))`` landmarks, but never fewer than two."""
    return min(n, max(2, int(np.floor(n / (ratio + 1.0)))))


def split_landmark_witness(points, ratio: float = 1.0, strategy: str = MAXMIN, seed: int = 0) -> LandmarkSplit:
    """Pick landmarks; every remaining point becomes a witness."""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if ratio < 0:
        raise ValueError("landmark ratio must be non-negative")
    if n < 2:
        raise ValueError(f"degenerate class: need at least 2 points, got {n}")
    p = landmark_count(n, ratio)
    if strategy == MAXMIN:
        lm = maxmin_landmarks(points, p, seed)
    elif strategy == RANDOM:
        lm = random_landmarks(points, p, seed)
    else:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    mask = np.ones(n, dtype=bool)
    mask[lm] = False
    return LandmarkSplit(lm, np.flatnonzero(mask))


def distance_matrix(points, split: LandmarkSplit) -> np.ndarray:
    """Euclidean landmark-by-witness distance matrix (p x q)."""
    points = np.asarray(points, dtype=float)
    return cdist(points[split.landmark_indices], points[split.witness_indices])
