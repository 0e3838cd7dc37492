"""Datasets: synthetic generators, CSV I/O, splitting, scaling and PCA."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray
    name: str | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.points, dtype=float))
        y = np.asarray(self.labels)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(f"{X.shape[0]} points but {y.size} labels")
        if y.size and not np.all(np.equal(np.mod(y, 1), 0)):
            raise DataError("labels must be integers")
        y = y.astype(np.int64)
        if y.size and y.min() < 0:
            raise DataError("labels must be non-negative")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(self.points[idx], self.labels[idx], self.name)

    def with_points(self, points) -> "LabeledDataset":
        return LabeledDataset(points, self.labels, self.name)

    def class_points(self, label: int) -> np.ndarray:
        return self.points[self.labels == label]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return (
            isinstance(other, LabeledDataset)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
        )


# ---------------------------------------------------------------- generators

TWO_CIRCLES = "two_circles"
TWO_SPIRALS = "two_spirals"
CIRCLE_CROSS_CIRCLE = "circle_cross_circle"
FOUR_CIRCLE_CROSS = "four_circle_cross"
SPHERE_CROSS_SPHERE = "sphere_cross_sphere"

GENERATOR_DEFAULTS: dict[str, dict[str, float]] = {
    TWO_CIRCLES: {"inner_radius": 10.0, "outer_radius": 20.0},
    TWO_SPIRALS: {"start_radius": 5.0, "end_radius": 40.0, "turn": 3 * np.pi},
    CIRCLE_CROSS_CIRCLE: {"radius": 10.0, "offset": 10.0},
    FOUR_CIRCLE_CROSS: {"radius": 10.0, "offset": 10.0, "spacing": 40.0},
    SPHERE_CROSS_SPHERE: {"radius": 10.0, "offset": 10.0},
}

# name -> (kind, noise standard deviation)
SIMULATED = {
    "D1": (TWO_CIRCLES, 1.0),
    "D2": (TWO_SPIRALS, 3.5),
    "D3": (CIRCLE_CROSS_CIRCLE, 2.0),
    "D4": (FOUR_CIRCLE_CROSS, 2.0),
    "D5": (SPHERE_CROSS_SPHERE, 1.5),
}


@dataclass(frozen=True)
class GeneratorSpec:
    """Two-class synthetic point cloud.

    ``params`` overrides entries of ``GENERATOR_DEFAULTS[kind]``.
    """

    kind: str
    n_per_class: int = 500
    noise_rho: float = 0.0
    seed: int = 0
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in GENERATOR_DEFAULTS:
            raise ConfigError(f"unknown generator kind {self.kind!r}")
        if self.n_per_class < 1:
            raise ConfigError("n_per_class must be at least 1")
        if self.noise_rho < 0:
            raise ConfigError("noise_rho must be non-negative")
        unknown = set(self.params) - set(GENERATOR_DEFAULTS[self.kind])
        if unknown:
            raise ConfigError(f"unknown parameters for {self.kind}: {sorted(unknown)}")

    @property
    def resolved_params(self) -> dict[str, float]:
        return {**GENERATOR_DEFAULTS[self.kind], **self.params}

    def with_seed(self, seed: int) -> "GeneratorSpec":
        return GeneratorSpec(self.kind, self.n_per_class, self.noise_rho, seed, dict(self.params))


def simulated_spec(name: str, n_per_class: int = 1000, seed: int = 0, **params) -> GeneratorSpec:
    """Generator spec for one of the named datasets D1 to D5."""
    try:
        kind, rho = SIMULATED[name.upper()]
    except KeyError:
        raise ConfigError(f"unknown simulated dataset {name!r}") from None
    return GeneratorSpec(kind, n_per_class, rho, seed, params)


def _grid(n: int, rng) -> np.ndarray:
    # evenly spaced parameters in [0, 1) with a random phase
    return (np.arange(n) + rng.uniform()) / n


def _circle(t, radius, center, axes) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    pts = np.tile(center, (t.size, 1))
    pts[:, axes[0]] += radius * np.cos(2 * np.pi * t)
    pts[:, axes[1]] += radius * np.sin(2 * np.pi * t)
    return pts


def _linked_pair(n: int, radius: float, offset: float, base, rng) -> list[np.ndarray]:
    # circle in the xy-plane and a circle in the xz-plane through its center
    base = np.asarray(base, dtype=float)
    a = _circle(_grid(n, rng), radius, base, (0, 1))
    b = _circle(_grid(n, rng), radius, base + [offset, 0.0, 0.0], (0, 2))
    return [a, b]


def _sphere(n: int, radius: float, center, axes, rng) -> np.ndarray:
    # Fibonacci lattice, rotated about the polar axis by a random phase
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i + 2 * np.pi * rng.uniform()
    s = np.sqrt(1.0 - z * z)
    pts = np.tile(np.asarray(center, dtype=float), (n, 1))
    pts[:, axes[0]] += radius * s * np.cos(phi)
    pts[:, axes[1]] += radius * s * np.sin(phi)
    pts[:, axes[2]] += radius * z
    return pts


def _split_counts(n: int, parts: int) -> list[int]:
    return [n // parts + (1 if i < n % parts else 0) for i in range(parts)]


def generate(spec: GeneratorSpec) -> LabeledDataset:
    """Noiseless geometry sampled on an even parameter grid, plus Gaussian noise.

    Noise is isotropic with per-coordinate standard deviation ``noise_rho``.
    """
    rng = np.random.default_rng(spec.seed)
    p = spec.resolved_params
    n = spec.n_per_class
    if spec.kind == TWO_CIRCLES:
        classes = [
            _circle(_grid(n, rng), p["inner_radius"], (0.0, 0.0), (0, 1)),
            _circle(_grid(n, rng), p["outer_radius"], (0.0, 0.0), (0, 1)),
        ]
    elif spec.kind == TWO_SPIRALS:
        classes = []
        for phase in (0.0, np.pi):
            t = p["turn"] * _grid(n, rng)
            r = p["start_radius"] + (p["end_radius"] - p["start_radius"]) * t / p["turn"]
            classes.append(np.c_[r * np.cos(t + phase), r * np.sin(t + phase)])
    elif spec.kind == CIRCLE_CROSS_CIRCLE:
        classes = _linked_pair(n, p["radius"], p["offset"], (0.0, 0.0, 0.0), rng)
    elif spec.kind == FOUR_CIRCLE_CROSS:
        chunks = [[], []]
        counts = _split_counts(n, 4)
        for j, (gx, gy) in enumerate([(0, 0), (1, 0), (0, 1), (1, 1)]):
            a, b = _linked_pair(counts[j], p["radius"], p["offset"], (gx * p["spacing"], gy * p["spacing"], 0.0), rng)
            # checkerboard: which circle of the pair belongs to class 0 alternates
            first = (gx + gy) % 2
            chunks[first].append(a)
            chunks[1 - first].append(b)
        classes = [np.vstack(c) for c in chunks]
    else:
        r, off = p["radius"], p["offset"]
        classes = [
            _sphere(n, r, (0.0, 0.0, 0.0, 0.0), (0, 1, 2), rng),
            _sphere(n, r, (off, 0.0, 0.0, 0.0), (0, 1, 3), rng),
        ]
    X = np.vstack(classes)
    if spec.noise_rho > 0:
        X = X + rng.normal(0.0, spec.noise_rho, X.shape)
    y = np.repeat(np.arange(len(classes)), [c.shape[0] for c in classes])
    return LabeledDataset(X, y, spec.kind)


# ----------------------------------------------------------------------- csv

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, name: str | None = None, labeled: bool = True) -> LabeledDataset:
    """Numeric CSV with the integer label in the last column.

    A first row containing any non-numeric cell is treated as a header.
    With ``labeled=False`` every column is a feature and labels are zero.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
        first = 2
    else:
        first = 1
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0])
    if width < (2 if labeled else 1):
        raise DataError(f"{path}: need at least one feature column and a label column")
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {i + first} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric value {cell!r} at row {i + first}, column {j + 1}") from None
    if not labeled:
        return LabeledDataset(data, np.zeros(len(rows), dtype=np.int64), name or path.stem)
    labels = data[:, -1]
    if not np.all(labels == np.round(labels)):
        bad = int(np.flatnonzero(labels != np.round(labels))[0])
        raise DataError(f"{path}: label at row {bad + first} is not an integer")
    return LabeledDataset(data[:, :-1], labels.astype(np.int64), name or path.stem)


def save_csv(ds: LabeledDataset, path, header: bool = True) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{i}" for i in range(ds.d)] + ["label"])
        for x, y in zip(ds.points, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [int(y)])


BUILTIN = ("iris", "breast_cancer")


def load_builtin(name: str) -> LabeledDataset:
    """Datasets shipped with the package: ``iris`` and ``breast_cancer``."""
    if name not in BUILTIN:
        raise DataError(f"unknown built-in dataset {name!r}; available: {', '.join(BUILTIN)}")
    with resources.as_file(resources.files("nsc.datasets") / f"{name}.csv") as p:
        return load_csv(p, name)


# ------------------------------------------------------------------ splitting

def split_indices(labels, train_fraction: float, stratified: bool = True, seed: int = 0):
    """Sorted (train, test) index arrays.

    Sizes round to nearest.  Stratified splits round per class and keep at
    least one sample of every class on each side.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must lie strictly between 0 and 1, got {train_fraction}")
    labels = np.asarray(labels)
    n = labels.size
    rng = np.random.default_rng(seed)
    if not stratified:
        if n < 2:
            raise DataError("need at least two samples to split")
        k = int(min(n - 1, max(1, np.rint(n * train_fraction))))
        perm = rng.permutation(n)
        return np.sort(perm[:k]), np.sort(perm[k:])
    train = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            raise DataError(f"class {c} has a single sample; cannot stratify")
        k = int(min(idx.size - 1, max(1, np.rint(idx.size * train_fraction))))
        train.append(rng.permutation(idx)[:k])
    train = np.sort(np.concatenate(train))
    mask = np.ones(n, dtype=bool)
    mask[train] = False
    return train, np.flatnonzero(mask)


def train_test_split(ds: LabeledDataset, train_fraction: float = 0.5, stratified: bool = True, seed: int = 0):
    tr, te = split_indices(ds.labels, train_fraction, stratified, seed)
    return ds.subset(tr), ds.subset(te)


# -------------------------------------------------------------- preprocessing

@dataclass(frozen=True, eq=False)
class MinMaxTransform:
    """Per-feature ``(x - lo) / span``; constant features have span 0 and map to 0.

    Points outside the fitted range map outside [0, 1].
    """

    lo: np.ndarray
    span: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.span > 0, self.span, 1.0)
        return np.where(self.span > 0, (X - self.lo) / safe, 0.0)


def fit_minmax(X) -> MinMaxTransform:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    lo = X.min(axis=0)
    return MinMaxTransform(lo, X.max(axis=0) - lo)


def minmax_scale(ds: LabeledDataset) -> tuple[LabeledDataset, MinMaxTransform]:
    t = fit_minmax(ds.points)
    return ds.with_points(t.apply(ds.points)), t


@dataclass(frozen=True, eq=False)
class PCABasis:
    mean: np.ndarray
    components: np.ndarray  # (target_dim, d), rows by decreasing variance
    explained_variance: np.ndarray

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) @ self.components.T

    def inverse(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) @ self.components + self.mean


def fit_pca(X, target_dim: int) -> PCABasis:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if not 1 <= target_dim <= min(n, d):
        raise ConfigError(f"target_dim must lie in [1, {min(n, d)}], got {target_dim}")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    comps = vt[:target_dim].copy()
    # sign convention: the largest-magnitude entry of each direction is positive
    pivot = np.argmax(np.abs(comps), axis=1)
    comps *= np.sign(comps[np.arange(target_dim), pivot])[:, None]
    var = s[:target_dim] ** 2 / max(n - 1, 1)
    return PCABasis(mean, comps, var)


def pca(ds: LabeledDataset, target_dim: int) -> tuple[LabeledDataset, PCABasis]:
    basis = fit_pca(ds.points, target_dim)
    return ds.with_points(basis.apply(ds.points)), basis


@dataclass(frozen=True, eq=False)
class Preprocessor:
    """Optional PCA followed by optional min-max scaling, fitted on training data."""

    pca: PCABasis | None = None
    scaler: MinMaxTransform | None = None

    @classmethod
    def fit(cls, X, pca_dim: int | None = None, scale: bool = True) -> "Preprocessor":
        basis = fit_pca(X, pca_dim) if pca_dim else None
        Z = basis.apply(X) if basis is not None else np.asarray(X, dtype=float)
        return cls(basis, fit_minmax(Z) if scale else None)

    def apply(self, X) -> np.ndarray:
        Z = np.asarray(X, dtype=float)
        if self.pca is not None:
            Z = self.pca.apply(Z)
        if self.scaler is not None:
            Z = self.scaler.apply(Z)
        return Z

    def apply_dataset(self, ds: LabeledDataset) -> LabeledDataset:
        return ds.with_points(self.apply(ds.points))
