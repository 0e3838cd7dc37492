"""Nearest prime simplicial complex classification and a k-NN baseline."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from scipy.spatial.distance import cdist

from .complexes import INTERSECTING_BALLS, SCALE, edge_time_matrix, flag_filtration, rips_filtration
from .data import LabeledDataset
from .errors import ConfigError, DataError, NumericalError
from .prime import PrimeComplex, select_prime_complex
from .projection import ComplexIndex, MetricMatrix
from .sampling import MAXMIN, RANDOM, distance_matrix, split_landmark_witness

LAZYWITNESS = "lazywitness"
RIPS = "rips"
EUCLIDEAN = "euclidean"
MAHALANOBIS = "mahalanobis"


@dataclass(frozen=True)
class NSCConfig:
    complex_kind: str = LAZYWITNESS
    f: int = 2
    R_max: float = 0.5
    gamma: float = 0.0
    k_max: int = 2
    landmark_ratio: float = 1.0
    sampling: str = MAXMIN
    metric: str = EUCLIDEAN
    ball_convention: str = INTERSECTING_BALLS
    rips_R: float = 30.0
    ridge: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        checks = [
            (self.complex_kind in (LAZYWITNESS, RIPS), f"complex_kind must be {LAZYWITNESS!r} or {RIPS!r}"),
            (self.sampling in (MAXMIN, RANDOM), f"sampling must be {MAXMIN!r} or {RANDOM!r}"),
            (self.metric in (EUCLIDEAN, MAHALANOBIS), f"metric must be {EUCLIDEAN!r} or {MAHALANOBIS!r}"),
            (self.ball_convention in (INTERSECTING_BALLS, SCALE), "unknown ball_convention"),
            (self.R_max > 0, "R_max must be positive"),
            (self.rips_R > 0, "rips_R must be positive"),
            (self.gamma >= 0, "gamma must be non-negative"),
            (self.k_max >= 1, "k_max must be at least 1"),
            (self.landmark_ratio >= 0, "landmark_ratio must be non-negative"),
            (self.f >= 0, "f must be non-negative"),
            (self.ridge >= 0, "ridge must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NSCConfig":
        """Build from a mapping, coercing string values to field types."""
        known = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown NSC parameters: {sorted(unknown)}")
        defaults = cls()
        kw = {}
        for k, v in d.items():
            kind = type(getattr(defaults, k))
            try:
                kw[k] = kind(float(v)) if kind is int and isinstance(v, str) and "." in v else kind(v)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {k}: {v!r}") from None
        return cls(**kw)

    def updated(self, **kw) -> "NSCConfig":
        return replace(self, **kw)


def class_seed(seed: int, label: int) -> int:
    """Independent per-class seed derived from the master seed and label."""
    return int(np.random.SeedSequence([int(seed), int(label)]).generate_state(1)[0])


def mahalanobis_metric(train, ridge: float = 1e-6) -> MetricMatrix:
    """``(cov + ridge * trace(cov) / d * I)^-1`` of the whole training set."""
    X = np.atleast_2d(np.asarray(train.points if isinstance(train, LabeledDataset) else train, dtype=float))
    n, d = X.shape
    if n <= d:
        raise NumericalError(f"ill-posed covariance: {n} samples in {d} dimensions")
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    reg = cov + ridge * np.trace(cov) / d * np.eye(d)
    try:
        A = np.linalg.inv(reg)
    except np.linalg.LinAlgError:
        raise NumericalError("ill-posed covariance: singular matrix (use ridge > 0)") from None
    if not np.all(np.isfinite(A)):
        raise NumericalError("ill-posed covariance: non-finite inverse")
    return MetricMatrix(0.5 * (A + A.T))


def fit_class_complex(P: np.ndarray, label: int, config: NSCConfig) -> PrimeComplex:
    P = np.asarray(P, dtype=float)
    if P.shape[0] < 2:
        raise DataError(f"class {label} has {P.shape[0]} sample(s); need at least 2")
    if config.complex_kind == RIPS:
        F = rips_filtration(P, config.k_max, config.rips_R, config.ball_convention)
        return select_prime_complex(F, P, config.rips_R, label)
    split = split_landmark_witness(P, config.landmark_ratio, config.sampling, class_seed(config.seed, label))
    if split.q == 0:
        raise ConfigError(f"class {label}: no witnesses left (landmark_ratio too small); use complex_kind=rips")
    if config.f > split.p:
        raise ConfigError(f"class {label}: f={config.f} exceeds the {split.p} landmarks")
    E = edge_time_matrix(distance_matrix(P, split), config.f)
    F = flag_filtration(E, config.k_max, config.R_max)
    return select_prime_complex(F, P[split.landmark_indices], config.R_max, label)


@dataclass(frozen=True, eq=False)
class NSCModel:
    """One prime complex per class (labels ascending) and the metric."""

    classes: tuple[PrimeComplex, ...]
    A: MetricMatrix
    gamma: float
    config: NSCConfig

    def __post_init__(self):
        labels = [pc.class_label for pc in self.classes]
        if len(set(labels)) != len(labels):
            raise DataError("class labels must be distinct")
        if labels != sorted(labels):
            raise DataError("class complexes must be ordered by label")
        for pc in self.classes:
            if pc.n_simplices == 0:
                raise DataError(f"class {pc.class_label} has an empty complex")
            if pc.dim != self.A.dim:
                raise DataError("metric dimension does not match the data")
        object.__setattr__(self, "_indexes", {})

    @property
    def labels(self) -> np.ndarray:
        return np.array([pc.class_label for pc in self.classes], dtype=np.int64)

    @property
    def dim(self) -> int:
        return self.A.dim

    def _index(self, i: int) -> ComplexIndex:
        ix = self._indexes.get(i)
        if ix is None:
            ix = self._indexes[i] = ComplexIndex(self.classes[i], self.gamma)
        return ix

    def distances(self, X) -> np.ndarray:
        """(n, n_classes) squared projection distances."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DataError(f"points are {X.shape[1]}-dimensional, model expects {self.dim}")
        A = None if self.A.is_identity else self.A
        return np.stack([self._index(i).query(X, A) for i in range(len(self.classes))], axis=1)

    def predict(self, X) -> np.ndarray:
        # argmin returns the first minimum, i.e. the lowest label on ties
        return self.labels[np.argmin(self.distances(X), axis=1)]

    def predict_one(self, x) -> tuple[int, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise DataError("predict_one takes a single point")
        dist = self.distances(x[None])[0]
        return int(self.labels[np.argmin(dist)]), dist

    def with_metric(self, A) -> "NSCModel":
        A = A if isinstance(A, MetricMatrix) else MetricMatrix(A)
        return NSCModel(self.classes, A, self.gamma, self.config)


def fit(train: LabeledDataset, config: NSCConfig | None = None) -> NSCModel:
    config = config or NSCConfig()
    labels = train.classes
    if labels.size < 2:
        raise DataError(f"need at least 2 classes, got {labels.size}")
    if config.metric == MAHALANOBIS:
        A = mahalanobis_metric(train.points, config.ridge)
    else:
        A = MetricMatrix.identity(train.d)
    classes = tuple(fit_class_complex(train.class_points(c), int(c), config) for c in labels)
    return NSCModel(classes, A, config.gamma, config)


def predict(model: NSCModel, x) -> tuple[int, np.ndarray]:
    """Label and per-class distances for one point."""
    return model.predict_one(x)


def knn_predict(train: LabeledDataset, X, k: int = 1, chunk: int = 2048) -> np.ndarray:
    """Majority vote of the k Euclidean nearest training points.

    Distance ties go to the lower training index, vote ties to the lower label.
    """
    n = train.n
    if not 1 <= k <= n:
        raise ConfigError(f"k must lie in [1, {n}], got {k}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != train.d:
        raise DataError(f"points are {X.shape[1]}-dimensional, training data is {train.d}")
    n_labels = int(train.labels.max()) + 1
    out = np.empty(X.shape[0], dtype=np.int64)
    for lo in range(0, X.shape[0], chunk):
        D = cdist(X[lo:lo + chunk], train.points, "sqeuclidean")
        nearest = np.argsort(D, axis=1, kind="stable")[:, :k]
        votes = np.zeros((D.shape[0], n_labels), dtype=np.int64)
        np.add.at(votes, (np.arange(D.shape[0])[:, None], train.labels[nearest]), 1)
        out[lo:lo + chunk] = np.argmax(votes, axis=1)
    return out
