"""Repeated experiments, paired t-tests and complex or barcode export."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .classifier import MAHALANOBIS, NSCConfig, NSCModel, fit, knn_predict
from .data import (
    BUILTIN,
    SIMULATED,
    GeneratorSpec,
    LabeledDataset,
    Preprocessor,
    generate,
    load_builtin,
    load_csv,
    simulated_spec,
    split_indices,
)
from .errors import ConfigError, DataError
from .prime import Barcode

log = logging.getLogger(__name__)

NSC = "nsc"
KNN = "knn"


@dataclass(frozen=True)
class Method:
    """A named classifier: NSC with config overrides, or k-NN.

    Parsed from strings like ``nsc``, ``nsc-m``, ``1-nn``, ``knn:k=5`` or
    ``nsc:f=0,R_max=1.0``.
    """

    name: str
    kind: str
    overrides: Mapping[str, str] = field(default_factory=dict)
    k: int = 1

    @classmethod
    def parse(cls, text: str) -> "Method":
        name = text.strip()
        base, _, rest = name.partition(":")
        opts = {}
        for part in filter(None, (p.strip() for p in rest.split(","))):
            key, eq, value = part.partition("=")
            if not eq:
                raise ConfigError(f"bad method option {part!r} in {text!r}")
            opts[key.strip()] = value.strip()
        base = base.lower()
        if base in ("nsc", "nsc-m"):
            if base == "nsc-m":
                opts.setdefault("metric", MAHALANOBIS)
            NSCConfig.from_dict(opts)  # validate keys early
            return cls(name, NSC, opts)
        if base.endswith("-nn") and base[:-3].isdigit():
            return cls(name, KNN, {}, int(base[:-3]))
        if base == "knn":
            try:
                return cls(name, KNN, {}, int(opts.get("k", 1)))
            except ValueError:
                raise ConfigError(f"bad k in {text!r}") from None
        raise ConfigError(f"unknown method {text!r}")

    def config(self, base: NSCConfig) -> NSCConfig:
        merged = {**base.to_dict(), **self.overrides}
        return NSCConfig.from_dict(merged)


def parse_methods(methods) -> list[Method]:
    if isinstance(methods, str):
        methods = [m for m in _split_methods(methods)]
    out = [m if isinstance(m, Method) else Method.parse(m) for m in methods]
    names = [m.name for m in out]
    if len(set(names)) != len(names):
        raise ConfigError("method names must be unique")
    return out


def _split_methods(text: str) -> list[str]:
    # ';' separates methods so that ',' can separate options inside one
    sep = ";" if ";" in text or ":" in text else ","
    return [m.strip() for m in text.split(sep) if m.strip()]


def resolve_dataset(name: str):
    """``D1``..``D5`` -> GeneratorSpec, built-in name or CSV path -> LabeledDataset."""
    if name.upper() in SIMULATED:
        return simulated_spec(name)
    if name in BUILTIN:
        return load_builtin(name)
    path = Path(name)
    if path.exists():
        return load_csv(path)
    raise DataError(f"unknown dataset {name!r}: not D1-D5, a built-in ({', '.join(BUILTIN)}) or an existing file")


@dataclass
class ExperimentReport:
    """Per-method error rates (%) over repetitions.

    ``std`` is the sample standard deviation (n - 1), zero for one repetition.
    Failed methods keep NaN errors and a message in ``failures``.
    """

    methods: list[str]
    errors: dict[str, np.ndarray]
    failures: dict[str, str]
    config: dict
    repetitions: int
    timings: dict[str, float] = field(default_factory=dict)

    def mean(self, method: str) -> float:
        e = self.errors[method]
        return float("nan") if np.isnan(e).any() else float(e.mean())

    def std(self, method: str) -> float:
        e = self.errors[method]
        if np.isnan(e).any():
            return float("nan")
        return float(e.std(ddof=1)) if e.size > 1 else 0.0

    def same_results(self, other: "ExperimentReport") -> bool:
        """Equality of everything except wall-clock timings."""
        return (
            self.methods == other.methods
            and self.failures == other.failures
            and self.config == other.config
            and self.repetitions == other.repetitions
            and all(np.array_equal(self.errors[m], other.errors[m], equal_nan=True) for m in self.methods)
        )

    def table(self) -> str:
        width = max([len(m) for m in self.methods] + [6])
        lines = [f"{'method':<{width}}  {'mean %':>10}  {'std %':>10}  (sample std, {self.repetitions} repetitions)"]
        for m in self.methods:
            if m in self.failures:
                lines.append(f"{m:<{width}}  {'failed':>10}  {'':>10}  {self.failures[m]}")
            else:
                lines.append(f"{m:<{width}}  {self.mean(m):>10.4f}  {self.std(m):>10.4f}")
        return "\n".join(lines)

    def write_summary_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "mean_error_pct", "std_error_pct_sample", "repetitions", "failure"])
            for m in self.methods:
                w.writerow([m, f"{self.mean(m):.4f}", f"{self.std(m):.4f}", self.repetitions, self.failures.get(m, "")])

    def write_raw_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["repetition"] + self.methods)
            for r in range(self.repetitions):
                w.writerow([r] + [repr(float(self.errors[m][r])) for m in self.methods])


def _repetition_data(source, rep_seed: int, train_fraction: float, stratified: bool):
    if isinstance(source, GeneratorSpec):
        ds = generate(source.with_seed(rep_seed))
    elif isinstance(source, LabeledDataset):
        ds = source
    elif isinstance(source, tuple) and len(source) == 2:
        return source
    else:
        raise ConfigError(f"unsupported dataset source {type(source).__name__}")
    tr, te = split_indices(ds.labels, train_fraction, stratified, rep_seed)
    return ds.subset(tr), ds.subset(te)


def run_experiment(
    source,
    methods,
    config: NSCConfig | None = None,
    repetitions: int = 20,
    seed: int = 0,
    train_fraction: float = 0.5,
    pca_dim: int | None = None,
    scale: bool = True,
    stratified: bool = True,
) -> ExperimentReport:
    """Repeat (generate or resplit, preprocess, fit, predict) with seeds ``seed + r``.

    ``source`` is a GeneratorSpec (regenerated each repetition, then split),
    a LabeledDataset (resplit each repetition), a fixed ``(train, test)``
    pair, or a name accepted by :func:`resolve_dataset`.  Preprocessing
    (optional PCA, then min-max scaling) is fitted on the training part.
    """
    if repetitions < 1:
        raise ConfigError("repetitions must be at least 1")
    if isinstance(source, str):
        source = resolve_dataset(source)
    config = config or NSCConfig()
    methods = parse_methods(methods)
    names = [m.name for m in methods]
    errors = {m: np.full(repetitions, np.nan) for m in names}
    failures: dict[str, str] = {}
    timings = {"data": 0.0}
    for m in names:
        timings[f"{m}:fit"] = 0.0
        timings[f"{m}:predict"] = 0.0
    for rep in range(repetitions):
        rep_seed = seed + rep
        t0 = time.perf_counter()
        train, test = _repetition_data(source, rep_seed, train_fraction, stratified)
        pre = Preprocessor.fit(train.points, pca_dim, scale)
        train, test = pre.apply_dataset(train), pre.apply_dataset(test)
        timings["data"] += time.perf_counter() - t0
        for m in methods:
            if m.name in failures:
                continue
            try:
                t0 = time.perf_counter()
                if m.kind == KNN:
                    pred = knn_predict(train, test.points, m.k)
                    timings[f"{m.name}:predict"] += time.perf_counter() - t0
                else:
                    model = fit(train, m.config(config).updated(seed=rep_seed))
                    t1 = time.perf_counter()
                    timings[f"{m.name}:fit"] += t1 - t0
                    pred = model.predict(test.points)
                    timings[f"{m.name}:predict"] += time.perf_counter() - t1
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                failures[m.name] = f"{type(exc).__name__}: {exc}"
                errors[m.name][:] = np.nan
                log.warning("method %s failed at repetition %d: %s", m.name, rep, exc)
                continue
            errors[m.name][rep] = 100.0 * float(np.mean(pred != test.labels))
    snapshot = {
        "nsc": config.to_dict(),
        "methods": names,
        "repetitions": repetitions,
        "seed": seed,
        "train_fraction": train_fraction,
        "pca_dim": pca_dim,
        "scale": scale,
        "stratified": stratified,
        "source": _describe(source),
    }
    return ExperimentReport(names, errors, failures, snapshot, repetitions, timings)


def _describe(source) -> str:
    if isinstance(source, GeneratorSpec):
        return f"generated {source.kind} n_per_class={source.n_per_class} rho={source.noise_rho}"
    if isinstance(source, LabeledDataset):
        return f"dataset {source.name} n={source.n} d={source.d}"
    return "fixed train/test pair"


def paired_t_test(errors_a, errors_b) -> tuple[float, float]:
    """Two-sided paired t-test on ``a - b`` with n - 1 degrees of freedom.

    All-zero differences give ``(0, 1)``.  Constant non-zero differences
    give ``(+-inf, 0)``, which :func:`format_p_value` prints as ``< 1e-12``.
    """
    a = np.asarray(errors_a, dtype=float)
    b = np.asarray(errors_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ConfigError(f"paired t-test needs equal-length vectors, got {a.shape} and {b.shape}")
    if a.size < 2:
        raise ConfigError("paired t-test needs at least two pairs")
    diff = a - b
    if np.all(diff == 0):
        return 0.0, 1.0
    sd = diff.std(ddof=1)
    mean = diff.mean()
    if sd == 0:
        return float(np.copysign(np.inf, mean)), 0.0
    t = mean / (sd / np.sqrt(diff.size))
    return float(t), float(2.0 * stats.t.sf(abs(t), diff.size - 1))


def format_p_value(p: float) -> str:
    return "< 1e-12" if p < 1e-12 else f"{p:.4g}"


# ------------------------------------------------------------------- export

_PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]
_LAYER_FILES = {0: "isolated", 1: "edges", 2: "triangles"}


@dataclass
class ExportResult:
    paths: list[Path]
    notices: list[str]


def _write_rows(path: Path, header, rows) -> None:
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def _layer_name(k: int) -> str:
    return _LAYER_FILES.get(k, f"simplices{k}")


def export_complex(model: NSCModel, out_dir, prefix: str = "class", max_svg_triangles: int = 200_000) -> ExportResult:
    """Per class: vertex coordinates and maximal simplices of each dimension as CSV.

    Files are ``<prefix><label>_vertices.csv``, ``_edges.csv``,
    ``_triangles.csv`` (and ``_simplices<k>.csv`` above dimension 2).
    Isolated vertices are implied by the vertex table.  2D models also get
    ``<prefix>_complex.svg``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {out}: {exc}") from exc
    paths, notices = [], []
    for pc in model.classes:
        stem = f"{prefix}{pc.class_label}"
        d = pc.dim
        p = out / f"{stem}_vertices.csv"
        _write_rows(p, ["vertex"] + [f"x{i}" for i in range(d)],
                    ([i] + [repr(float(v)) for v in row] for i, row in enumerate(pc.vertex_coordinates)))
        paths.append(p)
        top = max(2, len(pc.layers) - 1)
        for k in range(1, top + 1):
            rows = pc.layers[k] if k < len(pc.layers) else np.empty((0, k + 1), dtype=np.int64)
            p = out / f"{stem}_{_layer_name(k)}.csv"
            _write_rows(p, [f"v{i}" for i in range(k + 1)], rows.tolist())
            paths.append(p)
    if model.dim == 2:
        p = out / f"{prefix}_complex.svg"
        notices.extend(_write_svg(model, p, max_svg_triangles))
        paths.append(p)
    else:
        notices.append(f"SVG skipped: data is {model.dim}-dimensional (only 2D is drawn)")
    for n in notices:
        log.info(n)
    return ExportResult(paths, notices)


def import_complex(out_dir, label: int, prefix: str = "class"):
    """Read an exported class back as (vertex coordinates, set of maximal simplices)."""
    out = Path(out_dir)
    stem = f"{prefix}{label}"
    with (out / f"{stem}_vertices.csv").open(newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    V = np.array([[float(v) for v in r[1:]] for r in rows]).reshape(len(rows), -1)
    simplices = set()
    k = 1
    while (out / f"{stem}_{_layer_name(k)}.csv").exists():
        with (out / f"{stem}_{_layer_name(k)}.csv").open(newline="") as fh:
            simplices.update(tuple(int(v) for v in r) for r in list(csv.reader(fh))[1:])
        k += 1
    covered = {v for s in simplices for v in s}
    simplices.update((v,) for v in range(V.shape[0]) if v not in covered)
    return V, simplices


def _write_svg(model: NSCModel, path: Path, max_triangles: int, size: int = 600, margin: int = 20) -> list[str]:
    notices = []
    allv = np.vstack([pc.vertex_coordinates for pc in model.classes])
    lo = allv.min(axis=0)
    span = max(float(np.ptp(allv, axis=0).max()), 1e-12)
    scale = (size - 2 * margin) / span

    def xy(v):
        return margin + (v[0] - lo[0]) * scale, size - margin - (v[1] - lo[1]) * scale

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
             '<rect width="100%" height="100%" fill="white"/>']
    for ci, pc in enumerate(model.classes):
        color = _PALETTE[ci % len(_PALETTE)]
        V = pc.vertex_coordinates
        parts.append(f'<g id="class{pc.class_label}" stroke="{color}" fill="{color}">')
        tris = pc.layers[2] if len(pc.layers) > 2 else np.empty((0, 3), dtype=np.int64)
        if tris.shape[0] > max_triangles:
            notices.append(f"class {pc.class_label}: {tris.shape[0]} triangles exceed {max_triangles}; drawing edges only")
            tris = tris[:0]
        for t in tris:
            pts = " ".join("%.2f,%.2f" % xy(V[v]) for v in t)
            parts.append(f'<polygon points="{pts}" fill-opacity="0.15" stroke="none"/>')
        closure = pc.closure_layers()
        edges = closure[1] if len(closure) > 1 else np.empty((0, 2), dtype=np.int64)
        for a, b in edges:
            (x1, y1), (x2, y2) = xy(V[a]), xy(V[b])
            parts.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" stroke-width="0.6"/>')
        for v in V:
            x, y = xy(v)
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.5" stroke="none"/>')
        parts.append("</g>")
    parts.append("</svg>")
    try:
        path.write_text("\n".join(parts))
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    return notices


def export_barcode(barcodes, path) -> Path:
    """CSV of (class, dim, vertices, birth, end) sorted by class, dim, birth.

    ``barcodes`` is an NSCModel or a mapping label -> Barcode.  Ties keep
    the lexicographic simplex order of the filtration.
    """
    if isinstance(barcodes, NSCModel):
        missing = [pc.class_label for pc in barcodes.classes if pc.barcode is None]
        if missing:
            raise DataError(f"model has no barcode for classes {missing}")
        barcodes = {pc.class_label: pc.barcode for pc in barcodes.classes}
    path = Path(path)
    rows = []
    for label in sorted(barcodes):
        bc: Barcode = barcodes[label]
        for k, (simplices, births) in enumerate(zip(bc.simplices, bc.births)):
            order = np.argsort(births, kind="stable")
            for i in order:
                verts = "[" + " ".join(str(int(v)) for v in simplices[i]) + "]"
                rows.append([label, k, verts, repr(float(births[i])), repr(float(bc.end))])
    _write_rows(path, ["class", "dim", "vertices", "birth", "end"], rows)
    return path
