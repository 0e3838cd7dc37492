"""Single-file ``.npz`` model storage with a versioned JSON header."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .classifier import NSCConfig, NSCModel
from .data import MinMaxTransform, PCABasis, Preprocessor
from .errors import DataError
from .prime import Barcode, PrimeComplex
from .projection import MetricMatrix

FORMAT = "nsc-model"
VERSION = 1


def save_model(path, model: NSCModel, preprocessor: Preprocessor | None = None) -> Path:
    """Write config, metric, gamma and every class complex (with its barcode)."""
    path = Path(path)
    arrays: dict[str, np.ndarray] = {"A": np.asarray(model.A.matrix)}
    classes = []
    for i, pc in enumerate(model.classes):
        arrays[f"c{i}_vertices"] = pc.vertex_coordinates
        for k, rows in enumerate(pc.layers):
            arrays[f"c{i}_layer{k}"] = rows
        entry = {
            "label": pc.class_label,
            "prime_radius": pc.prime_radius,
            "n_layers": len(pc.layers),
            "barcode_end": None,
            "n_bar_layers": 0,
        }
        if pc.barcode is not None:
            entry["barcode_end"] = pc.barcode.end
            entry["n_bar_layers"] = len(pc.barcode.births)
            for k, (rows, births) in enumerate(zip(pc.barcode.simplices, pc.barcode.births)):
                arrays[f"c{i}_bar_simplices{k}"] = rows
                arrays[f"c{i}_bar_births{k}"] = births
        classes.append(entry)
    pre = {"pca": False, "scale": False}
    if preprocessor is not None:
        if preprocessor.pca is not None:
            pre["pca"] = True
            arrays["pca_mean"] = preprocessor.pca.mean
            arrays["pca_components"] = preprocessor.pca.components
            arrays["pca_variance"] = preprocessor.pca.explained_variance
        if preprocessor.scaler is not None:
            pre["scale"] = True
            arrays["scale_lo"] = preprocessor.scaler.lo
            arrays["scale_span"] = preprocessor.scaler.span
    header = {
        "format": FORMAT,
        "version": VERSION,
        "config": model.config.to_dict(),
        "gamma": model.gamma,
        "classes": classes,
        "preprocess": pre,
    }
    arrays["header"] = np.array(json.dumps(header))
    try:
        with path.open("wb") as fh:
            np.savez_compressed(fh, **arrays)
    except OSError as exc:
        raise DataError(f"cannot write model to {path}: {exc}") from exc
    return path


def load_model(path) -> tuple[NSCModel, Preprocessor | None]:
    path = Path(path)
    try:
        z = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    with z:
        if "header" not in z:
            raise DataError(f"{path} is not a model file")
        header = json.loads(str(z["header"]))
        if header.get("format") != FORMAT:
            raise DataError(f"{path} is not a model file")
        if header.get("version") != VERSION:
            raise DataError(f"unsupported model version {header.get('version')}")
        classes = []
        for i, entry in enumerate(header["classes"]):
            layers = tuple(z[f"c{i}_layer{k}"] for k in range(entry["n_layers"]))
            bars = None
            if entry["barcode_end"] is not None:
                n = entry["n_bar_layers"]
                bars = Barcode(
                    tuple(z[f"c{i}_bar_simplices{k}"] for k in range(n)),
                    tuple(z[f"c{i}_bar_births{k}"] for k in range(n)),
                    float(entry["barcode_end"]),
                )
            classes.append(PrimeComplex(int(entry["label"]), z[f"c{i}_vertices"], layers, float(entry["prime_radius"]), bars))
        model = NSCModel(tuple(classes), MetricMatrix(z["A"]), float(header["gamma"]), NSCConfig(**header["config"]))
        pre = header["preprocess"]
        preprocessor = None
        if pre["pca"] or pre["scale"]:
            basis = PCABasis(z["pca_mean"], z["pca_components"], z["pca_variance"]) if pre["pca"] else None
            scaler = MinMaxTransform(z["scale_lo"], z["scale_span"]) if pre["scale"] else None
            preprocessor = Preprocessor(basis, scaler)
    return model, preprocessor
