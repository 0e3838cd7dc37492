"""Command-line interface: ``nsc generate | fit | predict | eval | export``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .classifier import NSCConfig, fit
from .data import (
    GENERATOR_DEFAULTS,
    SIMULATED,
    GeneratorSpec,
    LabeledDataset,
    Preprocessor,
    generate,
    load_builtin,
    load_csv,
    save_csv,
    split_indices,
    BUILTIN,
)
from .errors import ConfigError, DataError, NumericalError
from .evaluation import export_barcode, export_complex, format_p_value, paired_t_test, run_experiment
from .serialization import load_model, save_model

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

NSC_KEYS = {f.name for f in fields(NSCConfig)}
RUN_DEFAULTS = {
    "dataset": "D1",
    "methods": "nsc;1-nn;3-nn",
    "repetitions": "20",
    "train_fraction": "0.5",
    "pca_dim": "none",
    "scale": "true",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq or not key.strip():
            raise ConfigError(f"{path}:{no}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def _parse_sets(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _bool(value: str) -> bool:
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _opt_int(value):
    return None if str(value).strip().lower() in ("", "none", "0") else int(value)


def resolve_settings(args, extra_keys=()) -> dict[str, str]:
    settings = {}
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    settings.update(_parse_sets(getattr(args, "set", None)))
    allowed = NSC_KEYS | set(extra_keys)
    unknown = set(settings) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return settings


def _nsc_config(settings) -> NSCConfig:
    return NSCConfig.from_dict({k: v for k, v in settings.items() if k in NSC_KEYS})


def _print_config(title: str, items: dict) -> None:
    print(f"# {title}")
    for k in sorted(items):
        print(f"{k} = {items[k]}")


def _load_dataset(name: str, labeled: bool = True) -> LabeledDataset:
    if name in BUILTIN:
        return load_builtin(name)
    return load_csv(name, labeled=labeled)


# ----------------------------------------------------------------- commands

def cmd_generate(args) -> int:
    if args.dataset:
        kind, rho = SIMULATED[args.dataset.upper()]
        name = args.name or args.dataset.upper()
    else:
        kind, rho = args.kind, 0.0
        name = args.name or args.kind
    if args.noise is not None:
        rho = args.noise
    params = {k: float(v) for k, v in _parse_sets(args.param).items()}
    total = args.n_train + args.n_test
    spec = GeneratorSpec(kind, total, rho, args.seed, params)
    _print_config("resolved generator", {"kind": kind, "noise_rho": rho, "n_train": args.n_train,
                                         "n_test": args.n_test, "seed": args.seed, **spec.resolved_params})
    ds = generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.n_test == 0:
        save_csv(ds, out / f"{name}_train.csv")
        print(f"wrote {out / f'{name}_train.csv'}")
        return EXIT_OK
    tr, te = split_indices(ds.labels, args.n_train / total, True, args.seed)
    save_csv(ds.subset(tr), out / f"{name}_train.csv")
    save_csv(ds.subset(te), out / f"{name}_test.csv")
    print(f"wrote {out / f'{name}_train.csv'} ({tr.size} rows) and {out / f'{name}_test.csv'} ({te.size} rows)")
    return EXIT_OK


def cmd_fit(args) -> int:
    settings = resolve_settings(args, ("scale", "pca_dim"))
    config = _nsc_config(settings)
    scale = _bool(settings.get("scale", "true"))
    pca_dim = _opt_int(settings.get("pca_dim", "none"))
    _print_config("resolved config", {**config.to_dict(), "scale": scale, "pca_dim": pca_dim})
    train = _load_dataset(args.train)
    pre = Preprocessor.fit(train.points, pca_dim, scale)
    model = fit(pre.apply_dataset(train), config)
    save_model(args.model, model, pre)
    for pc in model.classes:
        counts = [rows.shape[0] for rows in pc.layers]
        print(f"class {pc.class_label}: R* = {pc.prime_radius:.4f}, maximal simplices by dimension {counts}")
    print(f"wrote {args.model}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model, pre = load_model(args.model)
    _print_config("model config", model.config.to_dict())
    ds = _load_dataset(args.data, labeled=not args.unlabeled)
    X = pre.apply(ds.points) if pre is not None else ds.points
    dist = model.distances(X)
    pred = model.labels[np.argmin(dist, axis=1)]
    if args.out:
        import csv

        with Path(args.out).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "predicted"] + ([] if args.unlabeled else ["label"])
                       + [f"dist_class{c}" for c in model.labels])
            for i, (p, d) in enumerate(zip(pred, dist)):
                w.writerow([i, int(p)] + ([] if args.unlabeled else [int(ds.labels[i])])
                           + [f"{v:.4f}" for v in d])
        print(f"wrote {args.out}")
    if not args.unlabeled:
        err = 100.0 * float(np.mean(pred != ds.labels))
        print(f"error rate: {err:.4f}% ({int(np.sum(pred != ds.labels))} of {ds.n})")
    return EXIT_OK


def cmd_eval(args) -> int:
    settings = {**RUN_DEFAULTS, **resolve_settings(args, RUN_DEFAULTS.keys())}
    for key in ("dataset", "methods", "repetitions", "train_fraction", "pca_dim"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = str(value)
    if args.no_scale:
        settings["scale"] = "false"
    if args.seed is not None:
        settings["seed"] = str(args.seed)
    config = _nsc_config(settings)
    try:
        repetitions = int(settings["repetitions"])
        train_fraction = float(settings["train_fraction"])
        pca_dim = _opt_int(settings["pca_dim"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    scale = _bool(settings["scale"])
    _print_config("resolved config", {**settings, **config.to_dict()})
    report = run_experiment(settings["dataset"], settings["methods"], config, repetitions, config.seed,
                            train_fraction, pca_dim, scale)
    print()
    print(report.table())
    for phase, secs in report.timings.items():
        print(f"time {phase}: {secs:.4f} s")
    if args.ttest:
        a, _, b = args.ttest.partition(",")
        if a not in report.errors or b not in report.errors:
            raise ConfigError(f"--ttest needs two method names from {report.methods}")
        t, p = paired_t_test(report.errors[a], report.errors[b])
        print(f"paired t-test {a} vs {b}: t = {t:.4f}, p = {format_p_value(p)}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.write_summary_csv(out / "summary.csv")
        report.write_raw_csv(out / "repetitions.csv")
        print(f"wrote {out / 'summary.csv'} and {out / 'repetitions.csv'}")
    return EXIT_NUMERICAL if len(report.failures) == len(report.methods) else EXIT_OK


def cmd_export(args) -> int:
    model, _ = load_model(args.model)
    res = export_complex(model, args.out_dir, args.prefix)
    for notice in res.notices:
        print(f"notice: {notice}")
    if args.barcode:
        res.paths.append(export_barcode(model, Path(args.out_dir) / f"{args.prefix}_barcode.csv"))
    for p in res.paths:
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nsc", description="Nearest prime simplicial complex classification.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write synthetic train/test CSVs")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", choices=sorted(SIMULATED), help="named dataset with its default noise")
    src.add_argument("--kind", choices=sorted(GENERATOR_DEFAULTS))
    g.add_argument("--n-train", type=int, default=500, help="training points per class")
    g.add_argument("--n-test", type=int, default=500, help="test points per class")
    g.add_argument("--noise", type=float, help="noise standard deviation (overrides the dataset default)")
    g.add_argument("--param", action="append", metavar="KEY=VALUE", help="geometry override")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--name")
    g.add_argument("--out-dir", default=".")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit a model and save it")
    f.add_argument("--train", required=True, help="CSV path or built-in dataset name")
    f.add_argument("--model", required=True, help="output .npz path")
    f.add_argument("--config")
    f.add_argument("--set", action="append", metavar="KEY=VALUE")
    f.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="classify points with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--unlabeled", action="store_true", help="every CSV column is a feature")
    p.add_argument("--out", help="per-point predictions CSV")
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("eval", help="repeated experiment with an error table")
    e.add_argument("--config")
    e.add_argument("--set", action="append", metavar="KEY=VALUE")
    e.add_argument("--dataset", help="D1-D5, a built-in name, or a CSV path")
    e.add_argument("--methods", help="e.g. 'nsc;nsc-m;1-nn;nsc:f=0'")
    e.add_argument("--repetitions", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--train-fraction", type=float)
    e.add_argument("--pca-dim", type=int)
    e.add_argument("--no-scale", action="store_true")
    e.add_argument("--ttest", metavar="A,B", help="paired t-test between two methods")
    e.add_argument("--out-dir")
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("export", help="write complexes (CSV, SVG for 2D) and barcodes")
    x.add_argument("--model", required=True)
    x.add_argument("--out-dir", required=True)
    x.add_argument("--prefix", default="class")
    x.add_argument("--barcode", action="store_true")
    x.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
