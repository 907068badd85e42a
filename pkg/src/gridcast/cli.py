"""Command-line front end.

Subcommands: run (full benchmark), synth (synthetic input CSV),
report (re-render a stored run, optionally with SVG charts),
featurize (export the engineered feature table), train (fit and save one
model), evaluate (score a saved model).

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
failure.  GRIDCAST_SEED provides a default seed; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import dataset as ds
from .errors import ConfigError, DataError, GridcastError, NumericError
from .harness import MODEL_ORDER, BenchmarkConfig, run_benchmark
from .metrics import accuracy_within, compute_metrics
from .models import load_model, make_model, save_model
from .numeric import Rng
from .report import (load_error_series, load_report, render_markdown,
                     render_summary_csv, svg_line_chart, write_report)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    env = os.environ.get("GRIDCAST_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"GRIDCAST_SEED is not an integer: {env!r}") from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="gridcast",
                     description="Electricity price/demand forecasting benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full benchmark")
    run.add_argument("--input", metavar="PATH", help="input CSV")
    run.add_argument("--synthetic", type=int, metavar="N",
                     help="use a generated series of N rows instead of a file")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", required=True, metavar="DIR")
    run.add_argument("--models", metavar="LIST",
                     help="comma-separated subset of: " + ",".join(MODEL_ORDER))
    run.add_argument("--config", metavar="PATH", help="JSON config file")
    run.add_argument("--format", choices=["json", "csv", "md"], default="md")

    synth = sub.add_parser("synth", help="write a synthetic input CSV")
    synth.add_argument("--rows", type=int, required=True)
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--out", required=True, metavar="PATH")

    rep = sub.add_parser("report", help="re-render a stored benchmark run")
    rep.add_argument("--run", required=True, metavar="DIR")
    rep.add_argument("--format", choices=["md", "csv", "json"], default="md")
    rep.add_argument("--svg", action="store_true",
                     help="emit per-cell line charts as SVG files")

    feat = sub.add_parser("featurize", help="export the engineered feature table")
    feat.add_argument("--input", required=True, metavar="PATH")
    feat.add_argument("--out", required=True, metavar="PATH")
    feat.add_argument("--correlation-threshold", type=float, default=0.95)

    train = sub.add_parser("train", help="fit one model and save its artifact")
    train.add_argument("--input", required=True, metavar="PATH")
    train.add_argument("--model", required=True, choices=MODEL_ORDER)
    train.add_argument("--target", required=True, choices=["price", "demand"])
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--ratio", type=float, default=0.85)
    train.add_argument("--out", required=True, metavar="PATH")

    ev = sub.add_parser("evaluate", help="score a saved model on a CSV's test split")
    ev.add_argument("--model", required=True, metavar="PATH")
    ev.add_argument("--input", required=True, metavar="PATH")
    ev.add_argument("--target", required=True, choices=["price", "demand"])
    ev.add_argument("--ratio", type=float, default=0.85)
    return parser


def _load_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot open config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed config file {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise DataError(f"config file {path} must hold a JSON object")
    return doc


def _make_benchmark_config(args) -> BenchmarkConfig:
    values = {}
    if args.config:
        values.update(_load_config_file(args.config))
    known = {"input_path", "synthetic_rows", "seed", "split_ratio",
             "correlation_threshold", "models", "model_overrides"}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if args.input is not None:
        values["input_path"] = args.input
        values.pop("synthetic_rows", None)
    if args.synthetic is not None:
        values["synthetic_rows"] = args.synthetic
        values.pop("input_path", None)
    if args.seed is not None:
        values["seed"] = args.seed
    values.setdefault("seed", _default_seed())
    if args.models:
        values["models"] = [m.strip() for m in args.models.split(",") if m.strip()]
    return BenchmarkConfig(**values)


def cmd_run(args) -> int:
    config = _make_benchmark_config(args)
    config.validate()
    report = run_benchmark(config)
    write_report(report, args.out)
    doc = {"config": report.config, "dataset": report.dataset, "cells": report.cells}
    if args.format == "json":
        print(json.dumps(doc, sort_keys=True, indent=2))
    elif args.format == "csv":
        sys.stdout.write(render_summary_csv(report.cells))
    else:
        sys.stdout.write(render_markdown(doc))
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    series = ds.gen_synthetic(args.rows, seed)
    ds.write_raw_csv(series, args.out)
    print(f"wrote {len(series)} rows to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    doc = load_report(args.run)
    if args.format == "json":
        print(json.dumps(doc, sort_keys=True, indent=2))
    elif args.format == "csv":
        sys.stdout.write(render_summary_csv(doc["cells"]))
    else:
        sys.stdout.write(render_markdown(doc))
    if args.svg:
        for key, cell in sorted(doc["cells"].items()):
            if "error_file" not in cell:
                continue
            series = load_error_series(args.run, cell["error_file"])
            base = os.path.join(args.run, f"chart_{key}")
            with open(base + "_prediction.svg", "w", encoding="utf-8") as fh:
                fh.write(svg_line_chart(
                    [("actual", series["actual"]),
                     ("predicted", series["predicted"])],
                    f"{cell['model']} / {cell['target']}: actual vs predicted",
                ))
            with open(base + "_error.svg", "w", encoding="utf-8") as fh:
                fh.write(svg_line_chart(
                    [("signed error", series["error"])],
                    f"{cell['model']} / {cell['target']}: signed error",
                ))
    return EXIT_OK


def _prepared_split(path, ratio, threshold=0.95):
    raw = ds.load_csv(path)
    table = ds.build_features(raw)
    table = ds.clean(table)
    table = ds.prune_correlated(table, threshold)
    train, test = ds.chronological_split(table, ratio)
    params = ds.fit_minmax(train)
    return table, ds.apply_minmax(train, params), ds.apply_minmax(test, params), params, test


def cmd_featurize(args) -> int:
    raw = ds.load_csv(args.input)
    table = ds.build_features(raw)
    table = ds.clean(table)
    table = ds.prune_correlated(table, args.correlation_threshold)
    ds.export_feature_table(table, args.out)
    print(f"wrote {table.n_rows} rows x {len(table.column_names)} features to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    table, train_n, _test_n, _params, _test = _prepared_split(args.input, args.ratio)
    y = train_n.target_price if args.target == "price" else train_n.target_demand
    cell_seed = Rng(seed).derive(f"model/{args.model}/target/{args.target}").seed
    model = make_model(args.model, cell_seed)
    model.fit(train_n.matrix, y, table.column_names)
    save_model(model, args.out)
    print(f"saved {args.model} ({args.target}) to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    table, _train_n, test_n, params, test_raw = _prepared_split(args.input, args.ratio)
    y_raw = test_raw.target_price if args.target == "price" else test_raw.target_demand
    pred_norm = model.predict(test_n.matrix, table.column_names)
    pred = ds.invert_minmax(pred_norm, params, f"target_{args.target}")
    actual = y_raw[model.warmup:]
    record = compute_metrics(actual, pred)
    result = {
        "model": model.kind, "target": args.target,
        "mse": record.mse, "mae": record.mae, "r2": record.r2,
        "mape": record.mape,
        "n_evaluated": record.n_evaluated, "n_excluded": record.n_excluded,
        "accuracy_within_5": accuracy_within(actual, pred, 0.05),
        "accuracy_within_10": accuracy_within(actual, pred, 0.10),
    }
    print(json.dumps(result, sort_keys=True, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": cmd_run,
        "synth": cmd_synth,
        "report": cmd_report,
        "featurize": cmd_featurize,
        "train": cmd_train,
        "evaluate": cmd_evaluate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"gridcast: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"gridcast: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, GridcastError) as exc:
        print(f"gridcast: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
