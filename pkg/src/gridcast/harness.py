"""End-to-end benchmark orchestration: one shared data pipeline feeding
six models on two targets, with per-cell failure isolation.

Determinism contract: all randomness flows from the master seed through
labeled child generators (one per model/target cell), so results do not
depend on execution order or worker count.  Wall-clock timings are kept
out of the main report document so repeated runs are byte-identical;
they land in a separate timings file.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import dataset as ds
from .errors import ConfigError, DataError
from .metrics import NEAR_ZERO, accuracy_within, compute_metrics
from .models import make_model
from .numeric import Rng

__all__ = ["MODEL_ORDER", "TARGETS", "BenchmarkConfig", "BenchmarkReport",
           "PreparedData", "prepare_dataset", "run_benchmark", "error_series"]

MODEL_ORDER = ["awmlstm", "catboost", "gbrt", "lstm", "lightgbm", "svr"]
TARGETS = ["price", "demand"]
ACCURACY_THRESHOLDS = (0.05, 0.10)


@dataclass
class BenchmarkConfig:
    input_path: str | None = None
    synthetic_rows: int | None = None
    seed: int = 0
    split_ratio: float = 0.85
    correlation_threshold: float = 0.95
    models: list[str] = field(default_factory=lambda: list(MODEL_ORDER))
    model_overrides: dict = field(default_factory=dict)

    def validate(self):
        if (self.input_path is None) == (self.synthetic_rows is None):
            raise ConfigError("exactly one of input_path or synthetic_rows is required")
        unknown = [m for m in self.models if m not in MODEL_ORDER]
        if unknown:
            raise ConfigError(f"unknown models: {unknown}")

    def echo(self) -> dict:
        return {
            "input_path": self.input_path,
            "synthetic_rows": self.synthetic_rows,
            "seed": self.seed,
            "split_ratio": self.split_ratio,
            "correlation_threshold": self.correlation_threshold,
            "models": list(self.models),
            "model_overrides": self.model_overrides,
        }


@dataclass
class PreparedData:
    params: ds.NormalizationParams
    train: ds.FeatureTable        # normalized
    test: ds.FeatureTable         # normalized
    test_raw_price: np.ndarray    # original units
    test_raw_demand: np.ndarray
    feature_names: list[str]
    dropped_columns: list[str]


@dataclass
class BenchmarkReport:
    config: dict
    dataset: dict
    cells: dict          # "<model>_<target>" -> cell dict
    series: dict         # same key -> error-series arrays dict
    timings: dict        # same key -> fit seconds


def prepare_dataset(config: BenchmarkConfig) -> PreparedData:
    if config.input_path is not None:
        raw = ds.load_csv(config.input_path)
    else:
        raw = ds.gen_synthetic(config.synthetic_rows, config.seed)
    table = ds.build_features(raw)
    table = ds.clean(table)
    table = ds.prune_correlated(table, config.correlation_threshold)
    train, test = ds.chronological_split(table, config.split_ratio)
    params = ds.fit_minmax(train)
    return PreparedData(
        params=params,
        train=ds.apply_minmax(train, params),
        test=ds.apply_minmax(test, params),
        test_raw_price=test.target_price.copy(),
        test_raw_demand=test.target_demand.copy(),
        feature_names=list(table.column_names),
        dropped_columns=list(table.dropped_columns),
    )


def error_series(actual, predicted, timestamps) -> dict:
    """Per-sample error table: signed error keeps over/under-estimation
    bias visible; relative error is NaN for near-zero actuals."""
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if not (len(actual) == len(predicted) == len(timestamps)):
        raise DataError("error_series: length mismatch")
    error = predicted - actual
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(np.abs(actual) >= NEAR_ZERO, error / np.abs(actual), np.nan)
    return {
        "timestamps": list(timestamps),
        "actual": actual,
        "predicted": predicted,
        "error": error,
        "relative_error": rel,
    }


def _run_cell(kind: str, target: str, data: PreparedData, config: BenchmarkConfig):
    master = Rng(config.seed)
    cell_seed = master.derive(f"model/{kind}/target/{target}").seed
    overrides = config.model_overrides.get(kind, {})
    model = make_model(kind, cell_seed, overrides)

    y_train = data.train.target_price if target == "price" else data.train.target_demand
    y_raw = data.test_raw_price if target == "price" else data.test_raw_demand

    t0 = time.perf_counter()
    model.fit(data.train.matrix, y_train, data.feature_names)
    fit_seconds = time.perf_counter() - t0

    pred_norm = model.predict(data.test.matrix, data.feature_names)
    pred = ds.invert_minmax(pred_norm, data.params, f"target_{target}")
    warmup = model.warmup
    actual = y_raw[warmup:]
    timestamps = data.test.row_timestamps[warmup:]

    record = compute_metrics(actual, pred)
    accuracies = {
        f"{int(t * 100)}": accuracy_within(actual, pred, t)
        for t in ACCURACY_THRESHOLDS
    }
    cell = {
        "model": kind,
        "target": target,
        "mse": record.mse,
        "mae": record.mae,
        "r2": record.r2,
        "mape": record.mape,
        "n_evaluated": record.n_evaluated,
        "n_excluded": record.n_excluded,
        "n_warmup_excluded": int(warmup),
        "accuracy_within_5": accuracies["5"],
        "accuracy_within_10": accuracies["10"],
        "converged": bool(getattr(model, "converged", True)),
        "error_file": f"errors_{kind}_{target}.csv",
    }
    series = error_series(actual, pred, timestamps)
    return cell, series, fit_seconds, model


def run_benchmark(config: BenchmarkConfig) -> BenchmarkReport:
    """Execute the full pipeline for every enabled (model, target) cell.

    A failing cell records its reason and does not abort the others.
    """
    config.validate()
    data = prepare_dataset(config)
    cells: dict = {}
    series: dict = {}
    timings: dict = {}
    for kind in MODEL_ORDER:
        if kind not in config.models:
            continue
        for target in TARGETS:
            key = f"{kind}_{target}"
            try:
                cell, cell_series, fit_seconds, _ = _run_cell(kind, target, data, config)
            except Exception as exc:  # per-cell failure isolation
                cells[key] = {"model": kind, "target": target,
                              "error": f"{type(exc).__name__}: {exc}"}
                continue
            cells[key] = cell
            series[key] = cell_series
            timings[key] = fit_seconds
    return BenchmarkReport(
        config=config.echo(),
        dataset={
            "n_train": data.train.n_rows,
            "n_test": data.test.n_rows,
            "n_features": len(data.feature_names),
            "dropped_columns": data.dropped_columns,
        },
        cells=cells,
        series=series,
        timings=timings,
    )
