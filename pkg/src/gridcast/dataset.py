"""Market data pipeline: CSV ingestion, feature engineering, anomaly
cleaning, correlation pruning, chronological split, and leak-free
min-max normalization.

Pipeline order is fixed: build_features -> clean -> prune_correlated ->
chronological_split -> fit_minmax(train) -> apply_minmax.
"""

from __future__ import annotations

import calendar
import csv
import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DataError
from .numeric import Rng, pearson

__all__ = [
    "PREDISPATCH_COLUMNS",
    "RawSeries",
    "FeatureTable",
    "NormalizationParams",
    "SplitIndices",
    "load_csv",
    "write_raw_csv",
    "build_features",
    "clean",
    "prune_correlated",
    "chronological_split",
    "fit_minmax",
    "apply_minmax",
    "invert_minmax",
    "gen_synthetic",
    "export_feature_table",
]

PREDISPATCH_COLUMNS = (
    "pred_price_avg32",
    "pred_price_best32",
    "pred_demand_avg32",
    "pred_demand_best32",
)

LAGS = (1, 3, 6, 12, 24)
ROLL_WINDOWS = (6, 12, 24)
STAT_WINDOW = 24
WARMUP = 24  # largest lookback; first WARMUP engineered rows are dropped
MIN_RAW_ROWS = 2 * WARMUP


@dataclass
class RawSeries:
    """Timestamp-indexed price/demand observations plus optional
    predispatch columns.  Missing numeric cells are NaN."""

    timestamps: list[datetime]
    price: np.ndarray
    demand: np.ndarray
    extra: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass
class FeatureTable:
    """Engineered feature matrix aligned with same-row targets."""

    column_names: list[str]
    matrix: np.ndarray  # (n_rows, n_cols), float64
    target_price: np.ndarray
    target_demand: np.ndarray
    row_timestamps: list[datetime]
    dropped_columns: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.column_names)) != len(self.column_names):
            raise DataError("duplicate feature column names")

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.column_names.index(name)
        except ValueError:
            raise DataError(f"unknown column: {name}") from None
        return self.matrix[:, idx]

    def take_rows(self, start: int, stop: int) -> "FeatureTable":
        return FeatureTable(
            column_names=list(self.column_names),
            matrix=self.matrix[start:stop].copy(),
            target_price=self.target_price[start:stop].copy(),
            target_demand=self.target_demand[start:stop].copy(),
            row_timestamps=self.row_timestamps[start:stop],
            dropped_columns=list(self.dropped_columns),
        )


@dataclass
class SplitIndices:
    train_end: int
    ratio: float


@dataclass
class NormalizationParams:
    """Per-column (min, max) fitted on training rows only."""

    feature_ranges: dict[str, tuple[float, float]]
    target_ranges: dict[str, tuple[float, float]]

    def range_for(self, column: str) -> tuple[float, float]:
        if column in self.feature_ranges:
            return self.feature_ranges[column]
        if column in self.target_ranges:
            return self.target_ranges[column]
        raise DataError(f"unknown column: {column}")


def _parse_timestamp(text: str, row: int) -> datetime:
    try:
        return datetime.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"row {row}: unparseable timestamp {text!r}") from None


def _parse_number(text: str) -> float:
    # Unparseable numeric cells become missing; clean() handles them.
    try:
        return float(text)
    except (TypeError, ValueError):
        return math.nan


def load_csv(path) -> RawSeries:
    """Load an input-schema CSV, sort ascending, and validate spacing."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for required in ("settlement_time", "price", "demand"):
            if required not in header:
                raise DataError(f"missing column: {required}")
        col_idx = {name: header.index(name) for name in header}
        extra_names = [c for c in PREDISPATCH_COLUMNS if c in header]

        rows = []
        for i, record in enumerate(reader):
            if not record or all(not cell.strip() for cell in record):
                continue
            ts = _parse_timestamp(record[col_idx["settlement_time"]], i + 2)
            values = [_parse_number(record[col_idx["price"]]),
                      _parse_number(record[col_idx["demand"]])]
            values += [_parse_number(record[col_idx[c]]) for c in extra_names]
            rows.append((ts, values))

    rows.sort(key=lambda r: r[0])
    timestamps = [r[0] for r in rows]
    for i in range(1, len(timestamps)):
        if timestamps[i] == timestamps[i - 1]:
            raise DataError(f"duplicate timestamp: {timestamps[i].isoformat()}")
    if len(timestamps) >= 3:
        step = timestamps[1] - timestamps[0]
        for i in range(2, len(timestamps)):
            if timestamps[i] - timestamps[i - 1] != step:
                raise DataError(
                    f"non-uniform interval spacing at row {i + 1} "
                    f"({timestamps[i].isoformat()})"
                )

    data = np.array([v for _, v in rows], dtype=np.float64)
    if data.size == 0:
        data = data.reshape(0, 2 + len(extra_names))
    extra = {
        name: data[:, 2 + j].copy() for j, name in enumerate(extra_names)
    }
    return RawSeries(
        timestamps=timestamps,
        price=data[:, 0].copy(),
        demand=data[:, 1].copy(),
        extra=extra,
    )


def write_raw_csv(series: RawSeries, path) -> None:
    """Write a RawSeries in the input CSV schema (UTF-8, LF)."""
    extra_names = [c for c in PREDISPATCH_COLUMNS if c in series.extra]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["settlement_time", "price", "demand"] + extra_names) + "\n")
        for i, ts in enumerate(series.timestamps):
            cells = [ts.isoformat(), repr(float(series.price[i])),
                     repr(float(series.demand[i]))]
            cells += [repr(float(series.extra[c][i])) for c in extra_names]
            fh.write(",".join(cells) + "\n")


def _lagged(series: np.ndarray, k: int) -> np.ndarray:
    out = np.full(series.shape, np.nan)
    out[k:] = series[:-k]
    return out


def _trailing_windows(series: np.ndarray, w: int) -> np.ndarray:
    """Window matrix where row t covers series[t-w .. t-1]; rows < w are NaN."""
    n = series.shape[0]
    out = np.full((n, w), np.nan)
    if n > w:
        out[w:] = sliding_window_view(series, w)[: n - w]
    return out


def _hour_fraction(ts: datetime) -> float:
    return ts.hour + ts.minute / 60.0 + ts.second / 3600.0


def build_features(raw: RawSeries) -> FeatureTable:
    """Build the engineered feature set for both targets.

    Lag and rolling-window columns use strictly trailing data (the
    current row is excluded) so no feature at row t can see the row-t
    target.  The first WARMUP rows are dropped.
    """
    n = len(raw)
    if n < MIN_RAW_ROWS:
        raise DataError(f"need at least {MIN_RAW_ROWS} rows, got {n}")

    names: list[str] = []
    cols: list[np.ndarray] = []

    series = {"price": raw.price, "demand": raw.demand}
    for tname, values in series.items():
        for k in LAGS:
            names.append(f"{tname}_lag_{k}")
            cols.append(_lagged(values, k))
    for tname, values in series.items():
        for w in ROLL_WINDOWS:
            windows = _trailing_windows(values, w)
            names.append(f"{tname}_roll_mean_{w}")
            cols.append(windows.mean(axis=1))
            names.append(f"{tname}_roll_std_{w}")
            cols.append(windows.std(axis=1, ddof=1))
            names.append(f"{tname}_roll_min_{w}")
            cols.append(windows.min(axis=1))

    hours = np.array([_hour_fraction(ts) for ts in raw.timestamps])
    dows = np.array([ts.weekday() for ts in raw.timestamps], dtype=np.float64)
    dom_phase = np.array(
        [(ts.day - 1) / calendar.monthrange(ts.year, ts.month)[1]
         for ts in raw.timestamps]
    )
    names += ["hour_sin", "hour_cos", "dow_sin", "dow_cos", "dom_sin", "dom_cos"]
    cols += [
        np.sin(2 * np.pi * hours / 24.0), np.cos(2 * np.pi * hours / 24.0),
        np.sin(2 * np.pi * dows / 7.0), np.cos(2 * np.pi * dows / 7.0),
        np.sin(2 * np.pi * dom_phase), np.cos(2 * np.pi * dom_phase),
    ]

    names.append("price_x_demand_lag1")
    cols.append(_lagged(raw.price, 1) * _lagged(raw.demand, 1))

    for tname, values in series.items():
        windows = _trailing_windows(values, STAT_WINDOW)
        names.append(f"{tname}_mean_{STAT_WINDOW}")
        cols.append(windows.mean(axis=1))
        names.append(f"{tname}_std_{STAT_WINDOW}")
        cols.append(windows.std(axis=1, ddof=1))

    for pname in PREDISPATCH_COLUMNS:
        if pname in raw.extra:
            names.append(pname)
            cols.append(raw.extra[pname].astype(np.float64))

    matrix = np.column_stack(cols)[WARMUP:]
    return FeatureTable(
        column_names=names,
        matrix=matrix,
        target_price=raw.price[WARMUP:].copy(),
        target_demand=raw.demand[WARMUP:].copy(),
        row_timestamps=list(raw.timestamps[WARMUP:]),
    )


def _forward_fill(column: np.ndarray) -> np.ndarray:
    out = column.copy()
    valid = ~np.isnan(out)
    if not valid.any():
        return out
    idx = np.where(valid, np.arange(out.size), -1)
    np.maximum.accumulate(idx, out=idx)
    filled = np.where(idx >= 0, out[np.maximum(idx, 0)], np.nan)
    return filled


def clean(table: FeatureTable) -> FeatureTable:
    """Replace infinities, forward-fill gaps, drop unfillable leading rows,
    then clip feature columns to mean +/- 3 sigma.  Targets are filled but
    never clipped."""
    matrix = table.matrix.copy()
    matrix[~np.isfinite(matrix)] = np.nan
    for j, name in enumerate(table.column_names):
        if np.isnan(matrix[:, j]).all():
            raise DataError(f"column entirely missing: {name}")
        matrix[:, j] = _forward_fill(matrix[:, j])

    tp = table.target_price.astype(np.float64).copy()
    td = table.target_demand.astype(np.float64).copy()
    tp[~np.isfinite(tp)] = np.nan
    td[~np.isfinite(td)] = np.nan
    if np.isnan(tp).all():
        raise DataError("column entirely missing: target_price")
    if np.isnan(td).all():
        raise DataError("column entirely missing: target_demand")
    tp = _forward_fill(tp)
    td = _forward_fill(td)

    keep = ~(np.isnan(matrix).any(axis=1) | np.isnan(tp) | np.isnan(td))
    matrix = matrix[keep]
    tp, td = tp[keep], td[keep]
    timestamps = [ts for ts, k in zip(table.row_timestamps, keep) if k]

    mu = matrix.mean(axis=0)
    sigma = matrix.std(axis=0)
    lo = mu - 3.0 * sigma
    hi = mu + 3.0 * sigma
    matrix = np.clip(matrix, lo, hi)

    return FeatureTable(
        column_names=list(table.column_names),
        matrix=matrix,
        target_price=tp,
        target_demand=td,
        row_timestamps=timestamps,
        dropped_columns=list(table.dropped_columns),
    )


def prune_correlated(table: FeatureTable, threshold: float = 0.95) -> FeatureTable:
    """Drop the higher-indexed column of any pair with |pearson| above
    ``threshold``; target columns are never dropped."""
    p = table.matrix.shape[1]
    kept: list[int] = []
    dropped: list[str] = []
    for j in range(p):
        redundant = False
        for i in kept:
            if abs(pearson(table.matrix[:, i], table.matrix[:, j])) > threshold:
                redundant = True
                break
        if redundant:
            dropped.append(table.column_names[j])
        else:
            kept.append(j)
    return FeatureTable(
        column_names=[table.column_names[j] for j in kept],
        matrix=table.matrix[:, kept].copy(),
        target_price=table.target_price.copy(),
        target_demand=table.target_demand.copy(),
        row_timestamps=list(table.row_timestamps),
        dropped_columns=table.dropped_columns + dropped,
    )


def split_point(n_rows: int, ratio: float) -> SplitIndices:
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"split ratio must be in (0, 1), got {ratio}")
    return SplitIndices(train_end=int(math.floor(ratio * n_rows)), ratio=ratio)


def chronological_split(
    table: FeatureTable, ratio: float = 0.85
) -> tuple[FeatureTable, FeatureTable]:
    """First floor(ratio * n) rows become the train set; no shuffling."""
    n = table.n_rows
    if n < 10:
        raise DataError(f"too few rows to split: {n}")
    cut = split_point(n, ratio).train_end
    return table.take_rows(0, cut), table.take_rows(cut, n)


def fit_minmax(train: FeatureTable) -> NormalizationParams:
    """Per-column min/max over training rows only (features and targets)."""
    if train.n_rows == 0:
        raise DataError("fit_minmax: empty training table")
    feature_ranges = {
        name: (float(train.matrix[:, j].min()), float(train.matrix[:, j].max()))
        for j, name in enumerate(train.column_names)
    }
    target_ranges = {
        "target_price": (float(train.target_price.min()), float(train.target_price.max())),
        "target_demand": (float(train.target_demand.min()), float(train.target_demand.max())),
    }
    return NormalizationParams(feature_ranges, target_ranges)


def _scale(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def apply_minmax(table: FeatureTable, params: NormalizationParams) -> FeatureTable:
    """Map columns to [0, 1] by the training range.  Out-of-range test
    values are deliberately not clipped so distribution shift stays visible."""
    matrix = np.empty_like(table.matrix)
    for j, name in enumerate(table.column_names):
        lo, hi = params.range_for(name)
        matrix[:, j] = _scale(table.matrix[:, j], lo, hi)
    plo, phi = params.target_ranges["target_price"]
    dlo, dhi = params.target_ranges["target_demand"]
    return FeatureTable(
        column_names=list(table.column_names),
        matrix=matrix,
        target_price=_scale(table.target_price, plo, phi),
        target_demand=_scale(table.target_demand, dlo, dhi),
        row_timestamps=list(table.row_timestamps),
        dropped_columns=list(table.dropped_columns),
    )


def invert_minmax(values, params: NormalizationParams, column: str) -> np.ndarray:
    """Exact algebraic inverse of apply_minmax for one column; constant
    columns invert to their train minimum."""
    lo, hi = params.range_for(column)
    values = np.asarray(values, dtype=np.float64)
    if hi == lo:
        return np.full_like(values, lo)
    return values * (hi - lo) + lo


def gen_synthetic(n: int, seed: int) -> RawSeries:
    """Deterministic synthetic market series at 30-minute spacing.

    Demand: positive baseline + daily and weekly sinusoids + AR(1) noise.
    Price: affine in demand with a scarcity kink above high demand, plus
    AR(1) noise and heavy-tailed spikes with occasional negative
    intervals.  Predispatch columns are the targets plus seeded noise
    (price forecasts noisier than demand forecasts).
    """
    if n < 200:
        raise ConfigError(f"gen_synthetic: need n >= 200, got {n}")
    rng = Rng(seed)
    g_demand = rng.derive("demand").generator
    g_price = rng.derive("price").generator
    g_pred = rng.derive("predispatch").generator

    start = datetime(2023, 1, 1, 0, 0)
    from datetime import timedelta

    timestamps = [start + timedelta(minutes=30 * i) for i in range(n)]
    t_hours = np.arange(n) * 0.5

    daily = 320.0 * np.sin(2 * np.pi * t_hours / 24.0 - 1.1)
    weekly = 130.0 * np.sin(2 * np.pi * t_hours / (24.0 * 7.0) + 0.4)
    shocks = g_demand.normal(0.0, 40.0, n)
    ar = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc = 0.9 * acc + shocks[i]
        ar[i] = acc
    demand = np.maximum(1250.0 + daily + weekly + ar, 50.0)

    pshocks = g_price.normal(0.0, 12.0, n)
    par = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc = 0.7 * acc + pshocks[i]
        par[i] = acc
    price = 0.06 * demand - 38.0 + par
    # scarcity kink: prices rise sharply once demand passes the baseline
    price = price + 0.15 * np.maximum(demand - 1500.0, 0.0)
    spike_up = g_price.uniform(0.0, 1.0, n) < 0.010
    spike_dn = g_price.uniform(0.0, 1.0, n) < 0.020
    price = price + spike_up * g_price.exponential(180.0, n)
    price = price - spike_dn * g_price.exponential(70.0, n)

    extra = {
        "pred_price_avg32": price + g_pred.normal(0.0, 8.0, n),
        "pred_price_best32": price + g_pred.normal(0.0, 4.0, n),
        "pred_demand_avg32": demand + g_pred.normal(0.0, 22.0, n),
        "pred_demand_best32": demand + g_pred.normal(0.0, 7.0, n),
    }
    return RawSeries(timestamps=timestamps, price=price, demand=demand, extra=extra)


def export_feature_table(table: FeatureTable, path) -> None:
    """Write the feature table as CSV: row_timestamp, features, targets."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = ["row_timestamp"] + table.column_names + ["target_price", "target_demand"]
        fh.write(",".join(header) + "\n")
        for i, ts in enumerate(table.row_timestamps):
            cells = [ts.isoformat()]
            cells += [repr(float(v)) for v in table.matrix[i]]
            cells += [repr(float(table.target_price[i])), repr(float(table.target_demand[i]))]
            fh.write(",".join(cells) + "\n")
