"""Regression metrics (MAE, MAPE, MSE, R^2) and threshold-accuracy
measures, computed on original-unit values.

Relative-error denominators use |y| so negative prices are handled, and
pairs with |y| < NEAR_ZERO are excluded from MAPE and accuracy (the
exclusion count is reported).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError

__all__ = ["MetricsRecord", "compute_metrics", "accuracy_within", "NEAR_ZERO"]

NEAR_ZERO = 0.01  # original units; below this MAPE/accuracy pairs are excluded


@dataclass
class MetricsRecord:
    mse: float
    mae: float
    r2: float
    mape: float
    n_evaluated: int
    n_excluded: int


def _paired(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(actual, dtype=np.float64)
    yhat = np.asarray(predicted, dtype=np.float64)
    if y.shape != yhat.shape:
        raise NumericError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size < 2:
        raise NumericError("need at least 2 evaluated pairs")
    return y, yhat


def compute_metrics(actual, predicted) -> MetricsRecord:
    """MAE, MSE, R^2 over all pairs; MAPE over pairs with |y| >= NEAR_ZERO.

    R^2 uses the mean of actuals; when actuals have zero variance it is 1
    for a perfect fit and undefined (error) otherwise.
    """
    y, yhat = _paired(actual, predicted)
    resid = y - yhat
    mae = float(np.abs(resid).mean())
    mse = float((resid * resid).mean())

    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid * resid).sum())
    if ss_tot == 0.0:
        if ss_res == 0.0:
            r2 = 1.0
        else:
            raise NumericError("undefined R^2: zero variance in actuals")
    else:
        r2 = 1.0 - ss_res / ss_tot

    usable = np.abs(y) >= NEAR_ZERO
    n_excluded = int((~usable).sum())
    n_evaluated = int(usable.sum())
    if n_evaluated == 0:
        raise NumericError("MAPE: all pairs excluded by near-zero cutoff")
    mape = float(100.0 * (np.abs(resid[usable]) / np.abs(y[usable])).mean())

    return MetricsRecord(
        mse=mse, mae=mae, r2=r2, mape=mape,
        n_evaluated=n_evaluated, n_excluded=n_excluded,
    )


def accuracy_within(actual, predicted, threshold: float) -> float:
    """Percent of pairs with relative error |y - yhat| / |y| <= threshold,
    over pairs passing the near-zero cutoff."""
    if threshold <= 0:
        raise NumericError(f"threshold must be > 0, got {threshold}")
    y = np.asarray(actual, dtype=np.float64)
    yhat = np.asarray(predicted, dtype=np.float64)
    if y.shape != yhat.shape:
        raise NumericError(f"length mismatch: {y.shape} vs {yhat.shape}")
    usable = np.abs(y) >= NEAR_ZERO
    n = int(usable.sum())
    if n == 0:
        raise NumericError("accuracy: all pairs excluded by near-zero cutoff")
    rel = np.abs(y[usable] - yhat[usable]) / np.abs(y[usable])
    return float(100.0 * (rel <= threshold).sum() / n)
