"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

from datetime import datetime, timedelta

import numpy as np
import pytest

from gridcast import dataset as ds

# Verdict lines recorded by the acceptance suite; echoed after the run so
# they stay visible even though pytest captures passing-test stdout.
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


def make_raw(n=120, seed=0, with_extra=True):
    """Small deterministic RawSeries for pipeline tests."""
    rng = np.random.default_rng(seed)
    start = datetime(2023, 3, 1, 0, 0)
    timestamps = [start + timedelta(minutes=30 * i) for i in range(n)]
    t = np.arange(n) * 0.5
    demand = 1000.0 + 200.0 * np.sin(2 * np.pi * t / 24.0) + rng.normal(0, 25, n)
    price = 0.05 * demand - 20.0 + rng.normal(0, 8, n)
    extra = {}
    if with_extra:
        extra = {
            "pred_price_avg32": price + rng.normal(0, 5, n),
            "pred_price_best32": price + rng.normal(0, 3, n),
            "pred_demand_avg32": demand + rng.normal(0, 10, n),
            "pred_demand_best32": demand + rng.normal(0, 4, n),
        }
    return ds.RawSeries(timestamps=timestamps, price=price, demand=demand,
                        extra=extra)


def make_table(n=80, p=4, seed=0):
    """Bare FeatureTable with random features for model-level tests."""
    rng = np.random.default_rng(seed)
    start = datetime(2023, 3, 1, 0, 0)
    return ds.FeatureTable(
        column_names=[f"f{j}" for j in range(p)],
        matrix=rng.uniform(0, 1, (n, p)),
        target_price=rng.uniform(0, 1, n),
        target_demand=rng.uniform(0, 1, n),
        row_timestamps=[start + timedelta(minutes=30 * i) for i in range(n)],
    )


def make_regression(n=60, p=3, seed=0, noise=0.05):
    """Random (X, y) with a learnable smooth signal, normalized-ish."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, p))
    y = (np.sin(3 * X[:, 0]) + 0.5 * X[:, 1 % p]
         + noise * rng.normal(0, 1, n))
    return X, y


@pytest.fixture
def raw_series():
    return make_raw()


@pytest.fixture
def feature_table(raw_series):
    return ds.build_features(raw_series)
