"""Benchmark framework for short-term electricity price and demand
forecasting: shared data pipeline, six from-scratch regressors, and a
metric/report harness."""

__version__ = "0.1.0"
