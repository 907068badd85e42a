"""Histogram-based boosting with leaf-wise growth and gradient-based
one-side sampling (GOSS).

Bin edges are fitted once on the training data (equal-frequency; when a
feature has no more distinct values than bins, edges fall on midpoints
between consecutive distinct values so the histogram split coincides
with the exact greedy split).  Each boosting round keeps the top
``goss_a`` fraction of rows by |gradient|, samples ``goss_b`` of the
rest, and reweights the sampled rows by (1 - a) / b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .base import Regressor

__all__ = ["LightGbmConfig", "LightGbmModel", "fit_bin_edges", "bin_matrix",
           "best_split_histogram", "goss_select"]


def fit_bin_edges(column: np.ndarray, bins: int) -> np.ndarray:
    """Bin boundaries for one feature.  A value x falls in bin
    searchsorted(edges, x, side='left'), i.e. bin > b  <=>  x > edges[b]."""
    uniq = np.unique(column)
    if uniq.size <= 1:
        return np.empty(0)
    if uniq.size <= bins:
        return 0.5 * (uniq[:-1] + uniq[1:])
    qs = np.quantile(column, np.arange(1, bins) / bins)
    return np.unique(qs)


def bin_matrix(X: np.ndarray, edges: list[np.ndarray]) -> np.ndarray:
    codes = np.empty(X.shape, dtype=np.int32)
    for j, e in enumerate(edges):
        codes[:, j] = np.searchsorted(e, X[:, j], side="left")
    return codes


def best_split_histogram(codes, edges, g, w, rows, reg_lambda=0.0):
    """Best histogram split over ``rows`` with per-row weights ``w``.

    Weighted counts act as the hessian under squared loss.  Returns
    (feature, threshold, gain, left_rows, right_rows) or None.  Ties are
    broken by lowest feature index then lowest threshold.
    """
    if rows.shape[0] < 2:
        return None
    best = None
    g_rows = g[rows]
    w_rows = w[rows]
    total_g = g_rows.sum()
    total_w = w_rows.sum()
    parent = total_g * total_g / (total_w + reg_lambda)
    for j in range(codes.shape[1]):
        e = edges[j]
        if e.size == 0:
            continue
        c = codes[rows, j]
        nb = e.size + 1
        hist_g = np.bincount(c, weights=g_rows, minlength=nb)
        hist_w = np.bincount(c, weights=w_rows, minlength=nb)
        gl = np.cumsum(hist_g)[:-1]
        wl = np.cumsum(hist_w)[:-1]
        wr = total_w - wl
        valid = (wl > 0) & (wr > 0)
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = (
                gl * gl / (wl + reg_lambda)
                + (total_g - gl) ** 2 / (wr + reg_lambda)
                - parent
            )
        gains[~valid] = -np.inf
        k = int(np.argmax(gains))
        gain = float(gains[k])
        if best is None or gain > best[2]:
            best = (j, float(e[k]), gain, k)
    if best is None:
        return None
    j, threshold, gain, k = best
    go_left = codes[rows, j] <= k
    return j, threshold, gain, rows[go_left], rows[~go_left]


def goss_select(gradients: np.ndarray, a: float, b: float, rng):
    """Row selection and weights for one GOSS round.

    With a = 1, b = 0 all rows are kept with unit weight and no random
    draws are consumed, so the run is bit-identical to plain boosting.
    Returned indices are sorted ascending for a canonical row order.
    """
    n = gradients.shape[0]
    if not 0.0 < a <= 1.0 or b < 0.0 or a + b > 1.0:
        raise ConfigError(f"invalid GOSS fractions: a={a}, b={b}")
    n_top = int(math.ceil(a * n))
    if n_top >= n:
        return np.arange(n), np.ones(n)
    by_magnitude = np.argsort(-np.abs(gradients), kind="stable")
    top = by_magnitude[:n_top]
    rest = by_magnitude[n_top:]
    n_sample = int(math.ceil(b * rest.shape[0]))
    if n_sample == 0:
        idx = np.sort(top)
        return idx, np.ones(idx.shape[0])
    sampled = rest[rng.permutation(rest.shape[0])[:n_sample]]
    idx = np.concatenate([top, sampled])
    weights = np.concatenate(
        [np.ones(top.shape[0]), np.full(n_sample, (1.0 - a) / b)]
    )
    srt = np.argsort(idx, kind="stable")
    return idx[srt], weights[srt]


def _grow_leafwise(codes, edges, g, w, max_leaves, reg_lambda):
    """Leaf-wise tree growth: repeatedly split the leaf with maximum gain."""
    all_rows = np.arange(codes.shape[0])

    def leaf_value(rows):
        wsum = w[rows].sum()
        return float(g[rows].sum() / (wsum + reg_lambda)) if wsum + reg_lambda > 0 else 0.0

    root = {"rows": all_rows}
    leaves = [root]
    candidates = {id(root): best_split_histogram(codes, edges, g, w, all_rows, reg_lambda)}
    while len(leaves) < max_leaves:
        best_leaf, best_split = None, None
        for leaf in leaves:
            split = candidates[id(leaf)]
            if split is None:
                continue
            if best_split is None or split[2] > best_split[2]:
                best_leaf, best_split = leaf, split
        if best_split is None or best_split[2] <= 0.0:
            break
        j, threshold, _, left_rows, right_rows = best_split
        left = {"rows": left_rows}
        right = {"rows": right_rows}
        best_leaf["feature"] = j
        best_leaf["threshold"] = threshold
        best_leaf["left"] = left
        best_leaf["right"] = right
        leaves.remove(best_leaf)
        del candidates[id(best_leaf)]
        leaves += [left, right]
        candidates[id(left)] = best_split_histogram(codes, edges, g, w, left_rows, reg_lambda)
        candidates[id(right)] = best_split_histogram(codes, edges, g, w, right_rows, reg_lambda)

    def finalize(node):
        if "feature" in node:
            return {
                "feature": node["feature"],
                "threshold": node["threshold"],
                "left": finalize(node["left"]),
                "right": finalize(node["right"]),
            }
        return {"value": leaf_value(node["rows"])}

    return finalize(root)


def _predict_tree(tree, X):
    out = np.empty(X.shape[0])

    def walk(node, rows):
        if "value" in node:
            out[rows] = node["value"]
            return
        go_left = X[rows, node["feature"]] <= node["threshold"]
        walk(node["left"], rows[go_left])
        walk(node["right"], rows[~go_left])

    walk(tree, np.arange(X.shape[0]))
    return out


@dataclass
class LightGbmConfig:
    n_trees: int = 300
    max_leaves: int = 31
    learning_rate: float = 0.1
    bins: int = 255
    goss_a: float = 0.2
    goss_b: float = 0.1
    reg_lambda: float = 0.0


class LightGbmModel(Regressor):
    kind = "lightgbm"

    def __init__(self, config: LightGbmConfig | None = None, seed: int = 0):
        super().__init__(config or LightGbmConfig(), seed)
        self.base_prediction = 0.0
        self.trees: list[dict] = []
        self.train_mse: list[float] = []

    def _fit(self, X, y, rng):
        cfg = self.config
        if cfg.bins < 2:
            raise ConfigError("lightgbm: bins must be >= 2")
        if not 0.0 < cfg.goss_a <= 1.0 or cfg.goss_b < 0.0 or cfg.goss_a + cfg.goss_b > 1.0:
            raise ConfigError(
                f"lightgbm: invalid GOSS fractions a={cfg.goss_a}, b={cfg.goss_b}"
            )
        sample_rng = rng.derive("goss")
        self.edges = [fit_bin_edges(X[:, j], cfg.bins) for j in range(X.shape[1])]
        codes = bin_matrix(X, self.edges)
        self.base_prediction = float(y.mean())
        F = np.full(y.shape[0], self.base_prediction)
        self.trees = []
        self.train_mse = [float(((y - F) ** 2).mean())]
        for _ in range(cfg.n_trees):
            residual = y - F
            idx, w_sel = goss_select(residual, cfg.goss_a, cfg.goss_b, sample_rng)
            weights = np.zeros(y.shape[0])
            weights[idx] = w_sel
            tree = self._fit_tree(codes, residual, weights, idx)
            self.trees.append(tree)
            F = F + cfg.learning_rate * _predict_tree(tree, X)
            self.train_mse.append(float(((y - F) ** 2).mean()))

    def _fit_tree(self, codes, residual, weights, idx):
        g = residual * weights
        sub_codes = codes[idx]
        sub_g = g[idx]
        sub_w = weights[idx]
        return _grow_leafwise(
            sub_codes, self.edges, sub_g, sub_w,
            self.config.max_leaves, self.config.reg_lambda,
        )

    def _predict(self, X):
        F = np.full(X.shape[0], self.base_prediction)
        for tree in self.trees:
            F += self.config.learning_rate * _predict_tree(tree, X)
        return F

    def get_state(self) -> dict:
        return {
            "base_prediction": self.base_prediction,
            "trees": self.trees,
            "train_mse": self.train_mse,
        }

    def set_state(self, state: dict) -> None:
        self.base_prediction = state["base_prediction"]
        self.trees = state["trees"]
        self.train_mse = state["train_mse"]
