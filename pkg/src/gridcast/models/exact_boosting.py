"""Gradient boosted regression trees with exact greedy split search.

Depth-wise trees are fit to residuals under squared loss; leaves output
residual means and the ensemble update is F_m = F_{m-1} + lr * h_m.
Split ties are broken by lowest feature index, then lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .base import Regressor

__all__ = ["GbrtConfig", "GbrtModel", "best_split_exact", "build_tree",
           "predict_tree"]


def best_split_exact(X, g, rows, order=None):
    """Exact SSE-minimizing split over ``rows``.

    Returns (feature, threshold, gain, left_rows, right_rows) or None if no
    split separates the rows.  ``gain`` is the SSE reduction versus the
    unsplit node.  ``order`` is an optional list of per-feature presorted
    row orders over the full matrix, used to avoid re-sorting.
    """
    n = rows.shape[0]
    if n < 2:
        return None
    best = None
    in_node = None
    if order is not None:
        in_node = np.zeros(X.shape[0], dtype=bool)
        in_node[rows] = True
    for j in range(X.shape[1]):
        if order is not None:
            oj = order[j]
            sorted_rows = oj[in_node[oj]]
        else:
            sorted_rows = rows[np.argsort(X[rows, j], kind="stable")]
        xs = X[sorted_rows, j]
        gs = g[sorted_rows]
        boundaries = np.nonzero(xs[:-1] < xs[1:])[0]
        if boundaries.size == 0:
            continue
        prefix = np.cumsum(gs)
        total = prefix[-1]
        n_left = boundaries + 1.0
        g_left = prefix[boundaries]
        gains = (
            g_left * g_left / n_left
            + (total - g_left) ** 2 / (n - n_left)
            - total * total / n
        )
        k = int(np.argmax(gains))  # first max -> lowest threshold
        gain = float(gains[k])
        if best is None or gain > best[2]:
            b = boundaries[k]
            threshold = 0.5 * (xs[b] + xs[b + 1])
            best = (j, float(threshold), gain, sorted_rows[: b + 1], sorted_rows[b + 1:])
    return best


def build_tree(X, g, depth: int, order=None) -> dict:
    """Depth-wise greedy regression tree on gradients ``g``."""
    def grow(rows, level):
        if level == depth or rows.shape[0] < 2:
            return {"value": float(g[rows].mean())}
        split = best_split_exact(X, g, rows, order)
        if split is None or split[2] <= 0.0:
            return {"value": float(g[rows].mean())}
        j, threshold, _, left, right = split
        return {
            "feature": j,
            "threshold": threshold,
            "left": grow(left, level + 1),
            "right": grow(right, level + 1),
        }

    return grow(np.arange(X.shape[0]), 0)


def predict_tree(tree: dict, X) -> np.ndarray:
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
class GbrtConfig:
    n_trees: int = 300
    depth: int = 4
    learning_rate: float = 0.1


class GbrtModel(Regressor):
    kind = "gbrt"

    def __init__(self, config: GbrtConfig | None = None, seed: int = 0):
        super().__init__(config or GbrtConfig(), seed)
        self.base_prediction = 0.0
        self.trees: list[dict] = []
        self.train_mse: list[float] = []

    def _fit(self, X, y, rng):
        cfg = self.config
        if cfg.depth < 1:
            raise ConfigError("gbrt: depth must be >= 1")
        if not 0.0 <= cfg.learning_rate <= 1.0:
            raise ConfigError("gbrt: learning_rate must be in [0, 1]")
        self.base_prediction = float(y.mean())
        order = [np.argsort(X[:, j], kind="stable") for j in range(X.shape[1])]
        F = np.full(y.shape[0], self.base_prediction)
        self.trees = []
        self.train_mse = [float(((y - F) ** 2).mean())]
        for _ in range(cfg.n_trees):
            residual = y - F
            tree = build_tree(X, residual, cfg.depth, order)
            self.trees.append(tree)
            F = F + cfg.learning_rate * predict_tree(tree, X)
            self.train_mse.append(float(((y - F) ** 2).mean()))

    def _predict(self, X):
        F = np.full(X.shape[0], self.base_prediction)
        for tree in self.trees:
            F += self.config.learning_rate * predict_tree(tree, X)
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
