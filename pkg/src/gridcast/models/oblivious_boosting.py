"""Oblivious-tree boosting with ordered residuals.

Every tree is symmetric: one (feature, threshold) per depth level, chosen
to minimize total SSE across all leaves of that level.  Ordered boosting
is approximated with one incremental supporting model per random
permutation: the residual used to update example i comes from leaf
statistics accumulated only over examples preceding i in the permutation.
The final prediction averages the permutation models, whose stored leaf
values are full-data means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .base import Regressor
from .histogram_boosting import bin_matrix, fit_bin_edges

__all__ = ["CatBoostConfig", "CatBoostModel"]


def _best_level_split(codes, edges, g, leaf_idx, n_leaves, reg_lambda):
    """Best single (feature, threshold) applied uniformly to every leaf."""
    best = None
    n = codes.shape[0]
    counts = np.ones(n)
    for j in range(codes.shape[1]):
        e = edges[j]
        if e.size == 0:
            continue
        nb = e.size + 1
        combined = leaf_idx * nb + codes[:, j]
        size = n_leaves * nb
        hist_g = np.bincount(combined, weights=g, minlength=size).reshape(n_leaves, nb)
        hist_n = np.bincount(combined, weights=counts, minlength=size).reshape(n_leaves, nb)
        gl = np.cumsum(hist_g, axis=1)[:, :-1]
        nl = np.cumsum(hist_n, axis=1)[:, :-1]
        gt = hist_g.sum(axis=1, keepdims=True)
        nt = hist_n.sum(axis=1, keepdims=True)
        gr = gt - gl
        nr = nt - nl
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.where(nl + reg_lambda > 0, gl * gl / (nl + reg_lambda), 0.0)
            right = np.where(nr + reg_lambda > 0, gr * gr / (nr + reg_lambda), 0.0)
            parent = np.where(nt + reg_lambda > 0, gt * gt / (nt + reg_lambda), 0.0)
        gains = (left + right - parent).sum(axis=0)
        # A candidate must actually separate rows somewhere.
        separates = (nl.sum(axis=0) > 0) & (nr.sum(axis=0) > 0)
        if not separates.any():
            continue
        gains[~separates] = -np.inf
        k = int(np.argmax(gains))
        gain = float(gains[k])
        if best is None or gain > best[2]:
            best = (j, float(e[k]), gain, k)
    return best


def _ordered_leaf_updates(g, leaf_idx, perm, reg_lambda):
    """Per-example leaf estimate using only examples earlier in ``perm``."""
    n = g.shape[0]
    pos = np.empty(n, dtype=np.int64)
    pos[perm] = np.arange(n)
    order = np.lexsort((pos, leaf_idx))
    g_sorted = g[order]
    leaf_sorted = leaf_idx[order]
    csum = np.cumsum(g_sorted)
    starts = np.r_[True, leaf_sorted[1:] != leaf_sorted[:-1]]
    start_pos = np.nonzero(starts)[0]
    group_of = np.cumsum(starts) - 1
    group_start = start_pos[group_of]
    prev_csum = np.r_[0.0, csum[:-1]]
    prefix_sum = prev_csum - prev_csum[group_start]  # earlier-in-leaf sum
    prefix_cnt = (np.arange(n) - group_start).astype(np.float64)
    denom = prefix_cnt + reg_lambda
    values_sorted = np.where(denom > 0, prefix_sum / np.where(denom > 0, denom, 1.0), 0.0)
    out = np.empty(n)
    out[order] = values_sorted
    return out


@dataclass
class CatBoostConfig:
    n_trees: int = 300
    depth: int = 6
    learning_rate: float = 0.1
    permutations: int = 4
    reg_lambda: float = 1.0
    ordered: bool = True
    bins: int = 255


class CatBoostModel(Regressor):
    kind = "catboost"

    def __init__(self, config: CatBoostConfig | None = None, seed: int = 0):
        super().__init__(config or CatBoostConfig(), seed)
        self.base_prediction = 0.0
        # One tree list per permutation model; each tree is
        # {"splits": [(feature, threshold), ...], "values": leaf array}.
        self.forests: list[list[dict]] = []

    def _fit(self, X, y, rng):
        cfg = self.config
        if cfg.permutations < 1:
            raise ConfigError("catboost: permutations must be >= 1")
        if cfg.depth < 1:
            raise ConfigError("catboost: depth must be >= 1")
        n = y.shape[0]
        edges = [fit_bin_edges(X[:, j], cfg.bins) for j in range(X.shape[1])]
        codes = bin_matrix(X, edges)
        self.base_prediction = float(y.mean())
        self.forests = []
        for p in range(cfg.permutations):
            perm_rng = rng.derive(f"permutation-{p}")
            perm = perm_rng.permutation(n)
            trees = []
            F = np.full(n, self.base_prediction)
            for _ in range(cfg.n_trees):
                g = y - F
                leaf_idx = np.zeros(n, dtype=np.int64)
                splits = []
                n_leaves = 1
                for _level in range(cfg.depth):
                    found = _best_level_split(
                        codes, edges, g, leaf_idx, n_leaves, cfg.reg_lambda
                    )
                    if found is None or found[2] <= 0.0:
                        break
                    j, threshold, _, k = found
                    splits.append((j, threshold))
                    leaf_idx = leaf_idx * 2 + (codes[:, j] > k)
                    n_leaves *= 2
                sums = np.bincount(leaf_idx, weights=g, minlength=n_leaves)
                cnts = np.bincount(leaf_idx, minlength=n_leaves).astype(np.float64)
                denom = cnts + cfg.reg_lambda
                values = np.where(denom > 0, sums / np.where(denom > 0, denom, 1.0), 0.0)
                trees.append({"splits": splits, "values": values})
                if cfg.ordered:
                    update = _ordered_leaf_updates(g, leaf_idx, perm, cfg.reg_lambda)
                else:
                    update = values[leaf_idx]
                F = F + cfg.learning_rate * update
            self.forests.append(trees)

    def _predict_forest(self, trees, X):
        F = np.full(X.shape[0], self.base_prediction)
        for tree in trees:
            leaf_idx = np.zeros(X.shape[0], dtype=np.int64)
            for j, threshold in tree["splits"]:
                leaf_idx = leaf_idx * 2 + (X[:, j] > threshold)
            F += self.config.learning_rate * np.asarray(tree["values"])[leaf_idx]
        return F

    def _predict(self, X):
        preds = [self._predict_forest(trees, X) for trees in self.forests]
        return np.mean(preds, axis=0)

    def get_state(self) -> dict:
        return {
            "base_prediction": self.base_prediction,
            "forests": [
                [
                    {
                        "splits": [[int(j), float(t)] for j, t in tree["splits"]],
                        "values": np.asarray(tree["values"]),
                    }
                    for tree in trees
                ]
                for trees in self.forests
            ],
        }

    def set_state(self, state: dict) -> None:
        self.base_prediction = state["base_prediction"]
        self.forests = [
            [
                {
                    "splits": [(int(j), float(t)) for j, t in tree["splits"]],
                    "values": np.asarray(tree["values"]),
                }
                for tree in trees
            ]
            for trees in state["forests"]
        ]
