"""Epsilon-insensitive support vector regression solved by SMO-style
pairwise coordinate optimization on the dual.

The dual is handled in the doubled variable space z = (a, a*) with signs
s = (+1, -1), keeping sum(a - a*) = 0 throughout.  Pair selection is
maximal-violating-pair; convergence is declared when the violation gap
drops below ``tol``.  Non-convergence within ``max_passes`` pair updates
returns the best iterate with ``converged`` set to False.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .base import Regressor

__all__ = ["SvrConfig", "SvrModel", "kernel_matrix", "dual_objective"]


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (
            (A * A).sum(axis=1)[:, None]
            + (B * B).sum(axis=1)[None, :]
            - 2.0 * (A @ B.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-gamma * sq)
    raise ConfigError(f"unknown kernel: {kernel}")


def dual_objective(beta: np.ndarray, K: np.ndarray, y: np.ndarray, epsilon: float) -> float:
    """Dual objective D(beta) = -1/2 b'Kb - eps*sum|b| + y'b (maximized)."""
    return float(-0.5 * beta @ (K @ beta) - epsilon * np.abs(beta).sum() + y @ beta)


@dataclass
class SvrConfig:
    kernel: str = "rbf"
    c: float = 10.0
    epsilon: float = 0.01
    gamma: float | None = None  # None -> 1 / n_features
    tol: float = 1e-6
    max_passes: int = 200_000


class SvrModel(Regressor):
    kind = "svr"

    def __init__(self, config: SvrConfig | None = None, seed: int = 0):
        super().__init__(config or SvrConfig(), seed)
        self.beta = np.empty(0)
        self.bias = 0.0
        self.support_vectors = np.empty((0, 0))
        self.support_beta = np.empty(0)
        self.converged = False
        self.gamma_ = 1.0

    def _fit(self, X, y, rng):
        cfg = self.config
        if cfg.c <= 0:
            raise ConfigError("svr: C must be > 0")
        if cfg.epsilon < 0:
            raise ConfigError("svr: epsilon must be >= 0")
        n = y.shape[0]
        self.gamma_ = cfg.gamma if cfg.gamma is not None else 1.0 / max(1, X.shape[1])
        K = kernel_matrix(X, X, cfg.kernel, self.gamma_)
        C, eps, tol = cfg.c, cfg.epsilon, cfg.tol

        z = np.zeros(2 * n)
        s = np.concatenate([np.ones(n), -np.ones(n)])
        point = np.concatenate([np.arange(n), np.arange(n)])
        Kbeta = np.zeros(n)
        y2 = np.concatenate([y, y])

        self.converged = False
        for _ in range(cfg.max_passes):
            G = s * Kbeta[point] + eps - s * y2
            vals = -s * G
            up = ((s > 0) & (z < C)) | ((s < 0) & (z > 0))
            low = ((s > 0) & (z > 0)) | ((s < 0) & (z < C))
            up_vals = np.where(up, vals, -np.inf)
            low_vals = np.where(low, vals, np.inf)
            i = int(np.argmax(up_vals))
            j = int(np.argmin(low_vals))
            gap = up_vals[i] - low_vals[j]
            if gap < tol:
                self.converged = True
                break

            pi, pj = point[i], point[j]
            sigma = s[i] * s[j]
            quad = K[pi, pi] + K[pj, pj] - 2.0 * K[pi, pj]
            lin = G[i] - sigma * G[j]
            # Feasible range for the change d in z[i].
            lo = -z[i]
            hi = C - z[i]
            if sigma > 0:
                lo = max(lo, z[j] - C)
                hi = min(hi, z[j])
            else:
                lo = max(lo, -z[j])
                hi = min(hi, C - z[j])
            if quad > 1e-12:
                d = -lin / quad
            else:
                d = lo if lin > 0 else hi
            d = min(max(d, lo), hi)
            if d == 0.0:
                # Numerically stuck pair; treat as converged at this gap.
                self.converged = gap < max(tol, 1e-8)
                break
            z[i] += d
            z[j] -= sigma * d
            delta_beta = s[i] * d
            if pi == pj:
                continue  # a and a* of the same point moved together; beta unchanged
            Kbeta += delta_beta * (K[:, pi] - K[:, pj])

        self.raw_multipliers = z.copy()  # (a, a*) as optimized, for KKT checks
        beta = z[:n] - z[n:]
        self.beta = beta
        Kbeta = K @ beta
        self.bias = self._compute_bias(beta, Kbeta, y, C, eps)
        self.dual_objective = dual_objective(beta, K, y, eps)

        sv = np.abs(beta) > 0
        self.support_vectors = X[sv].copy()
        self.support_beta = beta[sv].copy()

    def _compute_bias(self, beta, Kbeta, y, C, eps) -> float:
        margin = 1e-10 * C
        free_lower = (beta > margin) & (beta < C - margin)    # 0 < a < C
        free_upper = (beta < -margin) & (beta > -C + margin)  # 0 < a* < C
        estimates = []
        if free_lower.any():
            estimates.append(y[free_lower] - Kbeta[free_lower] - eps)
        if free_upper.any():
            estimates.append(y[free_upper] - Kbeta[free_upper] + eps)
        if estimates:
            return float(np.concatenate(estimates).mean())
        if not (np.abs(beta) > margin).any():
            return float(y.mean())
        # Midpoint of the feasible-bias interval from the KKT inequalities:
        # e - eps <= b wherever a_i can still grow, b <= e + eps wherever
        # a_i^* can still grow.
        up_vals = []
        low_vals = []
        for i in range(y.shape[0]):
            e = y[i] - Kbeta[i]
            if beta[i] < C - margin:    # a_i can grow
                up_vals.append(e - eps)
            if beta[i] < -margin:       # a_i^* > 0, can shrink
                up_vals.append(e + eps)
            if beta[i] > -C + margin:   # a_i^* can grow
                low_vals.append(e + eps)
            if beta[i] > margin:        # a_i > 0, can shrink
                low_vals.append(e - eps)
        lo = max(up_vals) if up_vals else -np.inf
        hi = min(low_vals) if low_vals else np.inf
        if np.isfinite(lo) and np.isfinite(hi):
            return float(0.5 * (lo + hi))
        return float(y.mean())

    def _predict(self, X):
        if self.support_beta.size == 0:
            return np.full(X.shape[0], self.bias)
        Kx = kernel_matrix(X, self.support_vectors, self.config.kernel, self.gamma_)
        return Kx @ self.support_beta + self.bias

    def get_state(self) -> dict:
        return {
            "beta": self.beta,
            "bias": self.bias,
            "support_vectors": self.support_vectors,
            "support_beta": self.support_beta,
            "converged": self.converged,
            "gamma": self.gamma_,
        }

    def set_state(self, state: dict) -> None:
        self.beta = np.asarray(state["beta"])
        self.bias = float(state["bias"])
        self.support_vectors = np.asarray(state["support_vectors"])
        self.support_beta = np.asarray(state["support_beta"])
        self.converged = bool(state["converged"])
        self.gamma_ = float(state["gamma"])
