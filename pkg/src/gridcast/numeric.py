"""Deterministic numeric kernel: seeded RNG, softmax, Pearson correlation,
and a central finite-difference gradient used as a test oracle.

All arithmetic is 64-bit; gradient checks at 1e-4 tolerance are not
feasible in 32-bit.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import NumericError

__all__ = ["Rng", "softmax", "pearson", "finite_difference_gradient"]


class Rng:
    """Seeded random generator with order-independent child derivation.

    The same seed always yields the same draw stream.  Children created
    via :meth:`derive` depend only on (seed, label), never on how many
    draws were taken from the parent, so concurrent consumers stay
    deterministic.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def derive(self, label: str) -> "Rng":
        """Return an independent child generator keyed by ``label``."""
        h = hashlib.blake2b(
            label.encode("utf-8"),
            key=self.seed.to_bytes(8, "little"),
            digest_size=8,
        )
        return Rng(int.from_bytes(h.digest(), "little"))

    # Thin delegates so callers rarely need .generator directly.
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)


def softmax(scores) -> np.ndarray:
    """Numerically safe softmax (max-subtraction); preserves the argmax."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise NumericError("softmax: empty input")
    if np.isnan(s).any():
        raise NumericError("softmax: NaN in input")
    shifted = s - s.max()
    e = np.exp(shifted)
    return e / e.sum()


def pearson(x, y) -> float:
    """Pearson correlation; returns 0.0 when either side has zero variance
    so correlation-based pruning never propagates NaN."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise NumericError(f"pearson: length mismatch {x.shape} vs {y.shape}")
    if x.size < 2:
        raise NumericError("pearson: need at least 2 samples")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = np.sqrt((xd * xd).sum())
    sy = np.sqrt((yd * yd).sum())
    if sx == 0.0 or sy == 0.0:
        return 0.0
    r = float((xd * yd).sum() / (sx * sy))
    return max(-1.0, min(1.0, r))


def finite_difference_gradient(f, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at parameter vector ``x``."""
    if h <= 0:
        raise NumericError("finite_difference_gradient: h must be > 0")
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError("finite_difference_gradient: non-finite evaluation")
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad
