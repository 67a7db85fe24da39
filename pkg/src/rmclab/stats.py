"""Monte Carlo estimates, confidence intervals and streaming accumulators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MCEstimate",
    "wilson_interval",
    "median_of_means",
    "CompensatedSum",
    "MomentAccumulator",
]

Z95 = 1.959963984540054


@dataclass(frozen=True)
class MCEstimate:
    count: int
    mean: complex | float
    variance: float
    stderr: float
    ci95: tuple
    seed: int | None = None

    @classmethod
    def from_samples(cls, samples, seed: int | None = None) -> "MCEstimate":
        x = np.asarray(samples)
        n = x.size
        mean = x.mean()
        var = float(np.sum(np.abs(x - mean) ** 2) / (n - 1)) if n > 1 else 0.0
        se = math.sqrt(var / n) if n else math.nan
        mean = complex(mean) if np.iscomplexobj(x) else float(mean)
        return cls(n, mean, var, se, (mean - Z95 * se, mean + Z95 * se), seed)

    def within(self, target: float, k_sigma: float) -> bool:
        return abs(self.mean - target) <= k_sigma * self.stderr


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return (lo, hi)


def median_of_means(samples, blocks: int = 20, seed: int | None = None) -> MCEstimate:
    """Median of ``blocks`` equal block means (samples kept in their given order).

    The standard error is the asymptotic one for a median of roughly normal
    block means, sqrt(pi/2) * sd(block means) / sqrt(blocks).
    """
    x = np.asarray(samples, dtype=float)
    size = x.size // blocks
    if size == 0:
        raise ValueError(f"need at least {blocks} samples for {blocks} blocks")
    means = x[: size * blocks].reshape(blocks, size).mean(axis=1)
    est = float(np.median(means))
    sd = float(means.std(ddof=1)) if blocks > 1 else 0.0
    se = math.sqrt(math.pi / 2) * sd / math.sqrt(blocks)
    return MCEstimate(size * blocks, est, sd * sd * size, se, (est - Z95 * se, est + Z95 * se), seed)


class CompensatedSum:
    """Elementwise Neumaier summation over numpy arrays."""

    def __init__(self, shape=()):
        self.total = np.zeros(shape)
        self.comp = np.zeros(shape)

    def add(self, value) -> None:
        value = np.asarray(value, dtype=float)
        t = self.total + value
        big = np.abs(self.total) >= np.abs(value)
        self.comp += np.where(big, (self.total - t) + value, (value - t) + self.total)
        self.total = t

    def merge(self, other: "CompensatedSum") -> None:
        self.add(other.total)
        self.add(other.comp)

    @property
    def value(self) -> np.ndarray:
        return self.total + self.comp


class MomentAccumulator:
    """Running sums of |A|, |A|^2 and |A|^4 per grid point, mergeable."""

    def __init__(self, size: int):
        self.count = 0
        self.s1 = CompensatedSum(size)
        self.s2 = CompensatedSum(size)
        self.s4 = CompensatedSum(size)

    def update(self, values: np.ndarray) -> None:
        """Add a block of rows (trials) by columns (grid points)."""
        a = np.abs(np.atleast_2d(values))
        a2 = a * a
        for row1, row2 in zip(a, a2):
            self.s1.add(row1)
            self.s2.add(row2)
            self.s4.add(row2 * row2)
        self.count += a.shape[0]

    def merge(self, other: "MomentAccumulator") -> None:
        self.count += other.count
        self.s1.merge(other.s1)
        self.s2.merge(other.s2)
        self.s4.merge(other.s4)

    def mean_abs(self) -> np.ndarray:
        return self.s1.value / self.count

    def mean_sq(self) -> np.ndarray:
        return self.s2.value / self.count

    def var_abs(self) -> np.ndarray:
        n = self.count
        return np.maximum(self.s2.value - n * self.mean_abs() ** 2, 0.0) / max(n - 1, 1)

    def var_sq(self) -> np.ndarray:
        n = self.count
        return np.maximum(self.s4.value - n * self.mean_sq() ** 2, 0.0) / max(n - 1, 1)

    def stderr_abs(self) -> np.ndarray:
        return np.sqrt(self.var_abs() / self.count)

    def stderr_sq(self) -> np.ndarray:
        return np.sqrt(self.var_sq() / self.count)
