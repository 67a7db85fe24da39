"""Empirical checks of the concentration and maximal inequalities.

Each check simulates a process, counts how often a tail event happens and
compares the frequency (with a Wilson 95% interval) against the closed-form
bound.  A violation means the lower end of the interval lies above the
bound; the bounds are not tight, so nothing is ever asserted about how close
the empirical values come.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .blocks import BlockSchedule, I_values, _quad_M
from . import series
from .errors import ContractError, DomainError, InvariantViolation
from .gaussian import (
    eval_on_circle,
    exp_series_real,
    restricted_coefficient_table,
    sample_gaussian_batch,
    sample_gaussians,
)
from .partitions import PartitionConstraint, restricted_second_moment
from .stats import MCEstimate, median_of_means, wilson_interval

__all__ = [
    "TailReport",
    "MomentFitReport",
    "DoobL2Report",
    "ZeroProcess",
    "RademacherProcess",
    "A1IncrementProcess",
    "ConstantSequence",
    "IjSequence",
    "hoeffding_check",
    "doob_max_check",
    "doob_L2_check",
    "chaos_moment_estimate",
    "chaos_exact_mean",
    "chaos_relative_sd",
    "a0_bound_evaluator",
    "a0_bound",
    "a0_radius_comparison",
    "a3_bound_evaluator",
    "HOEFFDING_CONSTANT",
    "DOOB_L2_FACTOR",
]

HOEFFDING_CONSTANT = 10.0
DOOB_L2_FACTOR = 4.0


@dataclass
class TailReport:
    epsilon_grid: np.ndarray
    empirical_tail: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    bound_values: np.ndarray
    trials: int
    extra: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return int(np.sum(self.ci_low > self.bound_values))

    def rows(self) -> list[dict]:
        return [
            {
                "threshold": float(e),
                "empirical": float(p),
                "ci_low": float(lo),
                "ci_high": float(hi),
                "bound": float(b),
                "violation": bool(lo > b),
            }
            for e, p, lo, hi, b in zip(
                self.epsilon_grid, self.empirical_tail, self.ci_low, self.ci_high, self.bound_values
            )
        ]


def _tail_report(grid, hits: np.ndarray, trials: int, bounds, **extra) -> TailReport:
    grid = np.asarray(grid, dtype=float)
    counts = hits.sum(axis=0)
    cis = np.array([wilson_interval(int(c), trials) for c in counts]).reshape(-1, 2)
    return TailReport(grid, counts / trials, cis[:, 0], cis[:, 1], np.asarray(bounds, dtype=float), trials, extra)


# --------------------------------------------------------------------------
# martingale-difference processes


class MDSProcess(Protocol):
    bounded: bool

    def sample(self, master_seed: int, trial: int) -> tuple[np.ndarray, np.ndarray]:
        """Increments Z_1..Z_N and predictable bounds S_1..S_N for one trial."""


@dataclass
class ZeroProcess:
    length: int = 10
    bounded: bool = True

    def sample(self, master_seed, trial):
        return np.zeros(self.length), np.zeros(self.length)


@dataclass
class RademacherProcess:
    length: int = 100
    bounded: bool = True

    def sample(self, master_seed, trial):
        x = sample_gaussians(self.length, master_seed, trial).values.real
        return np.where(x >= 0, 1.0, -1.0), np.ones(self.length)


@dataclass
class A1IncrementProcess:
    """Increments (X(k)/sqrt k) sum_{|lambda|=n-k, lambda_1<k} a(lambda), y0 < k <= n.

    Gaussian increments are unbounded, so every X(k) is clipped radially to
    modulus ``clip``.  Clipping preserves rotational symmetry, hence the zero
    conditional mean, and makes S_k = clip |inner sum| / sqrt k a valid
    predictable bound.
    """

    n: int = 8
    y0: int = 1
    clip: float = 3.0
    bounded: bool = True

    def sample(self, master_seed, trial):
        x = sample_gaussians(self.n, master_seed, trial).values
        mod = np.abs(x)
        x = np.where(mod > self.clip, x * (self.clip / np.maximum(mod, 1e-300)), x)
        table = restricted_coefficient_table(x, self.n - 1, self.n)
        ks = np.arange(self.y0 + 1, self.n + 1)
        inner = table[ks - 1, self.n - ks]
        z = x[ks - 1] / np.sqrt(ks) * inner
        s = self.clip / np.sqrt(ks) * np.abs(inner)
        return z, s


def hoeffding_check(
    process: MDSProcess,
    T_cap: float,
    eps_grid: Sequence[float],
    trials: int,
    master_seed: int = 0,
    constant: float = HOEFFDING_CONSTANT,
) -> TailReport:
    """Frequency of {|sum Z_n| >= eps} and {sum S_n^2 <= T_cap} against 2 exp(-eps^2 / (10 T_cap))."""
    if not getattr(process, "bounded", False):
        raise ContractError("process does not declare bounded increments")
    if T_cap <= 0:
        raise DomainError("T_cap must be positive")
    eps = np.asarray(eps_grid, dtype=float)
    hits = np.zeros((trials, eps.size), dtype=bool)
    in_sigma = 0
    for t in range(trials):
        z, s = process.sample(master_seed, t)
        if np.any(np.abs(z) > s * (1 + 1e-12) + 1e-300):
            raise ContractError(f"trial {t}: |Z_n| exceeds its declared bound S_n")
        if np.sum(s * s) <= T_cap:
            in_sigma += 1
            hits[t] = abs(z.sum()) >= eps
    bounds = 2 * np.exp(-(eps**2) / (constant * T_cap))
    return _tail_report(eps, hits, trials, bounds, sigma_frequency=in_sigma / trials, T_cap=T_cap)


# --------------------------------------------------------------------------
# Doob-type maximal inequalities


@dataclass
class ConstantSequence:
    value: float
    length: int = 5

    @property
    def expected_start(self) -> float:
        return self.value

    def sample_batch(self, master_seed, trials):
        return np.full((len(trials), self.length), float(self.value))


@dataclass
class IjSequence:
    """The non-negative supermartingale I_0..I_J of a block schedule."""

    sched: BlockSchedule
    zero_inputs: bool = False

    @property
    def expected_start(self) -> float:
        """E[I_0] = exp(H_{y0}) / y~_0; the pointwise second moment is prod e^{1/k}."""
        s = self.sched
        if self.zero_inputs:
            return s.prefactor(0)
        h = math.fsum(1.0 / k for k in range(1, s.y0 + 1))
        return s.prefactor(0) * math.exp(h)

    def sample_batch(self, master_seed, trials):
        s = self.sched
        yJ = s.y[-1]
        if self.zero_inputs:
            x = np.zeros((len(trials), yJ), dtype=complex)
        else:
            x = sample_gaussian_batch(yJ, master_seed, trials)
        M = _quad_M(yJ)
        return np.stack([I_values(x, s, j, M) for j in range(s.J + 1)], axis=1)


def doob_max_check(sequence, lambda_grid: Sequence[float], trials: int, master_seed: int = 0, chunk: int = 1000) -> TailReport:
    """Frequency of {max_j I_j > lam} against E[I_0] / lam."""
    lam = np.asarray(lambda_grid, dtype=float)
    hits = np.zeros((trials, lam.size), dtype=bool)
    starts = np.zeros(trials)
    for lo in range(0, trials, chunk):
        idx = list(range(lo, min(trials, lo + chunk)))
        vals = sequence.sample_batch(master_seed, idx)
        if np.any(vals < 0):
            raise ContractError("maximal inequality needs a non-negative sequence")
        hits[lo : lo + len(idx)] = vals.max(axis=1)[:, None] > lam
        starts[lo : lo + len(idx)] = vals[:, 0]
    start = getattr(sequence, "expected_start", None)
    est = MCEstimate.from_samples(starts, master_seed)
    if start is None:
        start = est.mean
    return _tail_report(lam, hits, trials, start / lam, expected_start=start, mc_start=est)


@dataclass
class DoobL2Report:
    r: int
    block: tuple[int, int]
    lhs: MCEstimate
    rhs: float
    final_second_moment: float
    exact_lhs: float | None = None
    k_sigma: float = 4.0

    @property
    def holds(self) -> bool:
        return self.lhs.mean <= self.rhs + self.k_sigma * self.lhs.stderr


def doob_L2_check(
    r: int, block: tuple[int, int], trials: int, master_seed: int = 0, zero_inputs: bool = False, chunk: int = 2000
) -> DoobL2Report:
    """E[max_{lo<beta<=hi} |S_beta|^2] <= 4 E[|S_hi|^2], S_beta = sum_{|lambda|=r, lambda_1<=beta} a(lambda).

    The right side is exact (orthogonality of the monomials); the left side
    is a Monte Carlo mean.
    """
    lo, hi = block
    if not 0 <= lo < hi:
        raise DomainError(f"block must satisfy 0 <= lo < hi, got {block}")
    samples = np.zeros(trials)
    for c0 in range(0, trials, chunk):
        idx = list(range(c0, min(trials, c0 + chunk)))
        if zero_inputs:
            x = np.zeros((len(idx), hi), dtype=complex)
        else:
            x = sample_gaussian_batch(hi, master_seed, idx)
        table = restricted_coefficient_table(x, hi, r)
        samples[c0 : c0 + len(idx)] = (np.abs(table[:, lo + 1 : hi + 1, r]) ** 2).max(axis=1)
    final = restricted_second_moment(r, PartitionConstraint.parts_at_most(hi))
    if zero_inputs:
        final = 1.0 if r == 0 else 0.0
    # a one-step block has no maximum to take, so the left side is exact too
    exact = final if hi - lo == 1 else None
    return DoobL2Report(r, block, MCEstimate.from_samples(samples, master_seed), DOOB_L2_FACTOR * final, final, exact)


# --------------------------------------------------------------------------
# chaos moments


@dataclass
class MomentFitReport:
    R_grid: list[int]
    q: float
    r: float
    estimates: list[MCEstimate]
    bound_shape: np.ndarray
    fitted_constants: np.ndarray
    exact_means: list[float] | None = None
    exact_relative_sd: list[float] | None = None

    @property
    def spread(self) -> float:
        """Largest over smallest fitted constant."""
        c = self.fitted_constants
        return float(c.max() / c.min())


def chaos_exact_mean(R: int, r: float = 1.0) -> float:
    """E[(1/2 pi) int |F_R(r e^{it})|^2 dt] = exp(sum_{k<=R} r^{2k} / k)."""
    return math.exp(math.fsum(r ** (2 * k) / k for k in range(1, R + 1)))


def chaos_relative_sd(R: int) -> float:
    """Exact sd / mean of (1/2 pi) int |F_R(e^{it})|^2 dt for one trial.

    E[Y^2] / E[Y]^2 = (1/2 pi) int exp(2 sum_{k<=R} cos(k t) / k) dt, which is
    the sum of squared coefficients of exp(sum_{k<=R} z^k / k).
    """
    c = np.zeros(16 * R + 1)
    c[1 : R + 1] = 1.0 / np.arange(1, R + 1)
    b = series.exp(c, c.size)  # the tail past 16 R is below 1e-15
    return math.sqrt(max(math.fsum(b * b) - 1, 0.0))


def chaos_shape(R: int, q: float) -> float:
    return (R / (1 + (1 - q) * math.sqrt(math.log(R)))) ** q


def chaos_moment_estimate(
    R_grid: Sequence[int] | int,
    q: float,
    r: float = 1.0,
    trials: int = 10_000,
    blocks: int = 20,
    master_seed: int = 0,
    zero_inputs: bool = False,
    M: int | None = None,
    chunk: int = 1000,
) -> MomentFitReport:
    """Median-of-means estimates of E[((1/2 pi) int |F_R(r e^{it})|^2 dt)^q] across R.

    One draw of X(1..max R) per trial serves every R in the grid (the
    truncations of one sequence).  The integral is the mean over M points;
    the default M is the first power of two >= max(1024, 16 R).
    """
    R_grid = [int(R_grid)] if np.isscalar(R_grid) else [int(R) for R in R_grid]
    if not 0.5 <= q <= 1:
        raise DomainError(f"q must lie in [1/2, 1], got {q}")
    for R in R_grid:
        if R < 1:
            raise DomainError(f"R must be at least 1, got {R}")
        if not 1 <= r <= math.exp(1.0 / R) * (1 + 1e-15):
            raise DomainError(f"r={r} outside [1, e^(1/R)] for R={R}")
    if trials < 100:
        raise DomainError(f"need at least 100 trials, got {trials}")
    Rmax = max(R_grid)
    values = np.zeros((len(R_grid), trials))
    for c0 in range(0, trials, chunk):
        idx = list(range(c0, min(trials, c0 + chunk)))
        if zero_inputs:
            x = np.zeros((len(idx), Rmax), dtype=complex)
        else:
            x = sample_gaussian_batch(Rmax, master_seed, idx)
        for i, R in enumerate(R_grid):
            m = M or 1 << (max(1024, 16 * R) - 1).bit_length()
            samples = eval_on_circle(x[:, :R], R, r, m)
            values[i, c0 : c0 + len(idx)] = np.mean(np.abs(samples.values) ** 2, axis=-1) ** q
    estimates = [median_of_means(v, blocks, master_seed) for v in values]
    shape = np.array([chaos_shape(R, q) for R in R_grid])
    fitted = np.array([e.mean for e in estimates]) / shape
    exact = rel = None
    if q == 1 and not zero_inputs:
        exact = [chaos_exact_mean(R, r) for R in R_grid]
        if r == 1:
            rel = [chaos_relative_sd(R) for R in R_grid]
    return MomentFitReport(R_grid, q, r, estimates, shape, fitted, exact, rel)


# --------------------------------------------------------------------------
# second-moment bounds for the A0 and A3 pieces


def a0_bound(n: int, y0: int, r: float) -> float:
    """r^{-n} exp(sum_{k<=y0} r^k / k), valid for every r > 0."""
    return math.exp(-n * math.log(r) + math.fsum(r**k / k for k in range(1, y0 + 1)))


def a0_bound_evaluator(n: int, y0: int, r: float | None = None) -> tuple[float, float]:
    """(E|A0(n)|^2, its generating-function bound); r defaults to e^{1/y0}."""
    if r is None:
        r = math.exp(1.0 / y0)
    if r <= 0:
        raise DomainError(f"r must be positive, got {r}")
    exact = float(exp_series_real(1.0 / np.arange(1, y0 + 1), n)[n])
    bound = a0_bound(n, y0, r)
    if exact > bound * (1 + 1e-12):
        raise InvariantViolation(f"E|A0({n})|^2 = {exact} exceeds its bound {bound} (y0={y0}, r={r})")
    return exact, bound


def a0_radius_comparison(n: int, y0: int) -> dict:
    """Bound at the default radius e^{1/y0} next to the bound at r = 1 + 1/n."""
    exact, at_default = a0_bound_evaluator(n, y0)
    alt = a0_bound(n, y0, 1 + 1 / max(n, 1))
    return {"n": n, "y0": y0, "exact": exact, "bound_default_r": at_default, "bound_r_1_plus_1_over_n": alt,
            "default_is_smaller": at_default <= alt}


def a3_bound_evaluator(n: int, y0: int) -> tuple[float, float]:
    """(E|A3(n)|^2, sum_{y0 < k <= n/3} k^{-3})."""
    exact = restricted_second_moment(n, PartitionConstraint.piece(3, y0))
    bound = math.fsum(k**-3 for k in range(y0 + 1, n // 3 + 1))
    if exact > bound * (1 + 1e-12):
        raise InvariantViolation(f"E|A3({n})|^2 = {exact} exceeds its bound {bound} (y0={y0})")
    return exact, bound
