"""Oracle comparisons shared by the CLI and the acceptance suite.

Each check returns a :class:`CheckResult` carrying the measured value, the
tolerance it was held to and the wall time.  Nothing here loosens a
tolerance; callers decide what to do with a failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .blocks import build_schedule
from .gaussian import cauchy_recover, exp_series_fast, exp_series_naive, sample_gaussians
from .partitions import (
    ENUM_CAP,
    A_oracle,
    PartitionConstraint,
    a_second_moment,
    decompose,
    enumerate_partitions,
    partition_count,
    restricted_second_moment,
)
from .concentration import a0_bound, a3_bound_evaluator

__all__ = [
    "CheckResult",
    "oracle_equivalence",
    "fast_path_agreement",
    "fast_path_speedup",
    "cauchy_agreement",
    "second_moment_identity",
    "partition_counts",
    "decomposition_identity",
    "piece_moment_bounds",
    "oracle_suite",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: value={self.value:.3e} tol={self.tolerance:.1e} ({self.seconds:.1f}s)"


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def oracle_equivalence(trials: int = 100, n_max: int = 12, master_seed: int = 0, tol: float = 1e-9) -> CheckResult:
    """Recurrence against the partition sum, worst relative error over trials and n."""
    worst = 0.0
    with _Timer() as t:
        for trial in range(trials):
            x = sample_gaussians(n_max, master_seed, trial)
            a = exp_series_naive(x, n_max).coeffs
            for n in range(n_max + 1):
                ref = A_oracle(n, x)
                worst = max(worst, abs(a[n] - ref) / max(abs(ref), 1e-300))
    return CheckResult("recurrence vs partition oracle", worst <= tol, worst, tol, t.seconds, {"trials": trials, "n_max": n_max})


def fast_path_agreement(N: int = 4096, seeds: int = 10, master_seed: int = 0, tol: float = 1e-8) -> CheckResult:
    """max |fast - naive| / (1 + max |A|) over ``seeds`` independent inputs."""
    worst = 0.0
    with _Timer() as t:
        for s in range(seeds):
            x = sample_gaussians(N, master_seed, s)
            naive = exp_series_naive(x, N).coeffs
            fast = exp_series_fast(x, N).coeffs
            worst = max(worst, float(np.max(np.abs(fast - naive)) / (1 + np.max(np.abs(naive)))))
    return CheckResult("fast path vs recurrence", worst <= tol, worst, tol, t.seconds, {"N": N, "seeds": seeds})


def fast_path_speedup(N: int = 65536, master_seed: int = 0, required: float = 5.0, repeats: int = 3) -> CheckResult:
    """Naive time over fast time on one input (best of ``repeats`` for the fast path)."""
    x = sample_gaussians(N, master_seed, 0)
    with _Timer() as total:
        exp_series_fast(x, 64)  # warm up
        fast = math.inf
        for _ in range(repeats):
            with _Timer() as tf:
                exp_series_fast(x, N)
            fast = min(fast, tf.seconds)
        with _Timer() as tn:
            exp_series_naive(x, N)
    ratio = tn.seconds / fast
    detail = {"N": N, "fast_seconds": fast, "naive_seconds": tn.seconds}
    return CheckResult("fast path speedup", ratio >= required, ratio, required, total.seconds, detail)


def cauchy_agreement(R: int = 1024, n_max: int = 512, master_seed: int = 0, tol: float = 1e-6) -> CheckResult:
    """Quadrature coefficients of F_R against the recurrence for n <= n_max."""
    with _Timer() as t:
        x = sample_gaussians(R, master_seed, 0)
        coeffs, M = cauchy_recover(x, R, n_max)
        ref = exp_series_naive(x, n_max).coeffs
        err = float(np.max(np.abs(coeffs - ref)))
    return CheckResult("Cauchy quadrature vs recurrence", err <= tol, err, tol, t.seconds, {"R": R, "n_max": n_max, "M": M})


def second_moment_identity(n_max: int = 40, tol: float = 1e-12) -> CheckResult:
    """sum_{|lambda|=n} prod 1/(k^{m_k} m_k!) = 1 for every n <= n_max, by enumeration."""
    worst = 0.0
    with _Timer() as t:
        for n in range(n_max + 1):
            total = math.fsum(a_second_moment(lam) for lam in enumerate_partitions(n))
            worst = max(worst, abs(total - 1))
    return CheckResult("second-moment identity", worst <= tol, worst, tol, t.seconds, {"n_max": n_max})


def partition_counts(n_max: int = ENUM_CAP) -> CheckResult:
    """Enumeration counts against the pentagonal recurrence."""
    bad = 0
    with _Timer() as t:
        for n in range(n_max + 1):
            bad += sum(1 for _ in enumerate_partitions(n)) != partition_count(n)
    return CheckResult("partition counts", bad == 0, bad, 0, t.seconds, {"n_max": n_max})


def decomposition_identity(trials: int = 100, ell: int = 2, K: float = 2.0, master_seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """A0 + A1 + A2 + A3 = A(n) for every n in the schedule window."""
    sched = build_schedule(ell, K)
    lo, hi = sched.n_lo, sched.n_hi
    worst = 0.0
    with _Timer() as t:
        for trial in range(trials):
            x = sample_gaussians(hi, master_seed, trial)
            a = exp_series_naive(x, hi).coeffs
            for n in range(lo, hi + 1):
                worst = max(worst, abs(sum(decompose(n, x, sched.y0)) - a[n]))
    return CheckResult("A0+A1+A2+A3 = A(n)", worst <= tol, worst, tol, t.seconds, {"window": (lo, hi), "y0": sched.y0, "trials": trials})


def piece_moment_bounds(n_max: int = 40, y0_max: int = 8) -> CheckResult:
    """Second-moment bounds for A0 at r = e^{1/y0} and the exact A3 value at n = 9, y0 = 2."""
    violations = 0
    worst_ratio = 0.0
    with _Timer() as t:
        for y0 in range(1, y0_max + 1):
            r = math.exp(1.0 / y0)
            for n in range(n_max + 1):
                exact = restricted_second_moment(n, PartitionConstraint.parts_at_most(y0), method="series")
                bound = a0_bound(n, y0, r)
                violations += exact > bound
                worst_ratio = max(worst_ratio, exact / bound)
        a3, a3_bound = a3_bound_evaluator(9, 2)
    a3_ok = a3 == 1 / 162 and a3 <= 1 / 27 and a3_bound == 1 / 27
    detail = {"violations": violations, "A3_9": a3, "A3_bound": a3_bound, "worst_exact_over_bound": worst_ratio}
    return CheckResult("A0/A3 second-moment bounds", violations == 0 and a3_ok, violations, 0, t.seconds, detail)


def oracle_suite(master_seed: int = 0, quick: bool = True) -> list[CheckResult]:
    """Every deterministic oracle check; ``quick`` shrinks sizes for interactive use."""
    if quick:
        return [
            oracle_equivalence(20, 12, master_seed),
            fast_path_agreement(1024, 3, master_seed),
            cauchy_agreement(256, 128, master_seed),
            second_moment_identity(25),
            partition_counts(30),
            decomposition_identity(10, master_seed=master_seed),
            piece_moment_bounds(40, 8),
        ]
    return [
        oracle_equivalence(100, 12, master_seed),
        fast_path_agreement(4096, 10, master_seed),
        fast_path_speedup(65536, master_seed),
        cauchy_agreement(1024, 512, master_seed),
        second_moment_identity(40),
        partition_counts(ENUM_CAP),
        decomposition_identity(100, master_seed=master_seed),
        piece_moment_bounds(40, 8),
    ]
