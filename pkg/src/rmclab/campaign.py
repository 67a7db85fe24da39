"""Reproducible Monte Carlo campaigns over many trials.

Trials are cut into fixed-size chunks that run on a thread pool.  Each trial
draws its inputs from its own counter-based stream and chunk results are
merged in chunk order, so outputs do not depend on the thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .blocks import BlockSchedule, Thresholds, build_schedule, evaluate_events
from .errors import ConfigError, InvariantViolation, ScaleError
from .gaussian import exp_series_batch, sample_gaussian_batch, sample_gaussians
from .stats import MomentAccumulator, wilson_interval

__all__ = [
    "CampaignConfig",
    "SimulationResult",
    "MomentCurve",
    "GrowthReport",
    "EventTable",
    "WORK_BUDGET",
    "CHUNK",
    "resolve_threads",
    "log_grid",
    "run_chunks",
    "run_simulation",
    "moment_curve",
    "growth_report",
    "event_frequencies",
]

#: cap on trials * n_max for a single campaign
WORK_BUDGET = 4 * 10**10
#: trials per work unit; fixed so that results never depend on the thread count
CHUNK = 256

GROWTH_CAVEAT = (
    "desk-scale n barely moves log log n, so G is a sanity diagnostic and says "
    "nothing about the almost sure growth rate"
)


def resolve_threads(threads: int) -> int:
    """0 means auto: RMC_THREADS if set, else the CPU count."""
    if threads < 0:
        raise ConfigError(f"threads must be >= 0, got {threads}")
    if threads:
        return threads
    env = os.environ.get("RMC_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"RMC_THREADS must be an integer, got {env!r}") from None
        if value < 1:
            raise ConfigError(f"RMC_THREADS must be positive, got {value}")
        return value
    return os.cpu_count() or 1


def log_grid(n_max: int, lo_exp: int = 3, hi_exp: int = 13) -> tuple[int, ...]:
    """Powers of two 2^lo..2^hi that do not exceed n_max."""
    return tuple(1 << e for e in range(lo_exp, hi_exp + 1) if 1 << e <= n_max)


@dataclass(frozen=True)
class CampaignConfig:
    n_max: int = 1 << 13
    trials: int = 1000
    master_seed: int = 0
    method: str = "fast"
    ell: int = 2
    K: float = 2.0
    epsilon: float = 0.25
    C0: float | None = None
    thresholds: Thresholds = Thresholds()
    threads: int = 1
    n_grid: tuple[int, ...] | None = None
    first_trial: int = 0
    n0: int = 3
    zero_inputs: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.n_max < 1:
            raise ConfigError(f"n_max must be >= 1, got {self.n_max}")
        if self.method not in ("naive", "fast"):
            raise ConfigError(f"method must be naive or fast, got {self.method!r}")
        if not 0 <= self.master_seed < 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.first_trial < 0:
            raise ConfigError("first_trial must be non-negative")
        if self.n0 < 3:
            raise ConfigError(f"n0 must be >= 3 so that log n > 1, got {self.n0}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.n_grid is not None and any(not 0 <= n <= self.n_max for n in self.n_grid):
            raise ConfigError(f"n_grid must lie in [0, n_max={self.n_max}]")
        if self.trials * self.n_max > WORK_BUDGET:
            raise ScaleError(f"trials * n_max = {self.trials * self.n_max} exceeds the budget {WORK_BUDGET}")

    @property
    def grid(self) -> tuple[int, ...]:
        if self.n_grid is not None:
            return tuple(self.n_grid)
        return log_grid(self.n_max) or (self.n_max,)

    def schedule(self) -> BlockSchedule:
        return build_schedule(self.ell, self.K, self.epsilon, self.C0)

    def echo(self) -> dict:
        """Config as plain data; the thread count is left out on purpose."""
        d = asdict(self)
        d.pop("threads")
        d["grid"] = list(self.grid)
        d.pop("n_grid")
        return d


def _chunks(config: CampaignConfig) -> list[list[int]]:
    start, stop = config.first_trial, config.first_trial + config.trials
    return [list(range(c, min(stop, c + CHUNK))) for c in range(start, stop, CHUNK)]


def run_chunks(config: CampaignConfig, work: Callable[[list[int]], object]) -> list:
    """Apply ``work`` to every chunk of trial indices; results come back in chunk order."""
    chunks = _chunks(config)
    threads = min(resolve_threads(config.threads), len(chunks))
    if threads <= 1:
        return [work(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, chunks))


def _coefficients(config: CampaignConfig, trials: list[int], N: int) -> np.ndarray:
    if config.zero_inputs:
        out = np.zeros((len(trials), N + 1), dtype=complex)
        out[:, 0] = 1
        return out
    x = sample_gaussian_batch(N, config.master_seed, trials)
    return exp_series_batch(x, N, config.method)


# --------------------------------------------------------------------------
# simulation and moments


@dataclass
class SimulationResult:
    config: CampaignConfig
    grid: tuple[int, ...]
    moments: MomentAccumulator
    trial_index: np.ndarray
    values: np.ndarray  # trials x grid, complex

    def aggregate_rows(self) -> list[dict]:
        m = self.moments
        mean_abs, mean_sq, se = m.mean_abs(), m.mean_sq(), m.stderr_sq()
        return [
            {"n": n, "count": m.count, "mean_abs": float(mean_abs[i]), "mean_sq": float(mean_sq[i]), "stderr": float(se[i])}
            for i, n in enumerate(self.grid)
        ]

    def trial_rows(self) -> Iterable[dict]:
        for t, row in zip(self.trial_index, self.values):
            for n, a in zip(self.grid, row):
                yield {"trial": int(t), "n": n, "re_A": float(a.real), "im_A": float(a.imag), "abs_A": float(abs(a))}

    def second_moment_ok(self, k_sigma: float = 5.0) -> dict[int, bool]:
        m = self.moments
        dev = np.abs(m.mean_sq() - 1)
        return {n: bool(d <= k_sigma * s) for n, d, s in zip(self.grid, dev, m.stderr_sq())}


def run_simulation(config: CampaignConfig) -> SimulationResult:
    """A(n) on the grid for every trial, plus streaming moment sums."""
    grid = config.grid
    N = max(grid)
    cols = np.asarray(grid)

    def work(trials):
        vals = _coefficients(config, trials, N)[:, cols]
        acc = MomentAccumulator(len(grid))
        acc.update(vals)
        return acc, vals

    parts = run_chunks(config, work)
    acc = MomentAccumulator(len(grid))
    for a, _ in parts:
        acc.merge(a)
    values = np.concatenate([v for _, v in parts])
    index = np.arange(config.first_trial, config.first_trial + config.trials)
    return SimulationResult(config, grid, acc, index, values)


@dataclass
class MomentCurve:
    rows: list[dict]
    ratios: list[dict]
    degenerate: bool
    monotone_within_2se: bool


def reference_ratio(n1: int, n2: int) -> float:
    """(log n1 / log n2)^{1/4}: the ratio E|A(n2)| / E|A(n1)| if E|A(n)| ~ c (log n)^{-1/4}."""
    return (math.log(n1) / math.log(n2)) ** 0.25


def moment_curve(config: CampaignConfig, sim: SimulationResult | None = None) -> MomentCurve:
    """E|A(n)| on the grid next to the (log n)^{-1/4} reference.

    Constants are unknown, so only ratios between grid points are compared
    and nothing is asserted.
    """
    sim = sim or run_simulation(config)
    m = sim.moments
    mean_abs, se = m.mean_abs(), m.stderr_abs()
    rows = []
    for i, n in enumerate(sim.grid):
        ref = math.log(n) ** -0.25 if n >= 2 else math.nan
        rows.append({"n": n, "mean_abs": float(mean_abs[i]), "stderr": float(se[i]), "reference": ref})
    ratios = []
    for i in range(1, len(sim.grid)):
        n1, n2 = sim.grid[i - 1], sim.grid[i]
        est = mean_abs[i] / mean_abs[i - 1] if mean_abs[i - 1] > 0 else math.nan
        ref = reference_ratio(n1, n2) if n1 >= 2 else math.nan
        ratios.append({"n1": n1, "n2": n2, "ratio": float(est), "reference": ref})
    positive = [i for i, n in enumerate(sim.grid) if n >= 1]
    degenerate = bool(np.all(mean_abs[positive] == 0))
    monotone = all(
        mean_abs[i] <= mean_abs[i - 1] + 2 * math.hypot(se[i], se[i - 1]) for i in range(1, len(sim.grid))
    )
    return MomentCurve(rows, ratios, degenerate, monotone)


# --------------------------------------------------------------------------
# growth statistic


@dataclass
class GrowthReport:
    N: int
    n0: int
    epsilon: float
    constant: float
    G: np.ndarray
    exceedances: int
    by_N: dict[int, dict] = field(default_factory=dict)
    caveat: str = GROWTH_CAVEAT

    def summary(self) -> dict:
        return _g_summary(self.G) | {"exceedances": self.exceedances, "constant": self.constant}


def _g_summary(G: np.ndarray) -> dict:
    q = np.quantile(G, [0.5, 0.9, 0.99]) if G.size else [math.nan] * 3
    return {"median": float(q[0]), "q90": float(q[1]), "q99": float(q[2]), "max": float(G.max(initial=0.0))}


def growth_report(
    config: CampaignConfig, constant: float | None = None, compare_N: Sequence[int] = ()
) -> GrowthReport:
    """G = max_{n0 <= n <= N} |A(n)| / (log n)^{3/4+eps} per trial, N = n_max.

    ``compare_N`` lists shorter horizons evaluated on the same trials (the
    coefficients up to N' are shared), so medians can be compared across N.
    """
    N, n0 = config.n_max, config.n0
    if N < n0:
        raise ConfigError(f"n_max={N} is below n0={n0}")
    for M in compare_N:
        if not n0 <= M <= N:
            raise ConfigError(f"comparison horizon {M} outside [n0, n_max]")
    constant = config.thresholds.total if constant is None else constant
    n = np.arange(n0, N + 1)
    denom = np.log(n) ** (0.75 + config.epsilon)
    horizons = sorted(set(compare_N) | {N})

    def work(trials):
        ratio = np.abs(_coefficients(config, trials, N)[:, n0:]) / denom
        return np.stack([ratio[:, : M - n0 + 1].max(axis=1) for M in horizons], axis=1)

    G_all = np.concatenate(run_chunks(config, work))
    G = G_all[:, horizons.index(N)]
    by_N = {M: _g_summary(G_all[:, i]) for i, M in enumerate(horizons)}
    return GrowthReport(N, n0, config.epsilon, constant, G, int(np.sum(G > constant)), by_N)


# --------------------------------------------------------------------------
# event frequencies


@dataclass
class EventTable:
    trials: int
    rows: list[dict]
    inclusion_failures: dict[str, int]
    union_bounds: list[dict]
    max_decomposition_error: float

    @property
    def consistent(self) -> bool:
        return not any(self.inclusion_failures.values()) and all(u["holds"] for u in self.union_bounds)


_EVENT_NAMES = ("B", "B1", "B2", "B3", "B4", "P1", "P1_tilde", "P2", "P2_tilde", "not_T", "not_T2", "not_S", "not_chaos_ok")


def _indicators(rec) -> list[bool]:
    return [rec.B, *rec.B_r, rec.P1, rec.P1_tilde, rec.P2, rec.P2_tilde, not rec.T, not rec.T2, not rec.S, not rec.chaos_ok]


def event_frequencies(config: CampaignConfig) -> EventTable:
    """Empirical frequencies of the block events on the configured schedule.

    B1..B4 are the per-piece events for A0..A3.  Per-trial set inclusions are
    counted; any failure points to a bug, not to randomness.
    """
    sched = config.schedule()
    need = max(sched.n_hi, sched.y[-1])

    def work(trials):
        out = []
        for t in trials:
            if config.zero_inputs:
                x = np.zeros(need, dtype=complex)
            else:
                x = sample_gaussians(need, config.master_seed, t)
            rec = evaluate_events(x, sched, config.thresholds)
            out.append((_indicators(rec), rec.inclusions(), rec.decomposition_error))
        return out

    results = [r for part in run_chunks(config, work) for r in part]
    hits = np.array([r[0] for r in results], dtype=bool).reshape(len(results), len(_EVENT_NAMES))
    T = len(results)
    rows = []
    for i, name in enumerate(_EVENT_NAMES):
        k = int(hits[:, i].sum())
        lo, hi = wilson_interval(k, T)
        rows.append({"event": name, "count": k, "frequency": k / T, "ci_low": lo, "ci_high": hi})
    failures = {key: sum(not r[1][key] for r in results) for key in results[0][1]}
    freq = hits.mean(axis=0)
    idx = {name: i for i, name in enumerate(_EVENT_NAMES)}
    union = [
        {"lhs": "B", "rhs": "B1+B2+B3+B4", "lhs_value": float(freq[idx["B"]]),
         "rhs_value": float(sum(freq[idx[f"B{r}"]] for r in range(1, 5)))},
        {"lhs": "not_T", "rhs": "P1+P1_tilde", "lhs_value": float(freq[idx["not_T"]]),
         "rhs_value": float(freq[idx["P1"]] + freq[idx["P1_tilde"]])},
        {"lhs": "not_T2", "rhs": "P2+P2_tilde", "lhs_value": float(freq[idx["not_T2"]]),
         "rhs_value": float(freq[idx["P2"]] + freq[idx["P2_tilde"]])},
    ]
    for u in union:
        u["holds"] = u["lhs_value"] <= u["rhs_value"] + 1e-15
    return EventTable(T, rows, failures, union, max(r[2] for r in results))


def require_consistent(table: EventTable) -> None:
    if not table.consistent:
        raise InvariantViolation(f"event inclusions failed: {table.inclusion_failures}, {table.union_bounds}")
