"""Acceptance criteria at their stated sizes and tolerances.

Each test records a PASS/FAIL line (printed in the terminal summary) and
then asserts.  Seeds are fixed in advance; nothing here is tuned to pass.
"""

import json
import math
import time

import numpy as np
import pytest

from rmclab import checks
from rmclab.blocks import a1_increment_check, b_factor, build_schedule, submartingale_check, supermartingale_check
from rmclab.campaign import CampaignConfig, run_simulation
from rmclab.cli import main
from rmclab.concentration import (
    A1IncrementProcess,
    IjSequence,
    RademacherProcess,
    chaos_moment_estimate,
    doob_L2_check,
    doob_max_check,
    hoeffding_check,
)

SEED = 0
pytestmark = pytest.mark.slow


def _check(criterion, result, limit):
    ok = result.passed and result.seconds < limit
    criterion(result.name, ok, f"value={result.value:.3e} tol={result.tolerance:.1e} time={result.seconds:.1f}s/<{limit}s")
    assert ok, result.detail


def test_oracle_equivalence(criterion):
    _check(criterion, checks.oracle_equivalence(100, 12, SEED, 1e-9), 10)


def test_fast_path(criterion):
    t0 = time.perf_counter()
    agree = checks.fast_path_agreement(4096, 10, SEED, 1e-8)
    speed = checks.fast_path_speedup(65536, SEED, 5.0)
    total = time.perf_counter() - t0
    ok = agree.passed and speed.passed and total < 60
    criterion(
        "fast_path",
        ok,
        f"max_err={agree.value:.2e} (tol 1e-8) speedup={speed.value:.1f}x (need 5x) time={total:.1f}s/<60s",
    )
    assert ok


def test_cauchy_recovery(criterion):
    _check(criterion, checks.cauchy_agreement(1024, 512, SEED, 1e-6), 30)


def test_second_moment_identity(criterion):
    _check(criterion, checks.second_moment_identity(40, 1e-12), 300)


def test_decomposition(criterion):
    _check(criterion, checks.decomposition_identity(100, 2, 2.0, SEED, 1e-12), 60)


def test_mc_second_moment(criterion):
    t0 = time.perf_counter()
    sim = run_simulation(CampaignConfig(n_max=512, trials=100_000, master_seed=SEED, n_grid=(8, 64, 512), threads=0))
    ok_by_n = sim.second_moment_ok(5.0)
    total = time.perf_counter() - t0
    rows = sim.aggregate_rows()
    detail = " ".join(f"n={r['n']}:{r['mean_sq']:.4f}+-{r['stderr']:.4f}" for r in rows)
    ok = all(ok_by_n.values()) and total < 600
    criterion("mc_second_moment", ok, f"{detail} time={total:.1f}s/<600s")
    assert ok


def test_piece_moment_bounds(criterion):
    _check(criterion, checks.piece_moment_bounds(40, 8), 60)


def test_martingale_checks(criterion):
    t0 = time.perf_counter()
    sched = build_schedule(2, 2)
    a1 = a1_increment_check(sched, 8, 200, 2000, SEED)
    sup = supermartingale_check(sched, 200, 2000, SEED)
    sub = [submartingale_check(2 * b, b, 200, 2000, SEED) for b in (1, 2, 3, 4)]
    total = time.perf_counter() - t0
    everything = a1 + sup + sub
    failed = [c.label for c in everything if not c.passed]
    # deviation / stderr; the one-sided checks count only shortfalls
    worst = max(c.deviation / c.stderr for c in everything if c.stderr > 0)
    ok = not failed and total < 900
    criterion("martingale_checks", ok, f"{len(everything)} checks, worst={worst:+.2f} sd, failed={failed} time={total:.1f}s/<900s")
    assert ok


def test_b_factor(criterion):
    b1 = b_factor(build_schedule(2, 2), 1).value
    closed = abs(b1 - math.exp(-5 / 8)) <= 1e-12
    worst = -math.inf
    for ell, K in [(40, 1.2), (50, 1.5), (1000, 1.0)]:
        s = build_schedule(ell, K)
        worst = max(worst, max(b_factor(s, j).log_value for j in range(1, s.J + 1)))
    ok = closed and worst <= 0
    criterion("b_factor", ok, f"|b1-e^(-5/8)|={abs(b1 - math.exp(-5 / 8)):.1e} max log b_j={worst:.2e}")
    assert ok


def test_chaos_moment(criterion):
    t0 = time.perf_counter()
    mean = chaos_moment_estimate([16, 64, 256], 1.0, 1.0, 100_000, master_seed=SEED)
    rel = [e.mean / ex - 1 for e, ex in zip(mean.estimates, mean.exact_means)]
    shape = chaos_moment_estimate([64, 256, 1024, 4096], 0.75, 1.0, 10_000, master_seed=SEED)
    total = time.perf_counter() - t0
    ok = all(abs(r) <= 0.05 for r in rel) and shape.spread <= 2 and total < 1800
    detail = " ".join(f"R={R}:{r:+.3f}" for R, r in zip(mean.R_grid, rel))
    criterion("chaos_moment", ok, f"{detail} (tol 5%) q=3/4 spread={shape.spread:.2f} (<=2) time={total:.1f}s/<1800s")
    assert ok


def test_concentration(criterion):
    t0 = time.perf_counter()
    T = 10_000
    sched = build_schedule(2, 2)
    seq = IjSequence(sched)
    e0 = seq.expected_start
    reports = {
        "hoeffding_pm1": hoeffding_check(RademacherProcess(100), 100.0, [10, 20, 30, 40, 50, 60], T, SEED),
        "hoeffding_A1": hoeffding_check(A1IncrementProcess(8, sched.y0), 5.0, [1, 2, 3, 5, 8], T, SEED),
        "doob_max": doob_max_check(seq, [e0 * c for c in (1, 2, 4, 8, 16)], T, SEED),
    }
    l2 = [doob_L2_check(2, (1, 2), T, SEED), doob_L2_check(5, (2, 4), T, SEED), doob_L2_check(6, (1, 6), T, SEED)]
    total = time.perf_counter() - t0
    bad = {k: r.violations for k, r in reports.items()}
    bad_l2 = sum(not d.holds for d in l2)
    ok = not any(bad.values()) and not bad_l2 and total < 600
    criterion("concentration", ok, f"violations={bad} doob_L2_failures={bad_l2} time={total:.1f}s/<600s")
    assert ok


def test_determinism(criterion, tmp_path):
    runs = [
        ["simulate", "--trials", "2000", "--n-max", "512"],
        ["events", "--trials", "100"],
        ["growth", "--trials", "500", "--n-max", "1000", "--compare-N", "100"],
        ["chaos", "--trials", "500", "--R", "16,64"],
    ]
    mismatched = []
    for i, argv in enumerate(runs):
        trees = []
        for threads in ("1", "4"):
            out = tmp_path / f"{i}_{threads}"
            assert main([*argv, "--seed", "7", "--threads", threads, "--out", str(out)]) == 0
            trees.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        if trees[0] != trees[1]:
            mismatched.append(argv[0])
        json.loads(trees[0]["summary.json"])
    ok = not mismatched
    criterion("determinism", ok, f"{len(runs)} commands compared across --threads 1/4, mismatched={mismatched}")
    assert ok
