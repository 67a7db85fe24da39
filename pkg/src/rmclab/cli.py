"""Command-line entry point: ``rmclab <command> [options]``.

Every command writes a ``summary.json`` (config echo, version tag, results)
and, with ``--format csv``, one CSV file per table into ``--out``.  Without
``--out`` the summary goes to stdout.  Exit codes: 0 success, 1 invariant
violation, 2 configuration error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .blocks import (
    DIAG_BUDGET,
    Thresholds,
    a1_increment_check,
    b_factor,
    compute_diagnostics,
    compute_Ij,
    submartingale_check,
    supermartingale_check,
)
from .campaign import (
    CampaignConfig,
    event_frequencies,
    growth_report,
    moment_curve,
    run_simulation,
)
from .checks import oracle_suite
from .concentration import (
    A1IncrementProcess,
    IjSequence,
    RademacherProcess,
    chaos_moment_estimate,
    doob_L2_check,
    doob_max_check,
    hoeffding_check,
)
from .errors import (
    ConfigError,
    ContractError,
    DomainError,
    InvariantViolation,
    MissingInputError,
    NonFiniteError,
    SizeError,
    UnsupportedConstraintError,
)
from .gaussian import exp_series_naive, sample_gaussians
from .partitions import decompose_series

log = logging.getLogger("rmclab")

VERSION_TAG = f"v{__version__}"

COMMANDS = ("simulate", "oracle-check", "moments", "decompose", "blocks", "chaos", "concentration", "events", "growth")

# per-command defaults for --trials and --n-max
_DEFAULTS = {
    "simulate": (1000, 1 << 13),
    "oracle-check": (1, 12),
    "moments": (20000, 1024),
    "decompose": (1, 16),
    "blocks": (1, 16),
    "chaos": (10000, 1),
    "concentration": (10000, 8),
    "events": (500, 16),
    "growth": (1000, 10000),
}


class Violation(Exception):
    """A command finished but found an invariant violation; outputs are still written."""


# --------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    g = shared.add_argument_group("shared")
    g.add_argument("--seed", type=_seed, default=0, help="master seed (u64)")
    g.add_argument("--trials", type=int, default=None)
    g.add_argument("--n-max", type=int, default=None)
    g.add_argument("--threads", type=int, default=0, help="0 = auto (RMC_THREADS, else CPU count)")
    g.add_argument("--out", type=Path, default=None, help="output directory")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--method", choices=("naive", "fast"), default="fast")
    g.add_argument("--zero-inputs", action="store_true", help="replace X by zeros (degenerate check)")
    g.add_argument("-v", "--verbose", action="store_true")
    s = shared.add_argument_group("schedule")
    s.add_argument("--ell", type=int, default=2)
    s.add_argument("--K", type=float, default=2.0)
    s.add_argument("--epsilon", type=float, default=0.25)
    s.add_argument("--C0", type=float, default=None, help="default 1 + 100 K")
    s.add_argument("--threshold-total", type=float, default=4.0)
    s.add_argument("--threshold-piece", type=float, default=1.0)
    s.add_argument("--threshold-scale", type=float, default=1.0, help="multiplier on every event threshold")

    parser = argparse.ArgumentParser(prog="rmclab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rmclab {VERSION_TAG}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[shared], help="A(n) on a log grid, moments per n")
    p.add_argument("--grid", type=_int_list, default=None, help="n values (default powers of two 8..8192)")
    p.add_argument("--no-per-trial", action="store_true", help="skip the per-trial table")

    p = sub.add_parser("oracle-check", parents=[shared], help="exact oracle comparisons")
    p.add_argument("--full", action="store_true", help="acceptance-size checks instead of quick ones")

    p = sub.add_parser("moments", parents=[shared], help="E|A(n)| against (log n)^(-1/4)")
    p.add_argument("--grid", type=_int_list, default=None)

    p = sub.add_parser("decompose", parents=[shared], help="A0..A3 pieces for one trial")
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--y0", type=int, default=None, help="default: the schedule's y0")

    p = sub.add_parser("blocks", parents=[shared], help="block schedule, b_j and one-trial diagnostics")
    p.add_argument("--trial", type=int, default=0)

    p = sub.add_parser("chaos", parents=[shared], help="moments of the integral of |F_R|^2")
    p.add_argument("--R", type=_int_list, default=[16, 64, 256])
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--blocks", type=int, default=20, help="median-of-means blocks")

    p = sub.add_parser("concentration", parents=[shared], help="Hoeffding and Doob checks")
    p.add_argument("--T-cap", type=float, default=5.0, help="variance cap for the A1 process")
    p.add_argument("--eps", type=_float_list, default=[1, 2, 3, 5, 8])
    p.add_argument("--martingale", action="store_true", help="also run the nested conditional-mean checks")
    p.add_argument("--outer", type=int, default=200)
    p.add_argument("--inner", type=int, default=2000)

    sub.add_parser("events", parents=[shared], help="event frequencies on the block schedule")

    p = sub.add_parser("growth", parents=[shared], help="max |A(n)| / (log n)^(3/4+eps) per trial")
    p.add_argument("--n0", type=int, default=3)
    p.add_argument("--compare-N", type=_int_list, default=[])
    p.add_argument("--constant", type=float, default=None)
    return parser


def _config(args, **overrides) -> CampaignConfig:
    trials, n_max = _DEFAULTS[args.command]
    kw: dict[str, Any] = dict(
        n_max=args.n_max if args.n_max is not None else n_max,
        trials=args.trials if args.trials is not None else trials,
        master_seed=args.seed,
        method=args.method,
        ell=args.ell,
        K=args.K,
        epsilon=args.epsilon,
        C0=args.C0,
        thresholds=Thresholds(args.threshold_total, args.threshold_piece, args.threshold_scale),
        threads=args.threads,
        zero_inputs=args.zero_inputs,
    )
    kw.update(overrides)
    return CampaignConfig(**kw)


# --------------------------------------------------------------------------
# output


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_outputs(args, config_echo: dict, results: dict, tables: dict[str, list[dict]]) -> None:
    summary = {"version": VERSION_TAG, "command": args.command, "config": config_echo, "results": results}
    if args.format == "json" or args.out is None:
        summary["tables"] = tables
    text = json.dumps(_plain(summary), indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(text)
        return
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "summary.json").write_text(text)
        if args.format == "csv":
            for name, rows in tables.items():
                path = args.out / f"{name}.csv"
                with path.open("w", newline="") as fh:
                    if not rows:
                        continue
                    w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                    w.writeheader()
                    for row in rows:
                        w.writerow({k: _cell(v) for k, v in row.items()})
    except OSError as exc:
        raise OSError(f"cannot write outputs under {args.out}: {exc}") from exc


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


# --------------------------------------------------------------------------
# commands


def cmd_simulate(args):
    cfg = _config(args, n_grid=tuple(args.grid) if args.grid else None)
    sim = run_simulation(cfg)
    tables = {"aggregate": sim.aggregate_rows()}
    if not args.no_per_trial:
        tables["trials"] = list(sim.trial_rows())
    ok = sim.second_moment_ok()
    m = sim.moments
    results = {
        "second_moment_within_5se": ok,
        "mean_abs_at_most_one": {n: bool(v <= 1 + 5 * s) for n, v, s in zip(sim.grid, m.mean_abs(), m.stderr_abs())},
    }
    return cfg.echo(), results, tables


def cmd_oracle_check(args):
    checks = oracle_suite(args.seed, quick=not args.full)
    for c in checks:
        log.info(c.line())
    rows = [{"check": c.name, "passed": c.passed, "value": float(c.value), "tolerance": float(c.tolerance)} for c in checks]
    # wall-clock figures stay out of the files so that reruns compare byte for byte
    details = {c.name: {k: v for k, v in c.detail.items() if "seconds" not in k} for c in checks}
    results = {"all_passed": all(c.passed for c in checks), "details": details}
    echo = {"master_seed": args.seed, "full": args.full}
    if not results["all_passed"]:
        return echo, results, {"checks": rows}, Violation("oracle check failed")
    return echo, results, {"checks": rows}


def cmd_moments(args):
    n_max = args.n_max if args.n_max is not None else _DEFAULTS["moments"][1]
    grid = tuple(args.grid) if args.grid else tuple(n for n in (16, 64, 256, 1024) if n <= n_max) or None
    cfg = _config(args, n_grid=grid)
    curve = moment_curve(cfg)
    results = {"degenerate": curve.degenerate, "monotone_within_2se": curve.monotone_within_2se}
    return cfg.echo(), results, {"moments": curve.rows, "ratios": curve.ratios}


def cmd_decompose(args):
    cfg = _config(args)
    sched = cfg.schedule()
    y0 = args.y0 if args.y0 is not None else sched.y0
    N = cfg.n_max
    x = np.zeros(N, dtype=complex) if cfg.zero_inputs else sample_gaussians(N, cfg.master_seed, args.trial).values
    A = exp_series_naive(x, N).coeffs
    pieces = decompose_series(x, y0, N)
    resid = np.abs(pieces.sum(axis=0) - A)
    rows = []
    for n in range(N + 1):
        row = {"n": n, "re_A": A[n].real, "im_A": A[n].imag}
        for r in range(4):
            row[f"re_A{r}"] = pieces[r, n].real
            row[f"im_A{r}"] = pieces[r, n].imag
        row["residual"] = resid[n]
        rows.append(row)
    tol = 1e-12 * (1 + float(np.abs(A).max()))
    results = {"y0": y0, "trial": args.trial, "max_residual": float(resid.max()), "tolerance": tol}
    echo = cfg.echo() | {"trial": args.trial, "y0": y0}
    if resid.max() > tol:
        return echo, results, {"decomposition": rows}, Violation(f"decomposition residual {resid.max():.3e} > {tol:.1e}")
    return echo, results, {"decomposition": rows}


def cmd_blocks(args):
    cfg = _config(args)
    sched = cfg.schedule()
    rows = []
    need = sched.y[-1]
    diag_ok = sched.n_hi <= DIAG_BUDGET
    if diag_ok:
        need = max(need, sched.n_hi)
    x = np.zeros(need, dtype=complex) if cfg.zero_inputs else sample_gaussians(need, cfg.master_seed, args.trial).values
    for j in range(sched.J + 1):
        row = {"j": j, "y": sched.y[j], "y_tilde": float(sched.y_tilde[j])}
        if j:
            bf = b_factor(sched, j)
            row["b"] = bf.value
            row["log_b"] = bf.log_value
        else:
            row["b"] = math.nan
            row["log_b"] = math.nan
        row["I"] = compute_Ij(x, sched, j) if sched.y[j] <= 1 << 16 else math.nan
        rows.append(row)
    b_ok = all(r["b"] <= 1 for r in rows[1:])
    results = {
        "ell": sched.ell, "K": sched.K, "epsilon": sched.epsilon, "C0": sched.C0,
        "X_prev": sched.X_prev, "X_ell": sched.X_ell, "J": sched.J, "J_ceiling": sched.J_ceiling,
        "T": sched.T_ell, "T1": sched.T1_ell, "all_b_at_most_one": b_ok, "trial": args.trial,
    }
    tables = {"schedule": rows}
    if diag_ok:
        diag = compute_diagnostics(x, sched)
        report = diag.bound_report()
        results["diagnostics"] = report
        tables["diagnostics"] = [
            {"n": n, "V": diag.V[n], "V_tilde": diag.V_tilde[n], "W": diag.W[n], "V2": diag.V2[n], "V2_tilde": diag.V2_tilde[n]}
            for n in range(sched.n_lo, sched.n_hi + 1)
        ]
    else:
        results["diagnostics"] = f"window end {sched.n_hi} exceeds the per-n diagnostics budget {DIAG_BUDGET}"
    return cfg.echo() | {"trial": args.trial}, results, tables


def cmd_chaos(args):
    trials = args.trials if args.trials is not None else _DEFAULTS["chaos"][0]
    rep = chaos_moment_estimate(args.R, args.q, args.r, trials, args.blocks, args.seed, args.zero_inputs)
    rows = []
    for i, R in enumerate(rep.R_grid):
        e = rep.estimates[i]
        row = {"R": R, "estimate": e.mean, "stderr": e.stderr, "shape": rep.bound_shape[i], "fitted_constant": rep.fitted_constants[i]}
        if rep.exact_means:
            row["exact_mean"] = rep.exact_means[i]
            row["relative_error"] = e.mean / rep.exact_means[i] - 1
        if rep.exact_relative_sd:
            row["exact_relative_sd_per_trial"] = rep.exact_relative_sd[i]
        rows.append(row)
    echo = {"master_seed": args.seed, "trials": trials, "q": args.q, "r": args.r, "blocks": args.blocks, "R": args.R, "zero_inputs": args.zero_inputs}
    return echo, {"fitted_spread": rep.spread}, {"chaos": rows}


def cmd_concentration(args):
    cfg = _config(args)
    sched = cfg.schedule()
    T = cfg.trials
    reports = {
        "hoeffding_pm1": hoeffding_check(RademacherProcess(100), 100.0, [10, 20, 30, 40, 50, 60], T, cfg.master_seed),
        "hoeffding_A1": hoeffding_check(A1IncrementProcess(cfg.n_max, sched.y0), args.T_cap, args.eps, T, cfg.master_seed),
    }
    seq = IjSequence(sched, cfg.zero_inputs)
    e0 = seq.expected_start
    reports["doob_max"] = doob_max_check(seq, [e0 * c for c in (1, 2, 4, 8, 16)], T, cfg.master_seed)
    tables = {name: r.rows() for name, r in reports.items()}
    results: dict[str, Any] = {name: {"violations": r.violations, **{k: v for k, v in r.extra.items() if k != "mc_start"}} for name, r in reports.items()}
    l2 = [doob_L2_check(2, (1, 2), T, cfg.master_seed, cfg.zero_inputs), doob_L2_check(5, (2, 4), T, cfg.master_seed, cfg.zero_inputs)]
    tables["doob_L2"] = [
        {"r": d.r, "block_lo": d.block[0], "block_hi": d.block[1], "lhs": d.lhs.mean, "lhs_stderr": d.lhs.stderr,
         "rhs": d.rhs, "holds": d.holds} for d in l2
    ]
    bad = sum(r.violations for r in reports.values()) + sum(not d.holds for d in l2)
    if args.martingale:
        checks = a1_increment_check(sched, cfg.n_max, args.outer, args.inner, cfg.master_seed)
        checks += supermartingale_check(sched, args.outer, args.inner, cfg.master_seed)
        checks += [submartingale_check(2 * b, b, args.outer, args.inner, cfg.master_seed) for b in (1, 2, 3, 4)]
        tables["martingale"] = [
            {"check": c.label, "estimate_re": complex(c.estimate).real, "estimate_im": complex(c.estimate).imag,
             "target": c.target, "stderr": c.stderr, "k_sigma": c.k_sigma, "passed": c.passed, "outer_fail": c.outer_fail}
            for c in checks
        ]
        bad += sum(not c.passed for c in checks)
    results["total_violations"] = bad
    echo = cfg.echo() | {"T_cap": args.T_cap, "eps": args.eps, "martingale": args.martingale}
    if bad:
        return echo, results, tables, Violation(f"{bad} concentration violations")
    return echo, results, tables


def cmd_events(args):
    cfg = _config(args)
    table = event_frequencies(cfg)
    results = {
        "trials": table.trials,
        "inclusion_failures": table.inclusion_failures,
        "union_bounds": table.union_bounds,
        "max_decomposition_error": table.max_decomposition_error,
        "consistent": table.consistent,
    }
    if not table.consistent:
        return cfg.echo(), results, {"events": table.rows}, Violation("event inclusions violated")
    return cfg.echo(), results, {"events": table.rows}


def cmd_growth(args):
    cfg = _config(args, n0=args.n0)
    rep = growth_report(cfg, args.constant, args.compare_N)
    results = {"summary": rep.summary(), "by_N": rep.by_N, "caveat": rep.caveat, "n0": rep.n0, "N": rep.N}
    rows = [{"trial": cfg.first_trial + i, "G": float(g)} for i, g in enumerate(rep.G)]
    return cfg.echo(), results, {"growth": rows}


_HANDLERS = {
    "simulate": cmd_simulate,
    "oracle-check": cmd_oracle_check,
    "moments": cmd_moments,
    "decompose": cmd_decompose,
    "blocks": cmd_blocks,
    "chaos": cmd_chaos,
    "concentration": cmd_concentration,
    "events": cmd_events,
    "growth": cmd_growth,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        out = _HANDLERS[args.command](args)
        write_outputs(args, *out[:3])
        if len(out) == 4:
            raise out[3]
    except (Violation, InvariantViolation, NonFiniteError) as exc:
        print(f"rmclab: invariant violation: {exc}", file=sys.stderr)
        return 1
    except SizeError as exc:
        print(f"rmclab: budget exceeded: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, DomainError, ContractError, MissingInputError, UnsupportedConstraintError) as exc:
        print(f"rmclab: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rmclab: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
