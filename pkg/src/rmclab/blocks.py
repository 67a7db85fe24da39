"""Block schedule and the martingale diagnostics built on it.

For a level ell and exponent K the window of interest is
n in (2^{(ell-1)^K}, 2^{ell^K}], cut by the geometric grid

    y~_j = 2^{ell^K} e^{j/ell} / 2^{K ell^{K-1}},   y_j = floor(y~_j).

Everything downstream (the V-family of variance proxies, W, the
supermartingale I_j, its one-step factor b_j, the dominating U_j and the
event indicators) is computed here from one Gaussian sequence.  All inner
restricted sums come from the restricted coefficient table, whose row beta
holds sum_{|lambda| = m, lambda_1 <= beta} a(lambda) for every m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import DomainError, InvariantViolation, MissingInputError, ScaleError
from .gaussian import (
    XLike,
    _as_values,
    _generator,
    eval_on_circle,
    restricted_coefficient_table,
    sample_gaussians,
)
from .partitions import PartitionConstraint, restricted_sum

__all__ = [
    "BlockSchedule",
    "BlockDiagnostics",
    "DiagnosticsRecord",
    "BFactor",
    "UjReport",
    "Thresholds",
    "EventRecord",
    "DIAG_BUDGET",
    "build_schedule",
    "compute_diagnostics",
    "compute_V",
    "compute_V_tilde",
    "compute_V_block",
    "compute_W",
    "compute_V2",
    "compute_V2_tilde",
    "compute_V2_block",
    "compute_Ij",
    "I_values",
    "b_factor",
    "compute_Uj",
    "evaluate_events",
    "pieces_from_table",
    "a1_increment_check",
    "supermartingale_check",
    "submartingale_check",
]

#: log2 of the largest X_ell a schedule may describe
SCHEDULE_LOG2_BUDGET = 1000.0
#: largest window end for which per-n diagnostics (an N x N table) are computed
DIAG_BUDGET = 4096


@dataclass(frozen=True)
class BlockSchedule:
    ell: int
    K: float
    epsilon: float
    C0: float
    X_prev: float
    X_ell: float
    y: tuple[int, ...]
    y_tilde: np.ndarray = field(repr=False)
    J: int
    T_ell: float
    T1_ell: float
    J_ceiling: int

    @property
    def y0(self) -> int:
        return self.y[0]

    @property
    def n_lo(self) -> int:
        """First integer of the window (X_prev, X_ell]."""
        return math.floor(self.X_prev) + 1

    @property
    def n_hi(self) -> int:
        return math.floor(self.X_ell)

    @property
    def log_y_tilde0(self) -> float:
        return math.log(2.0) * (self.ell**self.K - self.K * self.ell ** (self.K - 1))

    def prefactor(self, j: int) -> float:
        """(1 / y~_j) (y~_j / y~_0)^{-1/ell^K}, the normalisation of I_j."""
        return math.exp(-self.log_y_tilde0 - j / self.ell - (j / self.ell) / self.ell**self.K)

    def block_of(self, k: int) -> int:
        """The j >= 1 with y_{j-1} < k <= y_j (0 when k <= y_0)."""
        for j in range(1, self.J + 1):
            if self.y[j - 1] < k <= self.y[j]:
                return j
        if k <= self.y0:
            return 0
        raise DomainError(f"k={k} lies beyond y_J={self.y[-1]}")

    def far_threshold(self, j: int) -> float:
        """n must exceed this for block j to count in V~(n) (n / y_j > ell^{100K})."""
        log_thr = math.log(self.y[j]) + 100 * self.K * math.log(self.ell)
        return math.exp(log_thr) if log_thr < 700 else math.inf


def build_schedule(
    ell: int,
    K: float = 2.0,
    epsilon: float = 0.25,
    C0: float | None = None,
    max_log2: float = SCHEDULE_LOG2_BUDGET,
) -> BlockSchedule:
    """Deterministic scale parameters for level ``ell``.

    J is found by scanning for the first j with y_j >= X_ell and is then
    checked against ceil(K ell^K log 2).  ``C0`` defaults to 1 + 100 K.
    """
    if ell < 2:
        raise DomainError(f"ell must be at least 2, got {ell}")
    if K < 1:
        raise DomainError(f"K must be at least 1, got {K}")
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    log2_X = float(ell) ** K
    if log2_X > max_log2:
        raise ScaleError(f"X_ell = 2^{log2_X:.6g} exceeds the schedule budget 2^{max_log2:g}")
    if C0 is None:
        C0 = 1.0 + 100.0 * K
    with mpmath.workdps(int(log2_X * 0.302) + 30):
        mK = mpmath.mpf(K)
        X_ell = mpmath.power(2, mpmath.power(ell, mK))
        X_prev = mpmath.power(2, mpmath.power(ell - 1, mK))
        log_y0 = mpmath.log(2) * (mpmath.power(ell, mK) - mK * mpmath.power(ell, mK - 1))
        ys: list[int] = []
        logs: list[float] = []
        j = 0
        while True:
            lt = log_y0 + mpmath.mpf(j) / ell
            ys.append(int(mpmath.floor(mpmath.exp(lt))))
            logs.append(float(lt))
            if ys[-1] >= X_ell:
                break
            j += 1
        J = j
        J_ceiling = int(mpmath.ceil(mK * mpmath.power(ell, mK) * mpmath.log(2)))
        X_ell_f, X_prev_f = float(X_ell), float(X_prev)
    if J > J_ceiling:
        raise InvariantViolation(f"minimal J={J} exceeds ceil(K ell^K log 2)={J_ceiling}")
    T_ell = float(ell) ** 10
    return BlockSchedule(
        ell=ell,
        K=float(K),
        epsilon=float(epsilon),
        C0=float(C0),
        X_prev=X_prev_f,
        X_ell=X_ell_f,
        y=tuple(ys),
        y_tilde=np.exp(np.array(logs)),
        J=J,
        T_ell=T_ell,
        T1_ell=T_ell / (ell * math.log(ell)),
        J_ceiling=J_ceiling,
    )


# --------------------------------------------------------------------------
# V-family diagnostics


@dataclass(frozen=True)
class DiagnosticsRecord:
    n: int
    V: float
    V_tilde: float
    V_block: dict[int, float]
    W: float
    V2: float
    V2_tilde: float
    V2_block: dict[int, float]
    seed_path: tuple[int, int] = (0, 0)


@dataclass
class BlockDiagnostics:
    """Per-n arrays for n = 0..N; block arrays have one column per j = 1..J."""

    sched: BlockSchedule
    V: np.ndarray
    V_tilde: np.ndarray
    V_block: np.ndarray
    W: np.ndarray
    V2: np.ndarray
    V2_tilde: np.ndarray
    V2_block: np.ndarray
    seed_path: tuple[int, int] = (0, 0)

    @property
    def N(self) -> int:
        return self.V.shape[0] - 1

    def record(self, n: int) -> DiagnosticsRecord:
        J = self.sched.J
        return DiagnosticsRecord(
            n=n,
            V=float(self.V[n]),
            V_tilde=float(self.V_tilde[n]),
            V_block={j: float(self.V_block[n, j - 1]) for j in range(1, J + 1)},
            W=float(self.W[n]),
            V2=float(self.V2[n]),
            V2_tilde=float(self.V2_tilde[n]),
            V2_block={j: float(self.V2_block[n, j - 1]) for j in range(1, J + 1)},
            seed_path=self.seed_path,
        )

    def split_bound(self, second: bool = False) -> np.ndarray:
        """C0 (V~(n) + ell log ell sup_j V(n, y_j)) for every n."""
        s = self.sched
        vt, vb = (self.V2_tilde, self.V2_block) if second else (self.V_tilde, self.V_block)
        return s.C0 * (vt + s.ell * math.log(s.ell) * vb.max(axis=1))

    def bound_report(self, n_values=None) -> dict:
        """Slack of the three per-n inequalities over ``n_values`` (default: the window)."""
        s = self.sched
        if n_values is None:
            n_values = np.arange(s.n_lo, min(s.n_hi, self.N) + 1)
        n_values = np.asarray(n_values)
        split = self.split_bound()[n_values] - self.V[n_values]
        split2 = self.split_bound(second=True)[n_values] - self.V2[n_values]
        w_half = self.V2[n_values] / (2 * s.y0) - self.W[n_values]
        w_full = self.V2[n_values] / s.y0 - self.W[n_values]
        return {
            "split_holds": bool(np.all(split >= 0)),
            "split2_holds": bool(np.all(split2 >= 0)),
            "W_le_V2_over_2y0": bool(np.all(w_half >= 0)),
            "W_le_V2_over_y0": bool(np.all(w_full >= 0)),
            "min_split_slack": float(split.min()) if split.size else math.inf,
            "min_W_slack": float(w_half.min()) if w_half.size else math.inf,
        }


def _check_diag(sched: BlockSchedule, N: int) -> None:
    if N > DIAG_BUDGET:
        raise ScaleError(f"diagnostics up to n={N} exceed the budget n <= {DIAG_BUDGET}")


def _inputs(X: XLike, need: int) -> np.ndarray:
    x = _as_values(X)
    if x.shape[-1] < need:
        raise MissingInputError(f"need X(1..{need}), have R={x.shape[-1]}")
    return x


def compute_diagnostics(X: XLike, sched: BlockSchedule, N: int | None = None, table: np.ndarray | None = None) -> BlockDiagnostics:
    """V, V~, V(n, y_j), W and the V^(2) family for every n <= N (default: window end)."""
    if N is None:
        N = sched.n_hi
    _check_diag(sched, N)
    if table is None:
        table = restricted_coefficient_table(_inputs(X, N), N, N)
    P = np.abs(table[: N + 1, : N + 1]) ** 2
    J, y0 = sched.J, sched.y0
    V = np.zeros(N + 1)
    Vt = np.zeros(N + 1)
    Vb = np.zeros((N + 1, J))
    V2 = np.zeros(N + 1)
    V2t = np.zeros(N + 1)
    V2b = np.zeros((N + 1, J))
    W = np.zeros(N + 1)
    n_all = np.arange(N + 1)
    for k in range(y0 + 1, N + 1):
        j = sched.block_of(k)
        inner = P[k - 1, : N + 1 - k]
        inner2 = P[(k - 1) // 2, : N + 1 - k]
        V[k:] += inner / k
        V2[k:] += inner2 / k
        Vb[k:, j - 1] += inner
        V2b[k:, j - 1] += inner2
        far = n_all[k:] > sched.far_threshold(j)
        if far.any():
            Vt[k:][far] += inner[far] / k
            V2t[k:][far] += inner2[far] / k
        if 2 * k <= N:
            W[2 * k :] += P[k - 1, : N + 1 - 2 * k] / (2 * k * k)
    ys = np.array(sched.y[1:], dtype=float)
    Vb /= ys
    V2b /= ys
    seed_path = X.seed_path if hasattr(X, "seed_path") else (0, 0)
    return BlockDiagnostics(sched, V, Vt, Vb, W, V2, V2t, V2b, seed_path)


def _inner(n: int, k: int, X: XLike, bound: float, method: str) -> complex:
    """sum_{|lambda| = n - k, lambda_1 < bound} a(lambda)."""
    return restricted_sum(n - k, X, PartitionConstraint.parts_below(bound), method=method)


def _pair_sum(n: int, X: XLike, sched: BlockSchedule, ks, weight, half: bool, method: str) -> float:
    total = 0.0
    for k in ks:
        if k > n:
            break
        s = _inner(n, k, X, k / 2 if half else k, method)
        total += weight(k) * abs(s) ** 2
    return total


def _scalar(n: int, X: XLike, sched: BlockSchedule, method: str):
    if method not in ("auto", "enumerate", "series"):
        raise DomainError(f"unknown method {method!r}")
    _inputs(X, n)
    if method == "auto":
        method = "series"
    if method == "series":
        return None
    return method


def compute_V(n: int, X: XLike, sched: BlockSchedule, method: str = "auto") -> float:
    """V(n) = sum_{y0 < k <= n} (1/k) |sum_{|lambda|=n-k, lambda_1<k} a(lambda)|^2."""
    if _scalar(n, X, sched, method) is None:
        return float(compute_diagnostics(X, sched, N=n).V[n])
    return _pair_sum(n, X, sched, range(sched.y0 + 1, n + 1), lambda k: 1.0 / k, False, method)


def compute_V2(n: int, X: XLike, sched: BlockSchedule, method: str = "auto") -> float:
    """V^(2)(n): as V(n) with the inner constraint lambda_1 < k/2."""
    if _scalar(n, X, sched, method) is None:
        return float(compute_diagnostics(X, sched, N=n).V2[n])
    return _pair_sum(n, X, sched, range(sched.y0 + 1, n + 1), lambda k: 1.0 / k, True, method)


def _block_range(sched: BlockSchedule, j: int) -> range:
    if not 1 <= j <= sched.J:
        raise DomainError(f"block index must lie in 1..{sched.J}, got {j}")
    return range(sched.y[j - 1] + 1, sched.y[j] + 1)


def compute_V_block(n: int, j: int, X: XLike, sched: BlockSchedule, method: str = "auto") -> float:
    """V(n, y_j) = (1/y_j) sum_{y_{j-1} < k <= y_j} |inner sum|^2."""
    ks = _block_range(sched, j)
    if _scalar(n, X, sched, method) is None:
        return float(compute_diagnostics(X, sched, N=n).V_block[n, j - 1])
    return _pair_sum(n, X, sched, ks, lambda k: 1.0 / sched.y[j], False, method)


def compute_V2_block(n: int, j: int, X: XLike, sched: BlockSchedule, method: str = "auto") -> float:
    ks = _block_range(sched, j)
    if _scalar(n, X, sched, method) is None:
        return float(compute_diagnostics(X, sched, N=n).V2_block[n, j - 1])
    return _pair_sum(n, X, sched, ks, lambda k: 1.0 / sched.y[j], True, method)


def compute_V_tilde(n: int, X: XLike, sched: BlockSchedule, method: str = "auto") -> float:
    """V~(n): the part of V(n) from blocks with n / y_j > ell^{100K}."""
    if _scalar(n, X, sched, method) is None:
        return float(compute_diagnostics(X, sched, N=n).V_tilde[n])
    total = 0.0
    for j in range(1, sched.J + 1):
        if n > sched.far_threshold(j):
            total += _pair_sum(n, X, sched, _block_range(sched, j), lambda k: 1.0 / k, False, method)
    return total


def compute_V2_tilde(n: int, X: XLike, sched: BlockSchedule, method: str = "auto") -> float:
    if _scalar(n, X, sched, method) is None:
        return float(compute_diagnostics(X, sched, N=n).V2_tilde[n])
    total = 0.0
    for j in range(1, sched.J + 1):
        if n > sched.far_threshold(j):
            total += _pair_sum(n, X, sched, _block_range(sched, j), lambda k: 1.0 / k, True, method)
    return total


def compute_W(n: int, X: XLike, sched: BlockSchedule, method: str = "auto") -> float:
    """W(n) = sum_{y0 < k <= n/2} |sum_{|lambda|=n-2k, lambda_1<k} a(lambda)|^2 / (2k^2)."""
    if _scalar(n, X, sched, method) is None:
        return float(compute_diagnostics(X, sched, N=n).W[n])
    total = 0.0
    for k in range(sched.y0 + 1, n // 2 + 1):
        s = restricted_sum(n - 2 * k, X, PartitionConstraint.parts_below(k), method=method)
        total += abs(s) ** 2 / (2 * k * k)
    return total


# --------------------------------------------------------------------------
# I_j, b_j and U_j


def _quad_M(y: int) -> int:
    return 1 << max(8, (16 * max(y, 1) - 1).bit_length())


def I_values(X: np.ndarray, sched: BlockSchedule, j: int, M: int | None = None) -> np.ndarray:
    """I_j for each row of a stack of inputs at a fixed quadrature size."""
    y = sched.y[j]
    if M is None:
        M = _quad_M(y)
    samples = eval_on_circle(X, y, 1.0, M)
    return sched.prefactor(j) * np.mean(np.abs(samples.values) ** 2, axis=-1)


def compute_Ij(X: XLike, sched: BlockSchedule, j: int, quad_tol: float = 1e-10) -> float:
    """I_j = (1 / (2 pi y~_j)) (y~_j / y~_0)^{-1/ell^K} int_0^{2 pi} |F_{y_j}(e^{i t})|^2 dt.

    The integral is a mean over M equispaced points, M doubling until the
    relative change drops below ``quad_tol``.
    """
    if not 0 <= j <= sched.J:
        raise DomainError(f"j must lie in 0..{sched.J}, got {j}")
    y = sched.y[j]
    _check_diag(sched, y)
    x = _inputs(X, y)
    M = max(64, 1 << (2 * y - 1).bit_length())
    prev = float(I_values(x, sched, j, M))
    while True:
        M *= 2
        cur = float(I_values(x, sched, j, M))
        if abs(cur - prev) <= quad_tol * abs(cur) or M >= 1 << 22:
            return cur
        prev = cur


@dataclass(frozen=True)
class BFactor:
    value: float
    log_value: float
    harmonic_block: float

    @property
    def at_most_one(self) -> bool:
        return self.log_value <= 0.0


def b_factor(sched: BlockSchedule, j: int) -> BFactor:
    """b_j = exp(-1/ell - 1/ell^{K+1} + sum_{y_{j-1} < k <= y_j} 1/k)."""
    if not 1 <= j <= sched.J:
        raise DomainError(f"j must lie in 1..{sched.J}, got {j}")
    a, b = sched.y[j - 1], sched.y[j]
    if b - a <= 100_000:
        h = math.fsum(1.0 / k for k in range(a + 1, b + 1))
    else:
        with mpmath.workdps(40):
            h = float(mpmath.psi(0, b + 1) - mpmath.psi(0, a + 1))
    ell, K = sched.ell, sched.K
    log_b = -1.0 / ell - 1.0 / ell ** (K + 1) + h
    return BFactor(math.exp(log_b), log_b, h)


@dataclass(frozen=True)
class UjReport:
    j: int
    value: float
    tail_bound: float
    r_max: int
    beta_range: tuple[int, int]


def compute_Uj(X: XLike, sched: BlockSchedule, j: int, r_max: int, table: np.ndarray | None = None) -> UjReport:
    """U_j = (1/y_j) sum_{r=0}^{r_max} max_beta |sum_{|lambda|=r, lambda_1<=beta} a(lambda)|^2.

    beta runs over y_{j-1} <= beta <= y_j, one step wider than the open-left
    block so that every inner sum of V(n, y_j) (lambda_1 <= k - 1 with
    k = y_{j-1} + 1) is dominated term by term.  For j = 0 the maximum is
    replaced by beta = y_0.  ``tail_bound`` bounds the expected omitted tail
    r > r_max using the non-negative generating function at radius e^{1/y_j}.
    """
    if not 0 <= j <= sched.J:
        raise DomainError(f"j must lie in 0..{sched.J}, got {j}")
    if r_max < 1:
        raise DomainError(f"r_max must be at least 1, got {r_max}")
    hi = sched.y[j]
    lo = sched.y[j - 1] if j >= 1 else hi
    _check_diag(sched, max(hi, r_max))
    if table is None or table.shape[-2] <= hi or table.shape[-1] <= r_max:
        table = restricted_coefficient_table(_inputs(X, hi), hi, r_max)
    rows = np.abs(table[lo : hi + 1, : r_max + 1]) ** 2
    value = float(rows.max(axis=0).sum() / hi)
    rho = math.exp(1.0 / hi)
    log_gf = math.fsum(rho**k / k for k in range(1, hi + 1))
    copies = min(hi - lo + 1, 4)
    tail = copies * math.exp(log_gf - (r_max + 1) / hi) / (1 - 1 / rho) / hi
    return UjReport(j, value, tail, r_max, (lo, hi))


# --------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class Thresholds:
    """Event thresholds; ``scale`` multiplies every one of them."""

    total: float = 4.0
    piece: float = 1.0
    scale: float = 1.0


@dataclass
class EventRecord:
    B: bool
    B_r: tuple[bool, bool, bool, bool]
    exceed_count: int
    T: bool
    T_n: np.ndarray
    P1: bool
    P1_tilde: bool
    S_j: np.ndarray
    S: bool
    chaos_ok: bool
    T2: bool
    T2_n: np.ndarray
    P2: bool
    P2_tilde: bool
    sup_ratio: float
    sup_ratio_r: tuple[float, float, float, float]
    I: np.ndarray
    decomposition_error: float
    seed_path: tuple[int, int] = (0, 0)

    def inclusions(self) -> dict[str, bool]:
        """Per-trial set inclusions that must hold by construction."""
        return {
            "B_in_union_Br": (not self.B) or any(self.B_r),
            "notT_in_P1_or_P1tilde": self.T or self.P1 or self.P1_tilde,
            "notT2_in_P2_or_P2tilde": self.T2 or self.P2 or self.P2_tilde,
        }


def pieces_from_table(X: XLike, table: np.ndarray, y0: int, N: int) -> np.ndarray:
    """A, A0, A1, A2, A3 for n = 0..N from a restricted table with rows up to N."""
    x = _as_values(X)
    out = np.zeros((5, N + 1), dtype=complex)
    out[0] = table[N, : N + 1]
    out[1] = table[min(y0, N), : N + 1]
    for t in range(y0 + 1, N + 1):
        ct = x[t - 1] / math.sqrt(t)
        term = table[t - 1, : N + 1]
        for jm in range(1, N // t + 1):
            term = term * ct / jm
            out[1 + min(jm, 3), jm * t :] += term[: N + 1 - jm * t]
    return out


def evaluate_events(X: XLike, sched: BlockSchedule, thresholds: Thresholds = Thresholds()) -> EventRecord:
    """Event indicators for one trial over the window (X_prev, X_ell]."""
    N = sched.n_hi
    _check_diag(sched, max(N, sched.y[-1]))
    x = _inputs(X, max(N, sched.y[-1]))
    table = restricted_coefficient_table(x, N, N)
    pieces = pieces_from_table(x, table, sched.y0, N)
    diag = compute_diagnostics(x, sched, N, table=table)
    n = np.arange(sched.n_lo, N + 1)
    L = np.log(n) ** (0.75 + sched.epsilon)
    s = thresholds.scale
    ratio = np.abs(pieces[0, n]) / L
    ratios = [np.abs(pieces[1 + r, n]) / L for r in range(4)]
    ell, K = sched.ell, sched.K
    lk = ell ** (K / 2)
    t_bound = 2 * sched.C0 * sched.T_ell * lk * s
    T_n = diag.V[n] <= t_bound
    T2_n = diag.V2[n] <= t_bound
    I = np.array([compute_Ij(x, sched, j) for j in range(sched.J + 1)])
    S_j = I <= math.sqrt(sched.T1_ell) / lk * s
    resid = np.abs(pieces[0, n] - pieces[1:, n].sum(axis=0))
    return EventRecord(
        B=bool(np.any(ratio > thresholds.total * s)),
        B_r=tuple(bool(np.any(rr > thresholds.piece * s)) for rr in ratios),  # type: ignore[arg-type]
        exceed_count=int(np.sum(ratio > thresholds.total * s)),
        T=bool(T_n.all()),
        T_n=T_n,
        P1=bool(diag.V_block[n].max(initial=0.0) > sched.T1_ell * lk * s),
        P1_tilde=bool(diag.V_tilde[n].max(initial=0.0) > sched.T_ell * lk * s),
        S_j=S_j,
        S=bool(S_j.all()),
        chaos_ok=bool(I[0] <= sched.T1_ell**0.25 / lk * s),
        T2=bool(T2_n.all()),
        T2_n=T2_n,
        P2=bool(diag.V2_block[n].max(initial=0.0) > sched.T1_ell * lk * s),
        P2_tilde=bool(diag.V2_tilde[n].max(initial=0.0) > sched.T_ell * lk * s),
        sup_ratio=float(ratio.max(initial=0.0)),
        sup_ratio_r=tuple(float(rr.max(initial=0.0)) for rr in ratios),  # type: ignore[arg-type]
        I=I,
        decomposition_error=float(resid.max(initial=0.0)),
        seed_path=getattr(X, "seed_path", (0, 0)),
    )


# --------------------------------------------------------------------------
# nested Monte Carlo checks of the martingale structure


@dataclass
class PooledCheck:
    """Outer-pooled comparison of a conditional mean with its target.

    ``estimate`` averages the per-outer inner-MC estimates; ``stderr`` pools
    their conditional variances; ``outer_fail`` counts outers whose own
    estimate misses by more than ``k_sigma`` of its own standard error.
    """

    label: str
    estimate: complex
    target: float
    stderr: float
    k_sigma: float
    one_sided: bool
    outer_fail: int
    outer: int

    @property
    def deviation(self) -> float:
        d = self.estimate - self.target
        return -d.real if self.one_sided else abs(d)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.k_sigma * self.stderr + 1e-12 * (1 + abs(self.target))


def _pool(label, per_outer, per_var, target, k_sigma, one_sided=False) -> PooledCheck:
    per_outer = np.asarray(per_outer)
    per_var = np.asarray(per_var)
    O = per_outer.shape[0]
    est = per_outer.mean()
    se = math.sqrt(per_var.sum()) / O
    own = np.sqrt(per_var)
    dev = (target - per_outer.real) if one_sided else np.abs(per_outer - target)
    fails = int(np.sum(dev > k_sigma * own + 1e-12 * (1 + abs(target))))
    return PooledCheck(label, complex(est) if np.iscomplexobj(per_outer) else float(est), float(target), se, k_sigma, one_sided, fails, O)


def _inner_normals(master_seed: int, outer: int, stream: int, shape: tuple[int, ...]) -> np.ndarray:
    z = _generator(master_seed, outer, stream).standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def a1_increment_check(
    sched: BlockSchedule, n: int, outer: int = 200, inner: int = 2000, master_seed: int = 0, k_sigma: float = 5.0
) -> list[PooledCheck]:
    """E[(X(k)/sqrt k) S_k | X(1..k-1)] = 0 for every y0 < k <= n.

    S_k = sum_{|lambda|=n-k, lambda_1<k} a(lambda) is frozen by the outer draw
    and X(k) is resampled ``inner`` times.
    """
    out = []
    for k in range(sched.y0 + 1, n + 1):
        means, variances = [], []
        for o in range(outer):
            x = sample_gaussians(n, master_seed, o).values
            s_k = restricted_coefficient_table(x, k - 1, n - k)[k - 1, n - k]
            z = _inner_normals(master_seed, o, 1 + k, (inner,)) / math.sqrt(k) * s_k
            means.append(z.mean())
            variances.append(np.mean(np.abs(z - z.mean()) ** 2) / inner)
        out.append(_pool(f"A1 increment k={k}", means, variances, 0.0, k_sigma))
    return out


def supermartingale_check(
    sched: BlockSchedule, outer: int = 200, inner: int = 2000, master_seed: int = 0, k_sigma: float = 4.0
) -> list[PooledCheck]:
    """E[I_j | X(1..y_{j-1})] / I_{j-1} = b_j for every block j = 1..J."""
    out = []
    y = sched.y
    for j in range(1, sched.J + 1):
        ratios, variances = [], []
        lo, hi = y[j - 1], y[j]
        for o in range(outer):
            prefix = sample_gaussians(hi, master_seed, o).values
            prev = float(I_values(prefix[None, :], sched, j - 1, _quad_M(hi))[0])
            xs = np.broadcast_to(prefix, (inner, hi)).copy()
            if hi > lo:
                xs[:, lo:hi] = _inner_normals(master_seed, o, 1 + j, (inner, hi - lo))
            vals = I_values(xs, sched, j) / prev
            ratios.append(vals.mean())
            variances.append(vals.var() / inner)
        out.append(_pool(f"I_{j} supermartingale ratio", ratios, variances, b_factor(sched, j).value, k_sigma))
    return out


def submartingale_check(
    r: int, beta: int, outer: int = 200, inner: int = 2000, master_seed: int = 0, k_sigma: float = 4.0
) -> PooledCheck:
    """E[|S_{beta+1}| | X(1..beta)] >= |S_beta| for S_b = sum_{|lambda|=r, lambda_1<=b} a(lambda).

    Reported as the pooled mean of E[|S_{beta+1}|] - |S_beta| against 0, one-sided.
    """
    diffs, variances = [], []
    step = beta + 1
    for o in range(outer):
        x = sample_gaussians(step, master_seed, o).values
        row = restricted_coefficient_table(x, beta, r)[beta]
        cur = abs(row[r])
        w = _inner_normals(master_seed, o, 1, (inner,)) / math.sqrt(step)
        nxt = np.zeros(inner, dtype=complex)
        term = np.ones(inner, dtype=complex)
        for jm in range(0, r // step + 1):
            if jm:
                term = term * w / jm
            nxt += term * row[r - jm * step]
        vals = np.abs(nxt) - cur
        diffs.append(vals.mean())
        variances.append(vals.var() / inner)
    return _pool(f"submartingale r={r} beta={beta}", diffs, variances, 0.0, k_sigma, one_sided=True)
