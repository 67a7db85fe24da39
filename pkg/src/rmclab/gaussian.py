"""Gaussian inputs and the coefficient series of their exponential.

The random model is

    exp(sum_k X(k) z^k / sqrt(k)) = sum_n A(n) z^n

with X(k) independent standard complex Gaussians (real and imaginary parts
each of variance 1/2).  Inputs are drawn from a counter-based generator
(Philox keyed by the master seed, counter block set by the trial index), so
trial ``t`` of seed ``s`` is the same no matter which worker computes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import series
from .errors import DomainError, MissingInputError, NonFiniteError, SizeError

__all__ = [
    "GaussianSequence",
    "CoefficientSeries",
    "CircleSamples",
    "MAX_R",
    "sample_gaussians",
    "sample_gaussian_batch",
    "exp_series_naive",
    "exp_series_fast",
    "exp_series_batch",
    "exp_series_real",
    "eval_on_circle",
    "coeff_via_cauchy",
    "cauchy_coefficients",
    "cauchy_recover",
    "restricted_coefficient_table",
]

#: memory budget for a single input vector (complex128, 256 MiB)
MAX_R = 1 << 24

QUAD_M_CAP = 1 << 22


@dataclass(frozen=True)
class GaussianSequence:
    """X(1..R) together with the seed path that produced it."""

    values: np.ndarray
    seed_path: tuple[int, int] = (0, 0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1:
            raise ValueError("GaussianSequence values must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise NonFiniteError("GaussianSequence contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def R(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.R

    def __getitem__(self, k: int) -> complex:
        """X(k) with the 1-based index used throughout."""
        if not 1 <= k <= self.R:
            raise MissingInputError(f"X({k}) not available (R={self.R})")
        return self.values[k - 1]

    def truncated(self, R: int) -> "GaussianSequence":
        """Keep X(1..R), zero-padding if R exceeds the current length."""
        v = np.zeros(R, dtype=complex)
        m = min(R, self.R)
        v[:m] = self.values[:m]
        return GaussianSequence(v, self.seed_path)

    @classmethod
    def zeros(cls, R: int) -> "GaussianSequence":
        return cls(np.zeros(R, dtype=complex))


XLike = Union[GaussianSequence, Sequence[complex], np.ndarray]


def _as_values(X: XLike) -> np.ndarray:
    if isinstance(X, GaussianSequence):
        return X.values
    return np.asarray(X, dtype=complex)


def _key(master_seed: int) -> np.ndarray:
    if not 0 <= int(master_seed) < 2**64:
        raise DomainError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    return np.random.SeedSequence(int(master_seed)).generate_state(2, np.uint64)


def _generator(master_seed: int, trial_index: int, inner_index: int = 0) -> np.random.Generator:
    if trial_index < 0 or inner_index < 0:
        raise DomainError("trial and inner indices must be non-negative")
    counter = np.array([0, 0, inner_index, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=_key(master_seed), counter=counter))


def _check_R(R: int) -> None:
    if R < 1:
        raise SizeError(f"R must be at least 1, got {R}")
    if R > MAX_R:
        raise SizeError(f"R={R} exceeds the memory budget of {MAX_R}")


def sample_gaussians(R: int, master_seed: int, trial_index: int, inner_index: int = 0) -> GaussianSequence:
    """Draw X(1..R) for one trial.

    The draw for a larger ``R`` extends the draw for a smaller one, so the
    prefix X(1..R') is common to every R >= R'.  ``inner_index`` selects an
    independent stream for nested Monte Carlo (0 is the outer stream).
    """
    _check_R(R)
    z = _generator(master_seed, trial_index, inner_index).standard_normal((R, 2))
    z *= np.sqrt(0.5)
    return GaussianSequence(z[:, 0] + 1j * z[:, 1], (int(master_seed), int(trial_index)))


def sample_gaussian_batch(R: int, master_seed: int, trials: Sequence[int], inner_index: int = 0) -> np.ndarray:
    """Rows X(1..R) for each trial index in ``trials``, shape ``(len(trials), R)``."""
    _check_R(R)
    out = np.empty((len(trials), R), dtype=complex)
    for i, t in enumerate(trials):
        z = _generator(master_seed, int(t), inner_index).standard_normal((R, 2))
        out[i].real = z[:, 0]
        out[i].imag = z[:, 1]
    out *= np.sqrt(0.5)
    return out


@dataclass(frozen=True)
class CoefficientSeries:
    """Coefficients A(0..N) of an exponential series.

    ``kind`` is ``"full"`` when every X(k) with k <= N was used,
    ``"truncated"`` when only X(1..bound) entered (bound < N), and
    ``"restricted"`` for series of partitions with parts <= bound.
    """

    coeffs: np.ndarray
    kind: str = "full"
    bound: int | None = None

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if self.kind not in ("full", "truncated", "restricted"):
            raise DomainError(f"unknown series kind {self.kind!r}")
        if c.shape[-1] == 0 or np.any(c[..., 0] != 1):
            raise DomainError("the constant coefficient of an exponential must be 1")
        if not np.all(np.isfinite(c)):
            raise NonFiniteError("coefficient series contains non-finite entries")

    @property
    def N(self) -> int:
        return self.coeffs.shape[-1] - 1

    def __getitem__(self, n):
        return self.coeffs[n]

    def __len__(self) -> int:
        return self.coeffs.shape[-1]


def _series_input(X: XLike, N: int) -> tuple[np.ndarray, str, int | None]:
    if N < 0:
        raise SizeError(f"N must be non-negative, got {N}")
    x = _as_values(X)
    R = x.shape[-1]
    if R >= N:
        return x[..., :N], "full", None
    return x, "truncated", R


def _exponent(x: np.ndarray) -> np.ndarray:
    return x / np.sqrt(np.arange(1, x.shape[-1] + 1))


def exp_series_naive(X: XLike, N: int) -> CoefficientSeries:
    """A(0..N) from the recurrence n A(n) = sum_{k <= min(n, R)} sqrt(k) X(k) A(n-k)."""
    x, kind, bound = _series_input(X, N)
    if x.ndim != 1:
        raise ValueError("exp_series_naive takes a single sequence; use exp_series_batch")
    coeffs = series.exp_recurrence(_exponent(x), N + 1)
    return CoefficientSeries(coeffs.astype(complex), kind, bound)


def exp_series_fast(X: XLike, N: int) -> CoefficientSeries:
    """Same contract as :func:`exp_series_naive`, computed by divide and conquer.

    The recurrence is evaluated online with FFT block products, O(N log^2 N).
    Accepts a stack of sequences of shape ``(batch, R)`` as well.
    """
    x, kind, bound = _series_input(X, N)
    coeffs = series.exp_relaxed(_exponent(x).astype(complex), N + 1)
    return CoefficientSeries(coeffs, kind, bound)


def exp_series_batch(X: np.ndarray, N: int, method: str = "fast") -> np.ndarray:
    """Coefficient arrays for each row of ``X``; ``method`` is ``naive`` or ``fast``."""
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    if method == "fast":
        return exp_series_fast(X, N).coeffs
    if method == "naive":
        return np.stack([exp_series_naive(row, N).coeffs for row in X])
    raise DomainError(f"unknown method {method!r}")


def exp_series_real(c: Sequence[float], N: int) -> np.ndarray:
    """Coefficients of exp(sum_k c_k z^k) for non-negative real c (``c[0]`` multiplies z)."""
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise DomainError("exp_series_real requires non-negative coefficients")
    if N < 0:
        raise SizeError(f"N must be non-negative, got {N}")
    return series.exp_recurrence(c[:N], N + 1)


@dataclass(frozen=True)
class CircleSamples:
    """Values F_R(r e^{i theta_m}) at theta_m = 2 pi m / M (leading axes are a batch)."""

    values: np.ndarray
    radius: float
    M: int
    R: int
    extra: dict = field(default_factory=dict, compare=False)


def _is_pow2(M: int) -> bool:
    return M >= 1 and M & (M - 1) == 0


def eval_on_circle(X: XLike, R: int, r: float, M: int) -> CircleSamples:
    """Evaluate F_R = exp(sum_{k<=R} X(k) z^k / sqrt(k)) on M points of |z| = r.

    The exponent polynomial is evaluated at all points with one inverse FFT
    (terms with k >= M fold onto k mod M, which is exact at the roots of
    unity), then exponentiated pointwise.
    """
    if not _is_pow2(M):
        raise DomainError(f"M must be a power of two, got {M}")
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    x = _as_values(X)
    if R > x.shape[-1]:
        raise MissingInputError(f"R={R} exceeds the {x.shape[-1]} available inputs")
    k = np.arange(1, R + 1)
    p = x[..., :R] / np.sqrt(k) * float(r) ** k
    coeffs = np.zeros(x.shape[:-1] + (M,), dtype=complex)
    if R < M:
        coeffs[..., 1 : R + 1] = p
    else:
        flat = coeffs.reshape(-1, M)
        np.add.at(flat, (slice(None), k % M), p.reshape(-1, R))
    exponent = np.fft.ifft(coeffs, axis=-1) * M
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.exp(exponent)
    if not np.all(np.isfinite(values)):
        worst = float(np.max(exponent.real))
        raise NonFiniteError(f"exp overflow on the circle (max Re exponent {worst:.1f}, R={R}, r={r})")
    return CircleSamples(values, float(r), M, R)


def coeff_via_cauchy(samples: CircleSamples, n: int) -> complex:
    """Discretised Cauchy integral (1/M) sum_m F(r e^{i theta_m}) e^{-i n theta_m} r^{-n}."""
    if n < 0 or n > samples.R:
        raise DomainError(f"Cauchy recovery needs 0 <= n <= R, got n={n}, R={samples.R}")
    if samples.R > samples.M // 2:
        raise DomainError(f"alias guard: R={samples.R} exceeds M/2={samples.M // 2}")
    m = np.arange(samples.M)
    phase = np.exp(-2j * np.pi * ((n * m) % samples.M) / samples.M)
    return complex(np.mean(samples.values * phase, axis=-1) * samples.radius ** (-n))


def cauchy_coefficients(samples: CircleSamples, n_max: int) -> np.ndarray:
    """All Cauchy coefficients 0..n_max at once (one forward FFT)."""
    if n_max > samples.R:
        raise DomainError(f"Cauchy recovery needs n <= R, got n_max={n_max}, R={samples.R}")
    if samples.R > samples.M // 2:
        raise DomainError(f"alias guard: R={samples.R} exceeds M/2={samples.M // 2}")
    c = np.fft.fft(samples.values, axis=-1)[..., : n_max + 1] / samples.M
    return c * samples.radius ** (-np.arange(n_max + 1))


def cauchy_recover(
    X: XLike,
    R: int,
    n_max: int,
    r: float = 1.0,
    tol: float = 1e-8,
    M_cap: int = QUAD_M_CAP,
) -> tuple[np.ndarray, int]:
    """Coefficients 0..n_max of F_R by quadrature, doubling M until stable.

    Starts at M = max(2R, 1024) rounded up to a power of two and doubles
    until consecutive estimates differ by less than ``tol`` in every entry.
    Returns the final estimate and the M that produced it.
    """
    M = 1 << (max(2 * R, 1024) - 1).bit_length()
    prev = cauchy_coefficients(eval_on_circle(X, R, r, M), n_max)
    while True:
        M *= 2
        if M > M_cap:
            raise SizeError(f"quadrature did not settle to {tol} before M cap {M_cap}")
        cur = cauchy_coefficients(eval_on_circle(X, R, r, M), n_max)
        if np.max(np.abs(cur - prev)) < tol:
            return cur, M
        prev = cur


def restricted_coefficient_table(X: XLike, beta_max: int, m_max: int) -> np.ndarray:
    """Table G[beta, m] = sum over |lambda| = m with parts <= beta of a(lambda).

    Row beta holds the coefficients of exp(sum_{k <= beta} X(k) z^k / sqrt(k)),
    built from row beta - 1 by multiplying with exp(c_beta z^beta); total cost
    O(m_max^2 log beta_max).  Works on stacked inputs, giving shape
    ``(..., beta_max + 1, m_max + 1)``.
    """
    x = _as_values(X)
    if beta_max > x.shape[-1]:
        raise MissingInputError(f"need X(1..{beta_max}), have {x.shape[-1]}")
    c = _exponent(x[..., :beta_max])
    table = np.zeros(x.shape[:-1] + (beta_max + 1, m_max + 1), dtype=complex)
    row = np.zeros(x.shape[:-1] + (m_max + 1,), dtype=complex)
    row[..., 0] = 1.0
    table[..., 0, :] = row
    for beta in range(1, beta_max + 1):
        cb = c[..., beta - 1 : beta]
        new = row.copy()
        term = row
        j = 1
        while j * beta <= m_max:
            shifted = np.zeros_like(row)
            shifted[..., beta:] = term[..., :-beta]
            term = shifted * cb / j
            new += term
            j += 1
        row = new
        table[..., beta, :] = row
    return table
