"""Brute-force partition sums: the exact ground truth for small n.

A partition is stored as its non-increasing tuple of parts.  For a
Gaussian sequence X the monomial

    a(lambda) = prod_k (X(k) / sqrt(k))^{m_k} / m_k!

sums to A(n) over |lambda| = n, and E|a(lambda)|^2 = prod_k 1/(k^{m_k} m_k!).
Constrained sums (bounds on the largest part and on its multiplicity) also
have a generating-function route through the restricted coefficient table,
used for n beyond the enumeration cap and for cross-checks.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from .errors import DomainError, MissingInputError, SizeError, UnsupportedConstraintError
from .gaussian import XLike, _as_values, exp_series_real, restricted_coefficient_table

__all__ = [
    "ENUM_CAP",
    "Partition",
    "PartitionConstraint",
    "enumerate_partitions",
    "partition_count",
    "a_coeff",
    "a_second_moment",
    "A_oracle",
    "decompose",
    "decompose_series",
    "restricted_sum",
    "restricted_sums",
    "restricted_second_moment",
]

ENUM_CAP = 60

TOP_ANY = "any"
TOP_ONE = "=1"
TOP_TWO = "=2"
TOP_THREE_PLUS = ">=3"
_TOP_CHOICES = (TOP_ANY, TOP_ONE, TOP_TWO, TOP_THREE_PLUS)


@dataclass(frozen=True)
class Partition:
    parts: tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p <= 0 for p in parts):
            raise ValueError(f"parts must be positive: {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"parts must be non-increasing: {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    @property
    def largest(self) -> int:
        """lambda_1, with the empty partition assigned 0."""
        return self.parts[0] if self.parts else 0

    @cached_property
    def multiplicities(self) -> dict[int, int]:
        return dict(Counter(self.parts))

    @property
    def top_multiplicity(self) -> int:
        return self.multiplicities.get(self.largest, 0)

    def __len__(self) -> int:
        return len(self.parts)


@dataclass(frozen=True)
class PartitionConstraint:
    """Admissible partitions, by the size and multiplicity of the largest part.

    ``max_part`` bounds lambda_1 (``lambda_1 < max_part`` when ``strict``,
    otherwise ``<=``).  ``min_top`` demands ``lambda_1 > min_top``.
    ``top_multiplicity`` restricts m_{lambda_1} to ``"=1"``, ``"=2"``,
    ``">=3"`` or ``"any"``.  The empty partition has lambda_1 = 0: it meets
    every max-part bound but no ``min_top`` or multiplicity requirement.
    """

    max_part: int | None = None
    strict: bool = False
    min_top: int | None = None
    top_multiplicity: str = TOP_ANY

    def __post_init__(self):
        if self.top_multiplicity not in _TOP_CHOICES:
            raise DomainError(f"top_multiplicity must be one of {_TOP_CHOICES}")
        if self.min_top is not None and self.min_top < 0:
            raise DomainError("min_top must be non-negative")
        if self.max_part is not None and self.max_part < (1 if self.strict else 0):
            raise DomainError("max part bound excludes even the empty partition")
        hi = self.top_limit
        if self.min_top is not None and hi is not None and hi <= self.min_top:
            raise DomainError(f"inconsistent constraint: lambda_1 > {self.min_top} and lambda_1 <= {hi}")

    @classmethod
    def parts_at_most(cls, beta: int) -> "PartitionConstraint":
        return cls(max_part=beta)

    @classmethod
    def parts_below(cls, k: float) -> "PartitionConstraint":
        """lambda_1 < k for a possibly fractional bound k (e.g. k/2)."""
        return cls(max_part=math.ceil(k) - 1)

    @classmethod
    def piece(cls, r: int, y0: int) -> "PartitionConstraint":
        """Constraint selecting the partitions summed in A_r(n)."""
        if r == 0:
            return cls(max_part=y0)
        top = {1: TOP_ONE, 2: TOP_TWO, 3: TOP_THREE_PLUS}[r]
        return cls(min_top=y0, top_multiplicity=top)

    @property
    def top_limit(self) -> int | None:
        """Largest admissible lambda_1, or None when unbounded."""
        if self.max_part is None:
            return None
        return self.max_part - 1 if self.strict else self.max_part

    @property
    def max_part_only(self) -> bool:
        return self.min_top is None and self.top_multiplicity == TOP_ANY

    def multiplicity_ok(self, m: int) -> bool:
        t = self.top_multiplicity
        return t == TOP_ANY or (t == TOP_ONE and m == 1) or (t == TOP_TWO and m == 2) or (t == TOP_THREE_PLUS and m >= 3)

    def admits(self, lam: Partition) -> bool:
        top = lam.largest
        hi = self.top_limit
        if hi is not None and top > hi:
            return False
        if not lam.parts:
            return self.min_top is None and self.top_multiplicity == TOP_ANY
        if self.min_top is not None and top <= self.min_top:
            return False
        return self.multiplicity_ok(lam.top_multiplicity)


NO_CONSTRAINT = PartitionConstraint()


def _parts_upto(n: int, bound: int) -> Iterator[tuple[int, ...]]:
    """Partitions of n into parts <= bound, in reverse lexicographic order."""
    if n == 0:
        yield ()
        return
    for first in range(min(n, bound), 0, -1):
        for rest in _parts_upto(n - first, first):
            yield (first,) + rest


def _check_cap(n: int) -> None:
    if n > ENUM_CAP:
        raise SizeError(f"enumeration is capped at n={ENUM_CAP}, got n={n}")


def enumerate_partitions(n: int, c: PartitionConstraint = NO_CONSTRAINT) -> Iterator[Partition]:
    """Stream every partition of n satisfying ``c`` exactly once."""
    _check_cap(n)
    if n < 0:
        return
    if n == 0:
        if c.admits(Partition(())):
            yield Partition(())
        return
    hi = n if c.top_limit is None else min(n, c.top_limit)
    lo = 1 if c.min_top is None else c.min_top + 1
    for top in range(hi, lo - 1, -1):
        for m in range(1, n // top + 1):
            if not c.multiplicity_ok(m):
                continue
            head = (top,) * m
            for rest in _parts_upto(n - m * top, top - 1):
                yield Partition(head + rest)


def partition_count(n: int) -> int:
    """p(n) from Euler's pentagonal-number recurrence (independent of the enumerator)."""
    p = [1] + [0] * n
    for m in range(1, n + 1):
        total, j = 0, 1
        while True:
            g1 = j * (3 * j - 1) // 2
            if g1 > m:
                break
            sign = 1 if j % 2 else -1
            total += sign * p[m - g1]
            g2 = j * (3 * j + 1) // 2
            if g2 <= m:
                total += sign * p[m - g2]
            j += 1
        p[m] = total
    return p[n]


def a_coeff(lam: Partition, X: XLike) -> complex:
    """a(lambda) = prod_k (X(k)/sqrt(k))^{m_k} / m_k!."""
    x = _as_values(X)
    if lam.largest > x.shape[-1]:
        raise MissingInputError(f"partition needs X({lam.largest}), have R={x.shape[-1]}")
    out = 1.0 + 0j
    for k, m in lam.multiplicities.items():
        out *= (x[k - 1] / math.sqrt(k)) ** m / math.factorial(m)
    return complex(out)


def a_second_moment(lam: Partition) -> float:
    """E|a(lambda)|^2 = prod_k 1 / (k^{m_k} m_k!)."""
    out = 1.0
    for k, m in lam.multiplicities.items():
        out /= k**m * math.factorial(m)
    return out


def _csum(values) -> complex:
    re, im = [], []
    for v in values:
        re.append(v.real)
        im.append(v.imag)
    return complex(math.fsum(re), math.fsum(im))


def A_oracle(n: int, X: XLike) -> complex:
    """A(n) as the exact sum of a(lambda) over all partitions of n."""
    return restricted_sum(n, X, NO_CONSTRAINT, method="enumerate")


def decompose(n: int, X: XLike, y0: int) -> tuple[complex, complex, complex, complex]:
    """(A0, A1, A2, A3): the pieces of A(n) split by lambda_1 <= y0 or the top multiplicity."""
    if y0 < 1:
        raise DomainError(f"y0 must be at least 1, got {y0}")
    _check_cap(n)
    buckets: list[list[complex]] = [[], [], [], []]
    for lam in enumerate_partitions(n):
        if lam.largest <= y0:
            r = 0
        else:
            r = min(lam.top_multiplicity, 3)
        buckets[r].append(a_coeff(lam, X))
    return tuple(_csum(b) for b in buckets)  # type: ignore[return-value]


def restricted_sums(X: XLike, c: PartitionConstraint, m_max: int) -> np.ndarray:
    """Constrained sums for every m = 0..m_max via the generating-function route.

    With G[beta] the coefficients of exp(sum_{k<=beta} X(k) z^k/sqrt(k)), the
    partitions with largest part t repeated exactly j times contribute
    (c_t^j / j!) z^{j t} G[t-1]; max-part-only constraints are just G[beta].
    """
    x = _as_values(X)
    hi = m_max if c.top_limit is None else min(c.top_limit, m_max)
    if c.max_part_only:
        beta = max(hi, 0)
        if beta > x.shape[-1]:
            raise MissingInputError(f"need X(1..{beta}), have R={x.shape[-1]}")
        return restricted_coefficient_table(x, beta, m_max)[..., beta, :]
    lo = (c.min_top or 0) + 1
    if hi > x.shape[-1]:
        raise MissingInputError(f"need X(1..{hi}), have R={x.shape[-1]}")
    out = np.zeros(x.shape[:-1] + (m_max + 1,), dtype=complex)
    if hi < lo:
        return out
    table = restricted_coefficient_table(x, hi - 1, m_max)
    for t in range(lo, hi + 1):
        ct = x[..., t - 1 : t] / math.sqrt(t)
        term = table[..., t - 1, :]
        for j in range(1, m_max // t + 1):
            term = term * ct / j
            if c.multiplicity_ok(j):
                out[..., j * t :] += term[..., : m_max + 1 - j * t]
    return out


def restricted_sum(m: int, X: XLike, c: PartitionConstraint = NO_CONSTRAINT, method: str = "auto") -> complex:
    """Sum of a(lambda) over admissible partitions of m (zero for m < 0).

    ``method`` is ``"enumerate"``, ``"series"`` or ``"auto"`` (enumeration up to
    the cap, series beyond).
    """
    if m < 0:
        return 0j
    if method == "auto":
        method = "enumerate" if m <= ENUM_CAP else "series"
    if method == "enumerate":
        return _csum(a_coeff(lam, X) for lam in enumerate_partitions(m, c))
    if method == "series":
        return complex(restricted_sums(X, c, m)[..., m])
    raise DomainError(f"unknown method {method!r}")


def _second_moment_series(n: int, c: PartitionConstraint) -> float:
    """Deterministic twin of :func:`restricted_sums` with c_k -> 1/k and weights 1/(t^j j!)."""
    hi = n if c.top_limit is None else min(c.top_limit, n)
    if c.max_part_only:
        beta = max(hi, 0)
        w = 1.0 / np.arange(1, beta + 1)
        return float(exp_series_real(w, n)[n])
    lo = (c.min_top or 0) + 1
    total = 0.0
    for t in range(lo, hi + 1):
        base = exp_series_real(1.0 / np.arange(1, t), n)
        for j in range(1, n // t + 1):
            if c.multiplicity_ok(j):
                total += base[n - j * t] / (t**j * math.factorial(j))
    return total


def restricted_second_moment(n: int, c: PartitionConstraint = NO_CONSTRAINT, method: str = "auto") -> float:
    """E|sum over admissible partitions of n of a(lambda)|^2, exactly.

    Distinct partitions give orthogonal monomials, so this is the sum of
    :func:`a_second_moment` over admissible partitions.  ``"enumerate"`` does
    that literally; ``"series"`` reads it off exp(sum_{k<=beta} z^k/k).
    """
    if n < 0:
        return 0.0
    if method == "auto":
        method = "enumerate" if n <= ENUM_CAP else "series"
    if method == "enumerate":
        return math.fsum(a_second_moment(lam) for lam in enumerate_partitions(n, c))
    if method == "series":
        return _second_moment_series(n, c)
    raise UnsupportedConstraintError(f"no path {method!r} for constraint {c}")


def decompose_series(X: XLike, y0: int, N: int) -> np.ndarray:
    """A0..A3 for every n = 0..N at once, shape ``(..., 4, N + 1)``."""
    if y0 < 1:
        raise DomainError(f"y0 must be at least 1, got {y0}")
    return np.stack([restricted_sums(X, PartitionConstraint.piece(r, y0), N) for r in range(4)], axis=-2)
