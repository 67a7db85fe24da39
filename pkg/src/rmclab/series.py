"""Truncated power-series arithmetic on numpy arrays.

Every routine works along the last axis, so a stack of series with shape
``(batch, length)`` is handled in one call.  Products go through the FFT;
``exp`` and ``inv`` use Newton iteration, giving O(N log N) cost overall.

Newton's ``exp`` goes through ``1/g``; when the series has near-zeros on the
unit circle the FFT rounding is amplified by sup|1/g| and the top
coefficients are lost.  ``exp_relaxed`` evaluates the exponential recurrence
by divide and conquer instead and keeps the recurrence's accuracy at
O(N log^2 N) cost.
"""

from __future__ import annotations

import numpy as np

__all__ = ["mul", "inv", "log", "exp", "exp_relaxed", "exp_recurrence"]

# below this length a direct convolution beats the FFT round trip
_DIRECT_CUTOFF = 32


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def _pad(a: np.ndarray, n: int) -> np.ndarray:
    m = a.shape[-1]
    if m >= n:
        return a[..., :n]
    width = [(0, 0)] * (a.ndim - 1) + [(0, n - m)]
    return np.pad(a, width)


def mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Product of two series truncated to ``n`` coefficients."""
    a = np.asarray(a)[..., :n]
    b = np.asarray(b)[..., :n]
    la, lb = a.shape[-1], b.shape[-1]
    if la == 0 or lb == 0:
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (n,)
        return np.zeros(shape, dtype=np.result_type(a, b, complex))
    if min(la, lb) <= _DIRECT_CUTOFF:
        out_shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (n,)
        out = np.zeros(out_shape, dtype=np.result_type(a, b, float))
        if la < lb:
            a, b, la, lb = b, a, lb, la
        for j in range(lb):
            if j >= n:
                break
            stop = min(n, j + la)
            out[..., j:stop] += b[..., j : j + 1] * a[..., : stop - j]
        return out
    size = _next_pow2(la + lb - 1)
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        prod = np.fft.ifft(np.fft.fft(a, size) * np.fft.fft(b, size), size)
    else:
        prod = np.fft.irfft(np.fft.rfft(a, size) * np.fft.rfft(b, size), size)
    return _pad(prod, n)


def inv(g: np.ndarray, n: int) -> np.ndarray:
    """Multiplicative inverse of ``g`` modulo ``z**n``; needs ``g[..., 0] != 0``."""
    g = np.asarray(g)
    h = 1.0 / g[..., :1]
    m = 1
    while m < n:
        m2 = min(2 * m, n)
        e = mul(g, h, m2)
        # e = 1 + O(z^m) exactly; dropping the low part removes its rounding noise
        e[..., :m] = 0
        h = _pad(h, m2) - mul(h, e, m2)
        m = m2
    return h


def log(g: np.ndarray, n: int) -> np.ndarray:
    """Logarithm of ``g`` (with ``g[..., 0] == 1``) modulo ``z**n``."""
    g = _pad(np.asarray(g), n)
    if n <= 1:
        return np.zeros_like(g, dtype=np.result_type(g, float))
    k = np.arange(1, n)
    deriv = g[..., 1:] * k
    q = mul(deriv, inv(g, n - 1), n - 1)
    out = np.zeros(g.shape[:-1] + (n,), dtype=np.result_type(q, float))
    out[..., 1:] = q / k
    return out


def exp(f: np.ndarray, n: int) -> np.ndarray:
    """Exponential of ``f`` (zero constant term) modulo ``z**n`` by Newton iteration."""
    f = _pad(np.asarray(f), n)
    dtype = np.result_type(f, float)
    g = np.ones(f.shape[:-1] + (1,), dtype=dtype)
    m = 1
    while m < n:
        m2 = min(2 * m, n)
        d = f[..., :m2] - log(g, m2)
        # f - log g vanishes below z^m
        d[..., :m] = 0
        g = _pad(g, m2) + mul(g, d, m2)
        m = m2
    return g


def exp_recurrence(c: np.ndarray, n: int) -> np.ndarray:
    """Exponential via ``m e_m = sum_k k c_k e_{m-k}``; O(n * len(c)) and 1-D only.

    ``c[0]`` is the coefficient of ``z**1``.
    """
    c = np.asarray(c)
    out = np.zeros(n, dtype=np.result_type(c, float))
    if n == 0:
        return out
    out[0] = 1.0
    r = c.shape[-1]
    b = c * np.arange(1, r + 1)
    for m in range(1, n):
        top = min(m, r)
        out[m] = np.dot(b[:top], out[m - 1 : m - top - 1 if m - top - 1 >= 0 else None : -1]) / m
    return out


# block length below which exp_relaxed finishes with the plain recurrence
_RELAXED_BASE = 64


def exp_relaxed(c: np.ndarray, n: int) -> np.ndarray:
    """Exponential via ``m e_m = sum_k k c_k e_{m-k}`` by online divide and conquer.

    ``c[..., 0]`` is the coefficient of ``z**1``.  Contributions of the left
    half of each range to the right half are added with one FFT product, so
    every pair (j, m) with j < m is accounted for exactly once.
    """
    c = np.asarray(c)
    dtype = np.result_type(c, float)
    batch = c.shape[:-1]
    b = np.zeros(batch + (n,), dtype=dtype)
    r = min(c.shape[-1], n - 1) if n > 0 else 0
    b[..., 1 : r + 1] = c[..., :r] * np.arange(1, r + 1)
    out = np.zeros(batch + (n,), dtype=dtype)
    if n == 0:
        return out
    acc = np.zeros_like(out)
    out[..., 0] = 1.0

    def solve(lo: int, hi: int) -> None:
        if hi - lo <= _RELAXED_BASE:
            if not batch:
                for m in range(max(lo, 1), hi):
                    out[m] = (acc[m] + np.dot(b[m - lo : 0 : -1], out[lo:m])) / m
                return
            for m in range(max(lo, 1), hi):
                if m > lo:
                    acc[..., m] += np.einsum("...i,...i->...", b[..., m - lo : 0 : -1], out[..., lo:m])
                out[..., m] = acc[..., m] / m
            return
        mid = (lo + hi) // 2
        solve(lo, mid)
        w = mul(out[..., lo:mid], b[..., : hi - lo], hi - lo)
        acc[..., mid:hi] += w[..., mid - lo :]
        solve(mid, hi)

    solve(0, n)
    return out
