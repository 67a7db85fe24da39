import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmclab.errors import DomainError, MissingInputError, NonFiniteError, SizeError
from rmclab.gaussian import (
    CoefficientSeries,
    GaussianSequence,
    cauchy_coefficients,
    cauchy_recover,
    coeff_via_cauchy,
    eval_on_circle,
    exp_series_batch,
    exp_series_fast,
    exp_series_naive,
    exp_series_real,
    restricted_coefficient_table,
    sample_gaussian_batch,
    sample_gaussians,
)
from rmclab.partitions import A_oracle


# sampling


def test_sampling_is_deterministic():
    a = sample_gaussians(4, 123, 0)
    b = sample_gaussians(4, 123, 0)
    assert a.R == 4 and len(a.values) == 4
    assert np.array_equal(a.values, b.values)
    assert a.seed_path == (123, 0)


def test_trials_differ():
    assert not np.array_equal(sample_gaussians(4, 123, 0).values, sample_gaussians(4, 123, 1).values)


def test_draws_are_prefix_consistent():
    long = sample_gaussians(50, 9, 3).values
    short = sample_gaussians(10, 9, 3).values
    assert np.array_equal(long[:10], short)


def test_batch_matches_single_draws():
    batch = sample_gaussian_batch(16, 5, [2, 7, 11])
    for row, t in zip(batch, [2, 7, 11]):
        assert np.array_equal(row, sample_gaussians(16, 5, t).values)


def test_one_based_indexing():
    g = sample_gaussians(5, 1, 0)
    assert g[1] == g.values[0] and g[5] == g.values[4]
    with pytest.raises(MissingInputError):
        g[0]


@pytest.mark.parametrize("R", [0, -3])
def test_bad_R_is_size_error(R):
    with pytest.raises(SizeError):
        sample_gaussians(R, 0, 0)


def test_huge_R_is_size_error():
    with pytest.raises(SizeError):
        sample_gaussians(1 << 30, 0, 0)


def test_moments_of_x1():
    T = 100_000
    x = sample_gaussian_batch(3, 2024, range(T))
    assert np.all(np.abs(x.real.mean(axis=0)) < 5 / math.sqrt(T))
    assert np.all(np.abs(x.imag.mean(axis=0)) < 5 / math.sqrt(T))
    sq = np.abs(x[:, 0]) ** 2
    assert abs(sq.mean() - 1) < 5 * sq.std(ddof=1) / math.sqrt(T)
    # Re and Im carry variance 1/2 each
    assert abs(x[:, 0].real.var() - 0.5) < 0.02


# coefficient series


def test_zero_input_gives_one():
    a = exp_series_naive(np.zeros(8), 8).coeffs
    assert a[0] == 1 and np.all(a[1:] == 0)
    f = exp_series_fast(np.zeros(1024), 1024).coeffs
    assert f[0] == 1 and np.all(f[1:] == 0)


def test_exp_z():
    x = np.zeros(5)
    x[0] = 1
    a = exp_series_naive(x, 5).coeffs
    assert a[3] == pytest.approx(1 / 6, rel=1e-15)


def test_truncation_tag():
    x = sample_gaussians(4, 0, 0)
    assert exp_series_naive(x, 4).kind == "full"
    s = exp_series_naive(x, 10)
    assert s.kind == "truncated" and s.bound == 4
    assert s.N == 10


def test_coefficient_series_validates():
    with pytest.raises(DomainError):
        CoefficientSeries(np.array([2.0, 0.0]))
    with pytest.raises(NonFiniteError):
        CoefficientSeries(np.array([1.0, np.nan]))
    with pytest.raises(DomainError):
        CoefficientSeries(np.array([1.0]), kind="other")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**63), n=st.integers(0, 12))
def test_recurrence_matches_partition_oracle(seed, n):
    x = sample_gaussians(12, seed, 0)
    a = exp_series_naive(x, 12).coeffs
    ref = A_oracle(n, x)
    assert abs(a[n] - ref) <= 1e-9 * max(abs(ref), 1e-300)


def test_fast_matches_naive():
    for t in range(3):
        x = sample_gaussians(4096, 77, t)
        naive = exp_series_naive(x, 4096).coeffs
        fast = exp_series_fast(x, 4096).coeffs
        assert np.max(np.abs(fast - naive)) <= 1e-8 * (1 + np.max(np.abs(naive)))


def test_batch_methods_agree():
    x = sample_gaussian_batch(300, 3, range(4))
    np.testing.assert_allclose(exp_series_batch(x, 300, "fast"), exp_series_batch(x, 300, "naive"), atol=1e-11)
    with pytest.raises(DomainError):
        exp_series_batch(x, 10, "bogus")


def test_exp_series_real_examples():
    assert exp_series_real([1.0], 4)[4] == pytest.approx(1 / 24)
    assert exp_series_real([1.0, 0.5], 3)[3] == pytest.approx(2 / 3)
    for n in (5, 17, 30):
        assert exp_series_real(1.0 / np.arange(1, n + 1), n)[n] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        exp_series_real([1.0, -0.1], 3)


# circle evaluation and Cauchy recovery


def test_circle_zero_input():
    s = eval_on_circle(np.zeros(8), 8, 1.0, 1 << 16)
    np.testing.assert_allclose(s.values, 1.0)
    assert np.mean(np.abs(s.values) ** 2) == pytest.approx(1.0)


def test_circle_single_term():
    s = eval_on_circle(np.array([1.0]), 1, 1.0, 64)
    assert s.values[0] == pytest.approx(math.e)
    # theta = pi/2 gives exp(i)
    assert s.values[16] == pytest.approx(np.exp(1j))


def test_circle_folds_high_degree_terms():
    # R >= M: terms fold onto k mod M and still give the exact values at the nodes
    rng = np.random.default_rng(0)
    x = (rng.standard_normal(40) + 1j * rng.standard_normal(40)) * 0.3
    M = 16
    s = eval_on_circle(x, 40, 1.0, M)
    theta = 2 * np.pi * np.arange(M) / M
    k = np.arange(1, 41)
    direct = np.exp((x / np.sqrt(k) * np.exp(1j * np.outer(theta, k))).sum(axis=1))
    np.testing.assert_allclose(s.values, direct, rtol=1e-10)


def test_circle_errors():
    with pytest.raises(DomainError):
        eval_on_circle(np.zeros(4), 4, 1.0, 100)
    with pytest.raises(DomainError):
        eval_on_circle(np.zeros(4), 4, 0.0, 64)
    with pytest.raises(MissingInputError):
        eval_on_circle(np.zeros(4), 5, 1.0, 64)
    with pytest.raises(NonFiniteError):
        eval_on_circle(np.array([800.0]), 1, 1.0, 64)


def test_cauchy_exp_z():
    x = np.zeros(64)
    x[0] = 1
    s = eval_on_circle(x, 64, 1.0, 1024)
    assert coeff_via_cauchy(s, 3) == pytest.approx(1 / 6, abs=1e-8)
    assert coeff_via_cauchy(s, 0) == pytest.approx(1.0, abs=1e-12)


def test_cauchy_zero_input():
    s = eval_on_circle(np.zeros(8), 8, 1.0, 64)
    c = cauchy_coefficients(s, 8)
    assert c[0] == pytest.approx(1)
    np.testing.assert_allclose(c[1:], 0, atol=1e-15)


def test_cauchy_guards():
    s = eval_on_circle(np.zeros(8), 8, 1.0, 64)
    with pytest.raises(DomainError):
        coeff_via_cauchy(s, 9)
    tight = eval_on_circle(np.zeros(8), 8, 1.0, 8)
    with pytest.raises(DomainError):
        coeff_via_cauchy(tight, 2)


def test_cauchy_single_matches_fft_version():
    x = sample_gaussians(32, 4, 0)
    s = eval_on_circle(x, 32, 1.0, 256)
    c = cauchy_coefficients(s, 32)
    for n in (0, 5, 31):
        assert coeff_via_cauchy(s, n) == pytest.approx(c[n], abs=1e-12)


def test_cauchy_recover_matches_recurrence():
    x = sample_gaussians(256, 8, 0)
    coeffs, M = cauchy_recover(x, 256, 128)
    ref = exp_series_naive(x, 128).coeffs
    assert np.max(np.abs(coeffs - ref)) < 1e-6
    assert M >= 1024 and M & (M - 1) == 0


def test_cauchy_off_unit_radius():
    x = sample_gaussians(64, 8, 1)
    coeffs, _ = cauchy_recover(x, 64, 40, r=math.exp(1 / 64))
    np.testing.assert_allclose(coeffs, exp_series_naive(x, 40).coeffs, atol=1e-7)


# restricted table


def test_restricted_table_rows():
    x = sample_gaussians(10, 6, 0)
    t = restricted_coefficient_table(x, 10, 10)
    assert t.shape == (11, 11)
    np.testing.assert_allclose(t[10], exp_series_naive(x, 10).coeffs, atol=1e-13)
    # row 0 is the empty product
    assert t[0, 0] == 1 and np.all(t[0, 1:] == 0)
    # row 1: exp(X(1) z)
    np.testing.assert_allclose(t[1, 3], x[1] ** 3 / 6)


def test_gaussian_sequence_rejects_nonfinite():
    with pytest.raises(NonFiniteError):
        GaussianSequence(np.array([1.0, np.inf]))
