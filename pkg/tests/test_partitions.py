import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmclab.errors import DomainError, MissingInputError, SizeError
from rmclab.gaussian import exp_series_naive, exp_series_real, sample_gaussians
from rmclab.partitions import (
    ENUM_CAP,
    A_oracle,
    Partition,
    PartitionConstraint,
    a_coeff,
    a_second_moment,
    decompose,
    decompose_series,
    enumerate_partitions,
    partition_count,
    restricted_second_moment,
    restricted_sum,
    restricted_sums,
)


def _x(*vals):
    return np.array(vals, dtype=complex)


# the Partition type


def test_partition_fields():
    lam = Partition((3, 3, 1))
    assert lam.size == 7 and lam.largest == 3
    assert lam.multiplicities == {3: 2, 1: 1}
    assert lam.top_multiplicity == 2
    assert sum(k * m for k, m in lam.multiplicities.items()) == lam.size


def test_empty_partition():
    lam = Partition()
    assert lam.size == 0 and lam.largest == 0 and lam.top_multiplicity == 0


@pytest.mark.parametrize("parts", [(1, 2), (0,), (2, -1)])
def test_partition_rejects_bad_parts(parts):
    with pytest.raises(ValueError):
        Partition(parts)


# enumeration


def test_counts_match_pentagonal_recurrence():
    for n in range(31):
        assert sum(1 for _ in enumerate_partitions(n)) == partition_count(n)


def test_known_counts():
    assert partition_count(5) == 7
    assert partition_count(60) == 966467


def test_enumeration_of_zero():
    assert [lam.parts for lam in enumerate_partitions(0)] == [()]


def test_enumeration_unique_and_valid():
    seen = set()
    for lam in enumerate_partitions(12):
        assert lam.size == 12
        assert lam.parts not in seen
        seen.add(lam.parts)


def test_three_threes():
    c = PartitionConstraint(min_top=2, top_multiplicity=">=3")
    assert [lam.parts for lam in enumerate_partitions(9, c)] == [(3, 3, 3)]


def test_enumeration_cap():
    with pytest.raises(SizeError):
        next(enumerate_partitions(ENUM_CAP + 1))


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(0, 18),
    max_part=st.one_of(st.none(), st.integers(1, 12)),
    strict=st.booleans(),
    min_top=st.one_of(st.none(), st.integers(0, 6)),
    top=st.sampled_from(["any", "=1", "=2", ">=3"]),
)
def test_constrained_enumeration_is_filtered_full_enumeration(n, max_part, strict, min_top, top):
    try:
        c = PartitionConstraint(max_part, strict, min_top, top)
    except DomainError:
        return
    got = sorted(lam.parts for lam in enumerate_partitions(n, c))
    want = sorted(lam.parts for lam in enumerate_partitions(n) if c.admits(lam))
    assert got == want


def test_inconsistent_constraint():
    with pytest.raises(DomainError):
        PartitionConstraint(max_part=3, min_top=3)
    with pytest.raises(DomainError):
        PartitionConstraint(top_multiplicity="=4")


def test_parts_below_fractional():
    assert PartitionConstraint.parts_below(5).top_limit == 4
    assert PartitionConstraint.parts_below(2.5).top_limit == 2


# a(lambda)


def test_a_coeff_examples():
    x = _x(0.7 - 0.2j, 1.3j)
    assert a_coeff(Partition(), x) == 1
    assert a_coeff(Partition((1, 1)), x) == pytest.approx(x[0] ** 2 / 2)
    assert a_coeff(Partition((2,)), x) == pytest.approx(x[1] / math.sqrt(2))
    with pytest.raises(MissingInputError):
        a_coeff(Partition((3,)), x)


def test_a_second_moment_examples():
    assert a_second_moment(Partition((1, 1))) == 0.5
    assert a_second_moment(Partition((2,))) == 0.5
    assert a_second_moment(Partition((3, 3, 3))) == pytest.approx(1 / 162)


def test_second_moments_sum_to_one():
    for n in range(26):
        assert math.fsum(a_second_moment(lam) for lam in enumerate_partitions(n)) == pytest.approx(1, abs=1e-12)


def test_second_moment_by_monte_carlo():
    # E|a(lambda)|^2 for lambda = (2, 1, 1)
    lam = Partition((2, 1, 1))
    vals = np.array([abs(a_coeff(lam, sample_gaussians(2, 31, t))) ** 2 for t in range(20000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - a_second_moment(lam)) < 5 * se


# A(n) and its pieces


def test_A_oracle_small():
    x = _x(0.3 + 0.1j, -0.8j, 1.1)
    assert A_oracle(0, x) == 1
    assert A_oracle(1, x) == x[0]
    assert A_oracle(2, x) == pytest.approx(x[0] ** 2 / 2 + x[1] / math.sqrt(2))


def test_decompose_n3_y0_1():
    x = _x(0.3 + 0.1j, -0.8j, 1.1)
    A0, A1, A2, A3 = decompose(3, x, 1)
    assert A0 == pytest.approx(x[0] ** 3 / 6)
    assert A1 == pytest.approx(x[2] / math.sqrt(3) + x[1] * x[0] / math.sqrt(2))
    assert A2 == 0 and A3 == 0


def test_decompose_n9_y0_2():
    x = sample_gaussians(9, 5, 0)
    A3 = decompose(9, x, 2)[3]
    assert A3 == pytest.approx(x[3] ** 3 / (3**1.5 * 6))


def test_decompose_below_y0():
    x = sample_gaussians(6, 5, 1)
    A0, A1, A2, A3 = decompose(4, x, 5)
    assert A0 == pytest.approx(A_oracle(4, x)) and A1 == A2 == A3 == 0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**40), y0=st.integers(1, 6))
def test_decompose_sums_to_A(seed, y0):
    x = sample_gaussians(16, seed, 0)
    a = exp_series_naive(x, 16).coeffs
    series = decompose_series(x, y0, 16)
    for n in range(17):
        parts = decompose(n, x, y0)
        assert abs(sum(parts) - a[n]) < 1e-12
        np.testing.assert_allclose(series[:, n], parts, atol=1e-13)


def test_restricted_sum_conventions():
    x = _x(0.5, 0.25)
    c = PartitionConstraint.parts_below(2)
    assert restricted_sum(-1, x, c) == 0
    assert restricted_sum(0, x, c) == 1
    assert restricted_sum(2, x, c) == pytest.approx(x[0] ** 2 / 2)


def test_restricted_sum_paths_agree():
    x = sample_gaussians(20, 13, 0)
    for c in [
        PartitionConstraint.parts_at_most(4),
        PartitionConstraint.parts_below(3.5),
        PartitionConstraint.piece(1, 3),
        PartitionConstraint.piece(2, 2),
        PartitionConstraint.piece(3, 1),
    ]:
        series = restricted_sums(x, c, 20)
        for m in range(21):
            assert restricted_sum(m, x, c, "enumerate") == pytest.approx(series[m], abs=1e-13)
        assert restricted_sum(17, x, c, "series") == pytest.approx(series[17], abs=1e-13)


def test_restricted_second_moment_examples():
    assert restricted_second_moment(3, PartitionConstraint.parts_at_most(1)) == pytest.approx(1 / 6)
    assert restricted_second_moment(3, PartitionConstraint.parts_at_most(2)) == pytest.approx(2 / 3)
    c = PartitionConstraint(min_top=2, top_multiplicity=">=3")
    assert restricted_second_moment(9, c) == pytest.approx(1 / 162)


def test_restricted_second_moment_paths_agree():
    for y0 in (1, 2, 5, 9):
        c = PartitionConstraint.parts_at_most(y0)
        gf = exp_series_real(1.0 / np.arange(1, y0 + 1), 30)
        for n in range(31):
            e = restricted_second_moment(n, c, "enumerate")
            assert abs(e - restricted_second_moment(n, c, "series")) < 1e-12
            assert abs(e - gf[n]) < 1e-12
    for r in (1, 2, 3):
        c = PartitionConstraint.piece(r, 2)
        for n in (0, 7, 15, 24):
            assert restricted_second_moment(n, c, "enumerate") == pytest.approx(
                restricted_second_moment(n, c, "series"), abs=1e-13
            )


def test_restricted_second_moment_beyond_cap():
    # series path handles n past the enumeration cap for max-part constraints
    v = restricted_second_moment(200, PartitionConstraint.parts_at_most(200))
    assert v == pytest.approx(1.0, abs=1e-10)


def test_pieces_have_expected_second_moments():
    # E|A0 + A1 + A2 + A3|^2 splits by orthogonality
    for n in (10, 20):
        total = sum(restricted_second_moment(n, PartitionConstraint.piece(r, 3)) for r in range(4))
        assert total == pytest.approx(1.0, abs=1e-12)
