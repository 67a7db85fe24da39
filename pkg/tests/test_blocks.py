import math

import numpy as np
import pytest

from rmclab.blocks import (
    Thresholds,
    a1_increment_check,
    b_factor,
    build_schedule,
    compute_diagnostics,
    compute_Ij,
    compute_Uj,
    compute_V,
    compute_V2,
    compute_V2_block,
    compute_V2_tilde,
    compute_V_block,
    compute_V_tilde,
    compute_W,
    evaluate_events,
    pieces_from_table,
    submartingale_check,
    supermartingale_check,
)
from rmclab.errors import DomainError, ScaleError
from rmclab.gaussian import exp_series_naive, restricted_coefficient_table, sample_gaussians
from rmclab.partitions import decompose


@pytest.fixture(scope="module")
def desk():
    return build_schedule(2, 2)


# schedule


def test_desk_schedule(desk):
    assert desk.y == (1, 1, 2, 4, 7, 12, 20)
    assert desk.J == 6 == desk.J_ceiling
    assert desk.X_prev == 2 and desk.X_ell == 16
    assert (desk.n_lo, desk.n_hi) == (3, 16)
    assert desk.T_ell == 1024
    assert desk.T1_ell == pytest.approx(1024 / (2 * math.log(2)))
    assert desk.C0 == 201


def test_schedule_grid_is_geometric(desk):
    ratios = desk.y_tilde[1:] / desk.y_tilde[:-1]
    np.testing.assert_allclose(ratios, math.exp(0.5))
    assert desk.y_tilde[0] == pytest.approx(1.0)
    assert all(math.floor(t + 1e-12) == y for t, y in zip(desk.y_tilde, desk.y))


def test_J_is_minimal():
    for ell, K in [(2, 2), (3, 2), (4, 1.5), (5, 2)]:
        s = build_schedule(ell, K)
        assert s.y[-1] >= s.X_ell
        assert s.y[-2] < s.X_ell
        assert s.J <= s.J_ceiling


def test_schedule_budget_and_domain():
    with pytest.raises(ScaleError):
        build_schedule(3, 25)
    with pytest.raises(DomainError):
        build_schedule(1, 2)
    with pytest.raises(DomainError):
        build_schedule(2, 0.5)


def test_block_of(desk):
    assert desk.block_of(1) == 0
    assert desk.block_of(2) == 2
    assert desk.block_of(5) == 4
    assert desk.block_of(20) == 6
    with pytest.raises(DomainError):
        desk.block_of(21)


# b_j


def test_b1_closed_form(desk):
    b = b_factor(desk, 1)
    assert abs(b.value - math.exp(-5 / 8)) < 1e-12
    assert b.harmonic_block == 0


def test_desk_b_at_most_one(desk):
    assert all(b_factor(desk, j).at_most_one for j in range(1, desk.J + 1))


def test_large_ell_profile_b_at_most_one():
    s = build_schedule(40, 1.2)
    logs = [b_factor(s, j).log_value for j in range(1, s.J + 1)]
    assert max(logs) <= 0


def test_b_is_ratio_of_expected_I(desk):
    # E I_j = prefactor(j) exp(H_{y_j}); the ratio of consecutive means is b_j
    def mean_I(j):
        return desk.prefactor(j) * math.exp(math.fsum(1 / k for k in range(1, desk.y[j] + 1)))

    for j in range(1, desk.J + 1):
        assert mean_I(j) / mean_I(j - 1) == pytest.approx(b_factor(desk, j).value, rel=1e-12)


def test_b_factor_domain(desk):
    with pytest.raises(DomainError):
        b_factor(desk, 0)


# I_j


def test_I_zero_inputs(desk):
    x = np.zeros(20)
    assert compute_Ij(x, desk, 2) == pytest.approx(math.exp(-5 / 4), rel=1e-12)
    for j in range(desk.J + 1):
        assert compute_Ij(x, desk, j) == pytest.approx(desk.prefactor(j), rel=1e-12)


def test_I_matches_coefficient_sum(desk):
    # Parseval: (1/2pi) int |F_y|^2 = sum_n |coefficients of F_y|^2
    x = sample_gaussians(20, 3, 0)
    j = 4
    y = desk.y[j]
    coeffs = exp_series_naive(x.truncated(y), 40 * y).coeffs
    want = desk.prefactor(j) * np.sum(np.abs(coeffs) ** 2)
    assert compute_Ij(x, desk, j) == pytest.approx(want, rel=1e-8)


# V-family


def test_V_zero_inputs(desk):
    x = np.zeros(16)
    assert compute_V(5, x, desk) == pytest.approx(0.2)
    assert compute_W(10, x, desk) == pytest.approx(0.02)
    assert compute_W(11, x, desk) == 0


@pytest.mark.parametrize("n", [3, 7, 12, 16])
def test_series_and_enumeration_agree(desk, n):
    x = sample_gaussians(16, 21, 0)
    for fn in (compute_V, compute_V2, compute_W, compute_V_tilde, compute_V2_tilde):
        assert fn(n, x, desk, "series") == pytest.approx(fn(n, x, desk, "enumerate"), rel=1e-10, abs=1e-14)
    for j in range(1, desk.J + 1):
        for fn in (compute_V_block, compute_V2_block):
            assert fn(n, j, x, desk, "series") == pytest.approx(fn(n, j, x, desk, "enumerate"), rel=1e-10, abs=1e-14)


def test_diagnostic_inequalities(desk):
    for t in range(20):
        x = sample_gaussians(16, 8, t)
        d = compute_diagnostics(x, desk)
        rep = d.bound_report()
        assert rep["split_holds"] and rep["split2_holds"] and rep["W_le_V2_over_y0"]
        # y0 = 1 on the desk schedule, so the halved form holds as well
        assert rep["W_le_V2_over_2y0"]


def test_diagnostics_record(desk):
    x = sample_gaussians(16, 8, 0)
    d = compute_diagnostics(x, desk)
    rec = d.record(10)
    assert rec.V == d.V[10] and set(rec.V_block) == set(range(1, desk.J + 1))


def test_block_split_of_V(desk):
    # V(n) = sum_j y_j V(n, y_j) / k-weights: check the unweighted totals instead
    x = sample_gaussians(16, 9, 0)
    d = compute_diagnostics(x, desk)
    ys = np.array(desk.y[1:], dtype=float)
    for n in range(desk.n_lo, 17):
        assert d.V[n] <= (d.V_block[n] * ys).sum() + 1e-12


def test_diagnostics_budget():
    s = build_schedule(3, 3)
    with pytest.raises(ScaleError):
        compute_diagnostics(np.zeros(10), s)


# U_j


def test_Uj_dominates_block_V(desk):
    x = sample_gaussians(20, 4, 0)
    d = compute_diagnostics(x, desk)
    for j in range(1, desk.J + 1):
        u = compute_Uj(x, desk, j, 16)
        for n in range(desk.n_lo, 17):
            assert d.V_block[n, j - 1] <= u.value + 1e-12


def test_Uj_zero_inputs(desk):
    u = compute_Uj(np.zeros(20), desk, 3, 10)
    assert u.value == pytest.approx(1 / desk.y[3])
    assert u.beta_range == (2, 4)
    assert u.tail_bound > 0


# events and pieces


def test_pieces_from_table_match_enumeration(desk):
    x = sample_gaussians(16, 2, 0)
    table = restricted_coefficient_table(x, 16, 16)
    pieces = pieces_from_table(x, table, desk.y0, 16)
    for n in range(17):
        np.testing.assert_allclose(pieces[1:, n], decompose(n, x, desk.y0), atol=1e-13)


def test_event_inclusions_every_trial(desk):
    for t in range(40):
        rec = evaluate_events(sample_gaussians(20, 6, t), desk)
        assert all(rec.inclusions().values())
        assert rec.decomposition_error < 1e-12
        assert rec.seed_path == (6, t)


def test_event_thresholds_scale(desk):
    x = sample_gaussians(20, 6, 0)
    tight = evaluate_events(x, desk, Thresholds(scale=1e-9))
    loose = evaluate_events(x, desk, Thresholds(scale=1e9))
    assert tight.B and all(tight.B_r[r] or tight.sup_ratio_r[r] == 0 for r in range(4))
    assert not loose.B and not any(loose.B_r) and loose.T and loose.S


# nested martingale checks (small sizes; the acceptance suite runs the full ones)


def test_a1_increment_small(desk):
    for c in a1_increment_check(desk, 6, outer=20, inner=300, master_seed=3):
        assert c.passed


def test_supermartingale_small(desk):
    checks = supermartingale_check(desk, outer=15, inner=200, master_seed=3)
    assert len(checks) == desk.J
    assert all(c.passed for c in checks)
    # block 1 is empty (y_0 = y_1) so the ratio is exactly b_1
    assert checks[0].estimate == pytest.approx(math.exp(-5 / 8), rel=1e-12)


def test_submartingale_small():
    c = submartingale_check(4, 2, outer=20, inner=300, master_seed=3)
    assert c.passed and c.estimate > 0
