"""Tests for the mobility, compute-time, and link-rate models."""

import math

import numpy as np
import pytest
from scipy import stats

from codedconv.models import (
    Behavior,
    CommParams,
    WorkerProfile,
    advance_position,
    apply_straggler,
    comm_time,
    compute_load,
    data_rate,
    sample_compute_time,
    signal_power_dbm,
)


# ---------------------------------------------------------------------------
# mobility


def test_advance_position_example():
    got = advance_position([100.0, -50.0], [3.0, -4.0], 1.0)
    np.testing.assert_array_equal(got, [103.0, -54.0])


def test_advance_position_zero_dt():
    got = advance_position([1.0, 2.0], [9.0, 9.0], 0.0)
    np.testing.assert_array_equal(got, [1.0, 2.0])


# ---------------------------------------------------------------------------
# compute load and time


def test_compute_load_example():
    # (1024 + 1024) * log2(2048) = 2048 * 11
    assert compute_load(1024, 1024) == pytest.approx(2048 * 11.0)


def test_compute_load_coefficient_scales():
    assert compute_load(8, 8, coeff=2.0) == pytest.approx(2 * 16 * 4.0)


def test_compute_load_rejects_bad_sizes():
    with pytest.raises(ValueError):
        compute_load(0, 5)
    with pytest.raises(ValueError):
        compute_load(5, 5, coeff=0.0)


def test_sample_compute_time_mean_and_shift():
    # mean = alpha*c + c/mu; no sample below the deterministic shift.
    rng = np.random.default_rng(42)
    profile = WorkerProfile(mu=4e6, alpha=2.5e-7)
    load = 1e6
    samples = np.array([sample_compute_time(rng, load, profile) for _ in range(100_000)])
    expected_mean = profile.alpha * load + load / profile.mu
    assert expected_mean == pytest.approx(0.5)
    assert abs(samples.mean() - expected_mean) / expected_mean < 0.02
    assert samples.min() >= profile.alpha * load


def test_sample_compute_time_distribution_shape():
    # Shifted samples follow Exp(rate = mu/load): KS test at 1% significance.
    rng = np.random.default_rng(7)
    profile = WorkerProfile(mu=3e6, alpha=1 / 3e6)
    load = 5e5
    samples = np.array([sample_compute_time(rng, load, profile) for _ in range(20_000)])
    shifted = samples - profile.alpha * load
    result = stats.kstest(shifted, "expon", args=(0.0, load / profile.mu))
    assert result.pvalue > 0.01


def test_sample_compute_time_rejects_bad_load():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_compute_time(rng, 0.0, WorkerProfile(mu=1e6, alpha=0.0))


def test_worker_profile_validation():
    with pytest.raises(ValueError):
        WorkerProfile(mu=0.0, alpha=0.0)
    with pytest.raises(ValueError):
        WorkerProfile(mu=1e6, alpha=-1.0)


# ---------------------------------------------------------------------------
# link model


def test_signal_power_simplified_example():
    # S(1000 m) = 6 - 20*log10(1000) = -54 dBm
    comm = CommParams()
    assert signal_power_dbm(1000.0, comm) == pytest.approx(-54.0)


def test_data_rate_example():
    # At 1000 m: signal 10^-8.4 W over 1e-12 W noise in 1 MHz.
    comm = CommParams()
    rate = data_rate(1000.0, comm)
    snr = 10.0 ** ((-54.0 - 30.0) / 10.0) / 1e-12
    assert rate == pytest.approx(1e6 * math.log2(1 + snr))
    assert rate == pytest.approx(1.196e7, rel=1e-3)


def test_data_rate_monotone_in_distance():
    comm = CommParams()
    rates = [data_rate(d, comm) for d in (10, 100, 1000, 4000)]
    assert all(r1 > r2 for r1, r2 in zip(rates, rates[1:]))
    assert all(r > 0 for r in rates)


def test_data_rate_near_field_clamped():
    comm = CommParams()
    assert data_rate(0.0, comm) == data_rate(0.5, comm) == data_rate(1.0, comm)


def test_full_link_budget_model():
    comm = CommParams(use_full_model=True, tx_power_dbm=30.0,
                      wavelength_m=0.125, antenna_gain_dbi=2.0)
    want = (30.0 + 20 * math.log10(0.125) - 20 * math.log10(4 * math.pi)
            - 20 * math.log10(500.0) + 2.0)
    assert signal_power_dbm(500.0, comm) == pytest.approx(want)


def test_full_model_shadowing_needs_rng():
    comm = CommParams(use_full_model=True, shadow_sigma_db=2.0)
    with pytest.raises(ValueError):
        signal_power_dbm(100.0, comm)
    rng = np.random.default_rng(3)
    values = {signal_power_dbm(100.0, comm, rng) for _ in range(5)}
    assert len(values) > 1


def test_comm_time_example():
    # 1000 numbers at 8 bytes over 1e7 bit/s: 64000 bits -> 6.4 ms
    assert comm_time(1000, 1e7, payload_bytes=8) == pytest.approx(6.4e-3)


def test_comm_time_zero_numbers():
    assert comm_time(0, 1e6) == 0.0


def test_comm_time_rejects_bad_rate():
    with pytest.raises(ValueError):
        comm_time(10, 0.0)
    with pytest.raises(ValueError):
        comm_time(-1, 1e6)


# ---------------------------------------------------------------------------
# straggler behaviours


def test_apply_straggler_normal():
    assert apply_straggler(Behavior("normal"), 0.2, 1.0) == 0.2


def test_apply_straggler_delayed_example():
    assert apply_straggler(Behavior("delayed", factor=15.0), 0.2, 0.0) == pytest.approx(3.0)


def test_apply_straggler_failed():
    b = Behavior("failed", time=5.0)
    # Would finish at 6.1: lost.
    assert apply_straggler(b, 1.1, 5.0) is None
    # Finishes at 4.9: delivered.
    assert apply_straggler(b, 0.9, 4.0) == 0.9


def test_apply_straggler_leaves():
    b = Behavior("leaves", time=2.0)
    assert apply_straggler(b, 1.0, 1.5) is None
    assert apply_straggler(b, 0.5, 1.5) == 0.5


def test_apply_straggler_joins():
    b = Behavior("joins", time=3.0)
    assert apply_straggler(b, 0.5, 2.0) is None
    assert apply_straggler(b, 0.5, 3.0) == 0.5


def test_behavior_validation():
    with pytest.raises(ValueError):
        Behavior("warp")
    with pytest.raises(ValueError):
        Behavior("delayed", factor=0.5)
