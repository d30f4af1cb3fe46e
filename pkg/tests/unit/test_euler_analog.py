"""Tests for the uncoupled damped Euler system."""

from __future__ import annotations

import numpy as np
import pytest

from wavebreak.core.damping import DampingSpec
from wavebreak.core.errors import DomainError, IntegrationFailure, NonPositiveDensityError
from wavebreak.solvers.characteristics import InitialData
from wavebreak.solvers.euler_analog import burgers_breaking_time, run_euler_analog


@pytest.fixture
def compressive() -> InitialData:
    # n0 = 1/2 and V0' = -1 at x = 0
    return InitialData.drifting_sine(0.5, slope=1.0, drift=0.0)


def test_burgers_time_from_slope(compressive):
    assert burgers_breaking_time(compressive) == pytest.approx(1.0, rel=1e-9)
    assert burgers_breaking_time(InitialData.zero_velocity_sine(0.5)) == float("inf")


def test_undamped_breaks_at_burgers_time(compressive, undamped):
    run = run_euler_analog(compressive, undamped, 3.0, N=32)
    assert run.verdict.is_blowup
    assert run.verdict.time == pytest.approx(1.0, abs=1e-4)


def test_zero_velocity_stays_at_rest(undamped):
    run = run_euler_analog(InitialData.zero_velocity_sine(0.5), undamped, 2.0, N=16)
    assert run.verdict.is_smooth
    np.testing.assert_array_equal(run.final.V, 0.0)


def test_quadratic_damping_keeps_the_center_bounded(compressive, quadratic):
    # On x = 0 the ratio q / n - eps * n is conserved: here q = n (n - 5/2).
    run = run_euler_analog(compressive, quadratic, 10.0, N=32, snapshot_count=11)
    assert run.verdict.is_smooth
    for snap in run.snapshots:
        n = snap.n[0]
        assert snap.q[0] == pytest.approx(n * (n - 2.5), abs=1e-5)
    assert run.final.n[0] == pytest.approx(2.5, abs=1e-3)


def test_weak_damping_still_breaks(compressive):
    spec = DampingSpec.power_law(0.25, epsilon=0.5)
    run = run_euler_analog(compressive, spec, 20.0, N=32)
    assert run.verdict.is_blowup
    assert run.verdict.time < 20.0


def test_vacuum_rejected(undamped):
    with pytest.raises(NonPositiveDensityError):
        run_euler_analog(InitialData.zero_velocity_sine(1.5), undamped, 1.0, N=16)


def test_needs_enough_characteristics(compressive, undamped):
    with pytest.raises(DomainError, match="at least 16"):
        run_euler_analog(compressive, undamped, 1.0, N=8)


@pytest.fixture
def dense_drift() -> InitialData:
    return InitialData.drifting_sine(0.95, slope=1.0, drift=0.5)


def test_quadratic_damping_does_not_prevent_breaking(dense_drift, quadratic):
    run = run_euler_analog(dense_drift, quadratic, 30.0, N=128)
    assert run.verdict.is_blowup
    assert 0.9 < run.verdict.time < 1.05


@pytest.mark.slow
def test_quadratic_breaking_time_converges(dense_drift, quadratic):
    coarse = run_euler_analog(dense_drift, quadratic, 30.0, N=128)
    fine = run_euler_analog(dense_drift, quadratic, 30.0, N=256)
    assert fine.verdict.is_blowup
    assert fine.verdict.time == pytest.approx(coarse.verdict.time, rel=2e-2)


@pytest.mark.slow
def test_fast_drift_ends_with_a_verdict_or_a_failure(quadratic):
    data = InitialData.drifting_sine(0.0, slope=1.0, drift=3.0)
    try:
        run = run_euler_analog(data, quadratic, 30.0, N=256)
    except IntegrationFailure as exc:
        assert "at t=" in str(exc)
    else:
        assert run.verdict.is_blowup or run.verdict.is_smooth
