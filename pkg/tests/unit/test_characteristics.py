"""Tests for the characteristic ensemble and the coupled field solver."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from wavebreak.core.damping import DampingSpec
from wavebreak.core.errors import DomainError, ImminentCrossingError, NonPositiveDensityError
from wavebreak.core.integrator import StepControl
from wavebreak.solvers.affine import AffineState, integrate_affine
from wavebreak.solvers.characteristics import (
    Closure,
    DomainMode,
    FieldStepper,
    InitialData,
    InitialDataKind,
    characteristic_conics,
    energy_audit,
    reconstruct_sigma,
    run_field,
    seed_ensemble,
    spacing_floor,
    step_field,
    v_at_blowup,
)


@pytest.fixture
def gentle() -> InitialData:
    return InitialData.zero_velocity_sine(0.3)


@pytest.fixture
def steep() -> InitialData:
    return InitialData.zero_velocity_sine(0.95)


class TestInitialData:
    def test_zero_velocity_density(self):
        data = InitialData.zero_velocity_sine(0.4)
        ens = seed_ensemble(data, 32)
        np.testing.assert_allclose(ens.density, 1.0 - 0.4 * np.cos(ens.x), atol=1e-14)
        np.testing.assert_array_equal(ens.V, 0.0)
        assert data.kind is InitialDataKind.ZERO_VELOCITY_SINE

    def test_drifting_kind(self):
        assert InitialData.drifting_sine(0.5).kind is InitialDataKind.DRIFTING_SINE

    def test_periodic_seeds_skip_the_endpoint(self, gentle):
        ens = seed_ensemble(gentle, 16)
        assert ens.x[0] == 0.0
        assert ens.x[-1] == pytest.approx(2.0 * math.pi * 15 / 16)

    def test_affine_data_is_truncated(self):
        data = InitialData.affine(1.0, 0.2, L=2.0)
        ens = seed_ensemble(data, 16)
        assert data.mode is DomainMode.TRUNCATED
        assert ens.period is None
        assert (ens.x[0], ens.x[-1]) == (-1.0, 1.0)
        np.testing.assert_allclose(ens.q, 1.0)
        np.testing.assert_allclose(ens.s, 0.2)

    def test_vacuum_rejected(self):
        with pytest.raises(NonPositiveDensityError, match="density must be positive"):
            seed_ensemble(InitialData.zero_velocity_sine(1.2), 32)

    def test_too_few_characteristics(self, gentle):
        with pytest.raises(DomainError, match="at least 16"):
            seed_ensemble(gentle, 8)

    def test_table_interpolates_periodic_data(self):
        L = 2.0 * math.pi
        x = np.linspace(0.0, L, 64, endpoint=False)
        data = InitialData.from_table(x, np.zeros_like(x), 0.3 * np.sin(x), L)
        points = np.linspace(0.1, 6.0, 9)
        np.testing.assert_allclose(data.dE0(points), 0.3 * np.cos(points), atol=1e-4)
        assert data.kind is InitialDataKind.CUSTOM_TABLE

    def test_table_validation(self):
        x = np.array([0.0, 1.0, 1.0, 2.0])
        with pytest.raises(DomainError, match="strictly increasing"):
            InitialData.from_table(x, x, x, 3.0)
        with pytest.raises(DomainError, match="at least 4 rows"):
            InitialData.from_table(x[:3], x[:3], x[:3], 3.0)
        y = np.arange(4.0)
        with pytest.raises(DomainError, match="within one period"):
            InitialData.from_table(y, y, y, 2.0)

    def test_truncated_table_takes_its_length(self):
        x = np.linspace(-1.0, 3.0, 8)
        data = InitialData.from_table(x, x, 0.1 * x, 99.0, mode=DomainMode.TRUNCATED)
        assert data.L == pytest.approx(4.0)
        assert data.x0 == -1.0

    def test_sine_seeds_exact_second_derivatives(self):
        data = InitialData.drifting_sine(0.4, slope=0.7, drift=0.1)
        ens = seed_ensemble(data, 32)
        np.testing.assert_allclose(ens.sigma, -0.4 * np.sin(ens.x), atol=1e-14)
        np.testing.assert_allclose(ens.xi, 0.7 * np.sin(ens.x), atol=1e-14)

    def test_missing_second_derivatives_fall_back_to_neighbours(self):
        data = replace(InitialData.drifting_sine(0.4, slope=0.7), d2V0=None, d2E0=None)
        ens = seed_ensemble(data, 128)
        np.testing.assert_allclose(ens.sigma, -0.4 * np.sin(ens.x), atol=1e-3)
        np.testing.assert_allclose(ens.xi, 0.7 * np.sin(ens.x), atol=1e-3)

    def test_affine_data_have_no_curvature(self):
        ens = seed_ensemble(InitialData.affine(1.0, 0.2), 16)
        np.testing.assert_array_equal(ens.sigma, 0.0)
        np.testing.assert_array_equal(ens.xi, 0.0)

    def test_state_vector_round_trip_keeps_curvature(self, gentle):
        ens = seed_ensemble(gentle, 16)
        back = type(ens).from_state(ens.t, ens.state_vector(), ens.L, ens.mode)
        np.testing.assert_array_equal(back.sigma, ens.sigma)
        np.testing.assert_array_equal(back.xi, ens.xi)


def test_spacing_floor_is_relative():
    assert spacing_floor(2.0, 100) == pytest.approx(2e-12)


class TestReconstructSigma:
    def test_constant_field_slope_gives_zero(self, gentle):
        ens = replace(seed_ensemble(gentle, 64), s=np.full(64, 0.2))
        np.testing.assert_allclose(reconstruct_sigma(ens), 0.0, atol=1e-12)

    def test_cosine_slope_converges_at_second_order(self, gentle):
        errors = []
        for N in (64, 128):
            ens = seed_ensemble(gentle, N)
            ens = replace(ens, s=0.3 * np.cos(ens.x))
            errors.append(np.max(np.abs(reconstruct_sigma(ens) + 0.3 * np.sin(ens.x))))
        assert errors[1] < errors[0] / 3.5

    def test_touching_neighbours_signal_crossing(self, gentle):
        ens = seed_ensemble(gentle, 32)
        x = ens.x.copy()
        x[5] = x[4]
        with pytest.raises(ImminentCrossingError):
            reconstruct_sigma(replace(ens, x=x))


class TestStepping:
    def test_single_step_advances_time(self, gentle, quadratic):
        ens = seed_ensemble(gentle, 32)
        after = step_field(ens, quadratic, StepControl.from_tol(1e-8))
        assert after.t > 0.0
        assert np.all(np.diff(after.x) > 0.0)

    def test_stepper_keeps_going(self, gentle, undamped):
        stepper = FieldStepper(seed_ensemble(gentle, 32), undamped, StepControl.from_tol(1e-8))
        times = [stepper.step().t for _ in range(5)]
        assert times == sorted(times)


class TestRunField:
    def test_undamped_smooth_data_keep_their_conics(self, gentle, undamped):
        run = run_field(gentle, undamped, 2.0 * math.pi, tol=1e-9, N=32, snapshot_count=5)
        assert run.verdict.is_smooth
        before = characteristic_conics(seed_ensemble(gentle, 32))
        np.testing.assert_allclose(characteristic_conics(run.final), before, atol=1e-6)
        assert len(run.snapshots) == 5

    def test_undamped_steep_data_break_like_the_affine_system(self, steep, undamped):
        run = run_field(steep, undamped, 10.0, tol=1e-9, N=32)
        assert run.verdict.is_blowup
        affine = integrate_affine(AffineState(0.0, 0.95), undamped, 10.0, tol=1e-10)
        assert run.verdict.time == pytest.approx(affine.verdict.time, rel=1e-3)
        assert run.deepest_index == 0

    def test_damping_dissipates_energy(self, gentle, quadratic):
        run = run_field(gentle, quadratic, 5.0, tol=1e-9, N=32)
        audit = energy_audit(run)
        assert run.verdict.is_smooth
        assert audit.monotone
        assert audit.budget_ok
        assert audit.passes
        assert float(np.max(run.final.energy - run.initial_energy)) <= 1e-7

    def test_transported_curvature_matches_the_stencil(self, gentle, undamped):
        run = run_field(gentle, undamped, 1.0, tol=1e-10, N=64)
        np.testing.assert_allclose(run.final.sigma, reconstruct_sigma(run.final), atol=1e-2)

    def test_small_amplitude_oscillates_at_the_plasma_frequency(self, undamped):
        data = InitialData.zero_velocity_sine(0.01)
        E0 = seed_ensemble(data, 32).E
        half = run_field(data, undamped, math.pi, tol=1e-10, N=32)
        full = run_field(data, undamped, 2.0 * math.pi, tol=1e-10, N=32)
        assert half.verdict.is_smooth and full.verdict.is_smooth
        np.testing.assert_allclose(half.final.E, -E0, atol=1e-7)
        np.testing.assert_allclose(full.final.E, E0, atol=1e-7)

    def test_affine_data_follow_the_affine_system(self, quadratic):
        data = InitialData.affine(0.5, 0.2)
        run = run_field(data, quadratic, 5.0, tol=1e-10, N=16)
        affine = integrate_affine(AffineState(0.5, 0.2), quadratic, 5.0, tol=1e-10)
        assert run.verdict.is_smooth and affine.verdict.is_smooth
        np.testing.assert_allclose(run.final.q, affine.trace.column("a")[-1], atol=1e-8)
        np.testing.assert_allclose(run.final.s, affine.trace.column("b")[-1], atol=1e-8)

    def test_quadratic_damping_keeps_steep_data_smooth(self, steep, quadratic):
        run = run_field(steep, quadratic, 20.0, N=64)
        assert run.verdict.is_smooth
        assert run.reentered
        assert run.outcome.diagnostics["closure"] == "transported"

    def test_deep_characteristics_that_turn_back_do_not_break(self, steep, quadratic):
        run = run_field(steep, quadratic, 10.0, N=32, threshold=10.0)
        assert run.verdict.is_smooth
        assert run.turned_back > 0
        assert run.deepest_q < -10.0

    def test_deep_characteristics_that_keep_compressing_break(self, steep, undamped):
        run = run_field(steep, undamped, 10.0, N=32, threshold=10.0)
        assert run.verdict.is_blowup
        assert run.turned_back == 0
        assert "still compressing" in run.outcome.diagnostics["reason"]

    def test_stencil_closure_is_still_available(self, gentle, quadratic):
        run = run_field(gentle, quadratic, 2.0, tol=1e-9, N=32, closure=Closure.STENCIL)
        assert run.verdict.is_smooth
        assert run.closure is Closure.STENCIL
        assert run.outcome.diagnostics["closure"] == "stencil"

    @pytest.mark.slow
    def test_blowup_time_converges_with_resolution(self):
        data = InitialData.drifting_sine(0.95, slope=1.0, drift=0.5)
        spec = DampingSpec.power_law(0.5, epsilon=0.3)
        coarse = run_field(data, spec, 20.0, N=64)
        fine = run_field(data, spec, 20.0, N=128)
        assert coarse.verdict.is_blowup and fine.verdict.is_blowup
        assert fine.verdict.time == pytest.approx(coarse.verdict.time, rel=2e-2)

    def test_velocity_near_breaking(self, steep, undamped):
        run = run_field(steep, undamped, 10.0, tol=1e-9, N=32)
        limit = v_at_blowup(run, efolds=2.0)
        assert limit.index == 0
        assert limit.efolds == pytest.approx(2.0)
        assert limit.density_last > 1.0
        assert limit.t_star == run.verdict.time

    def test_velocity_limit_needs_a_blowup(self, gentle, undamped):
        run = run_field(gentle, undamped, 1.0, N=16)
        with pytest.raises(DomainError, match="did not break"):
            v_at_blowup(run)

    @pytest.mark.parametrize("tol", [0.0, 1e-2])
    def test_tolerance_range(self, gentle, undamped, tol):
        with pytest.raises(DomainError, match="tol"):
            run_field(gentle, undamped, 1.0, tol=tol, N=16)

    def test_end_time_positive(self, gentle, undamped):
        with pytest.raises(DomainError, match="t_end"):
            run_field(gentle, undamped, 0.0, N=16)
