"""Tests for the affine (a, b, A, B) system."""

from __future__ import annotations

import math

import numpy as np
import pytest

from wavebreak.core.damping import DampingSpec
from wavebreak.core.errors import (
    BranchTurningError,
    DomainError,
    NonPositiveDensityError,
)
from wavebreak.core.outcome import Trace
from wavebreak.solvers.affine import (
    AFFINE_COLUMNS,
    AffineState,
    ConicKind,
    compare_phase_curves,
    conic_constant,
    conic_invariant,
    detect_blowup,
    direction_field,
    first_lower_crossing,
    integrate_affine,
    integrate_phase,
    phase_curve,
    unperturbed_branch,
)


class TestConic:
    def test_constant_and_kind(self):
        assert conic_constant(2.0, 0.5).C == pytest.approx(16.0)
        assert conic_constant(2.0, 0.5).kind is ConicKind.HYPERBOLA
        ellipse = conic_constant(0.0, math.sqrt(2.0) - 1.0)
        assert ellipse.C == pytest.approx(-0.5, abs=1e-15)
        assert ellipse.bounded

    def test_parabola_within_tolerance(self):
        assert conic_constant(1.0, 0.0).kind is ConicKind.PARABOLA

    def test_density_must_be_positive(self):
        with pytest.raises(NonPositiveDensityError):
            conic_constant(0.0, 1.0)
        with pytest.raises(NonPositiveDensityError):
            AffineState(0.0, 1.5)

    def test_branch_lies_on_conic(self):
        b = np.linspace(-5.0, 0.4, 30)
        a = unperturbed_branch(b, 4.0, -1)
        assert np.all(a < 0.0)
        np.testing.assert_allclose(conic_invariant(a, b), 4.0, rtol=1e-12)

    def test_branch_off_locus(self):
        with pytest.raises(DomainError):
            unperturbed_branch(0.9, -0.5, 1)

    def test_branch_sign_checked(self):
        with pytest.raises(ValueError):
            unperturbed_branch(0.0, 1.0, 0)


class TestIntegrateAffine:
    def test_ellipse_stays_smooth(self, elliptic_start, undamped):
        outcome = integrate_affine(elliptic_start, undamped, 30.0, 1e-10)
        assert outcome.verdict.is_smooth
        assert outcome.verdict.time == 30.0
        assert outcome.diagnostics["conic_drift"] < 1e-7
        assert str(outcome.verdict) == "GloballySmoothUpTo(30)"

    def test_hyperbola_breaks(self, hyperbolic_start, undamped):
        outcome = integrate_affine(hyperbolic_start, undamped, 50.0, 1e-10)
        assert outcome.verdict.is_blowup
        assert 0.0 < outcome.verdict.time < 50.0
        assert outcome.diagnostics["max_abs_a"] > 1e8
        assert str(outcome.verdict).startswith("BlowUpAt(")

    def test_conic_tolerance_is_configurable(self, undamped):
        start = AffineState(1.0, 1e-9)
        strict = integrate_affine(start, undamped, 1.0, 1e-10)
        loose = integrate_affine(start, undamped, 1.0, 1e-10, conic_tol=1e-8)
        assert strict.diagnostics["conic"] != ConicKind.PARABOLA.value
        assert loose.diagnostics["conic"] == ConicKind.PARABOLA.value

    def test_breaking_time_stable_under_refinement(self, undamped):
        start = AffineState(-2.0, 0.0)
        coarse = integrate_affine(start, undamped, 10.0, 1e-8)
        fine = integrate_affine(start, undamped, 10.0, 1e-11)
        assert coarse.verdict.is_blowup and fine.verdict.is_blowup
        assert coarse.verdict.time == pytest.approx(fine.verdict.time, rel=1e-3)


class TestDetectBlowup:
    def test_stationary_trace(self):
        t = np.linspace(0.0, 10.0, 50)
        trace = Trace(t, np.zeros((50, 4)), np.full(50, 0.2), AFFINE_COLUMNS)
        assert detect_blowup(trace) is None

    def test_finds_the_breaking_time(self, hyperbolic_start, undamped):
        outcome = integrate_affine(hyperbolic_start, undamped, 50.0, 1e-10)
        assert detect_blowup(outcome.trace) == outcome.verdict.time

    def test_bounded_orbit_has_none(self, elliptic_start, undamped):
        outcome = integrate_affine(elliptic_start, undamped, 60.0, 1e-10)
        assert detect_blowup(outcome.trace) is None

    def test_large_slope_alone_is_not_enough(self):
        t = np.linspace(0.0, 1.0, 20)
        states = np.zeros((20, 4))
        states[-1, 0] = -1e9
        assert detect_blowup(Trace(t, states, np.full(20, 0.05), AFFINE_COLUMNS)) is None

    def test_quadratic_damping_suppresses(self, hyperbolic_start):
        spec = DampingSpec.power_law(2.0, epsilon=0.8)
        outcome = integrate_affine(hyperbolic_start, spec, 60.0, 1e-10)
        assert outcome.verdict.is_smooth
        assert outcome.diagnostics["min_density"] > 0.0

    def test_offset_sign_only_moves_A(self):
        spec = DampingSpec.power_law(2.0, epsilon=0.8)
        start = AffineState(2.0, 0.5, 1.0, 0.0)
        derived = integrate_affine(start, spec, 5.0, 1e-10)
        flipped = integrate_affine(start, spec, 5.0, 1e-10, flipped_sign=True)
        np.testing.assert_allclose(
            derived.trace.column("a")[-1], flipped.trace.column("a")[-1], rtol=1e-7
        )
        assert derived.trace.column("A")[-1] != pytest.approx(flipped.trace.column("A")[-1])

    @pytest.mark.parametrize("tol", [0.0, 1e-2])
    def test_bad_tolerance(self, elliptic_start, undamped, tol):
        with pytest.raises(DomainError):
            integrate_affine(elliptic_start, undamped, 1.0, tol)

    def test_bad_horizon(self, elliptic_start, undamped):
        with pytest.raises(DomainError):
            integrate_affine(elliptic_start, undamped, 0.0)


class TestPhase:
    def test_phase_curve_returns_under_damping(self, hyperbolic_start):
        curve = phase_curve(hyperbolic_start, DampingSpec.power_law(2.0, epsilon=0.8), 50.0)
        assert curve.verdict.is_smooth
        assert curve.first_lower_crossing() is not None
        assert curve.returns_to_upper()

    def test_undamped_curve_never_returns(self, hyperbolic_start, undamped):
        curve = phase_curve(hyperbolic_start, undamped, 50.0)
        assert curve.verdict.is_blowup
        assert not curve.returns_to_upper()

    def test_first_lower_crossing_interpolates(self):
        t = np.array([0.0, 1.0, 2.0])
        a = np.array([1.0, 0.5, -0.5])
        assert first_lower_crossing(t, a) == pytest.approx(1.5)
        assert first_lower_crossing(t, np.ones(3)) is None

    def test_integrate_phase_undamped_follows_conic(self, undamped):
        C = 4.0
        a_start = unperturbed_branch(0.0, C, -1)
        b, a = integrate_phase(a_start, 0.0, -3.0, undamped, samples=np.linspace(0.0, -3.0, 7))
        np.testing.assert_allclose(a, unperturbed_branch(b, C, -1), rtol=1e-9)

    def test_integrate_phase_needs_lower_branch(self, undamped):
        with pytest.raises(BranchTurningError):
            integrate_phase(1.0, 0.0, -1.0, undamped)

    def test_damping_lifts_lower_branch(self, undamped):
        # Chaplygin comparison: the damped curve lies above the undamped one.
        start = AffineState(-3.0, 0.0)
        lower = phase_curve(start, undamped, 0.2)
        upper = phase_curve(start, DampingSpec.power_law(1.0, epsilon=0.5), 0.2)
        assert compare_phase_curves(lower, upper) <= 1e-9


class TestDirectionField:
    def test_unit_vectors(self, quadratic):
        field = direction_field(quadratic, shape=(7, 5))
        assert field.b.size == 35
        norms = np.hypot(field.db, field.da)
        assert np.all((np.abs(norms - 1.0) < 1e-12) | (norms == 0.0))

    def test_grid_must_stay_below_unit_b(self, quadratic):
        with pytest.raises(DomainError):
            direction_field(quadratic, b_range=(-1.0, 1.0))
