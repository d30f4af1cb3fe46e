"""End-to-end checks of the smooth/blow-up classification on reference problems."""

from __future__ import annotations

import math

import numpy as np
import pytest

from wavebreak.config import WavebreakConfig
from wavebreak.core.damping import DampingSpec
from wavebreak.core.runner import compute_scenario
from wavebreak.experiments.figures import reproduce_fig1, reproduce_fig2
from wavebreak.experiments.sweep import gamma_threshold_sweep
from wavebreak.scenarios.registry import load_scenario
from wavebreak.solvers.affine import AffineState, conic_constant, integrate_affine, phase_curve
from wavebreak.solvers.characteristics import InitialData, run_field, v_at_blowup
from wavebreak.solvers.euler_analog import run_euler_analog
from wavebreak.solvers.perturbation import (
    blowup_persistence_bound,
    corrector_convergence,
    fit_sigma0,
    predict_persistence,
    sigma0_system,
)


def _random_starts(rng: np.random.Generator, count: int, hyperbolic: bool) -> list[AffineState]:
    starts = []
    while len(starts) < count:
        b0 = rng.uniform(-1.0, 0.9)
        edge = math.sqrt(max(1.0 - 2.0 * b0, 0.0))
        if hyperbolic:
            a0 = rng.choice([-1.0, 1.0]) * math.sqrt(edge**2 + rng.uniform(0.1, 4.0))
        else:
            if edge == 0.0:
                continue
            a0 = rng.uniform(-0.95, 0.95) * edge
        if (conic_constant(a0, b0).C > 0.0) == hyperbolic:
            starts.append(AffineState(a0, b0))
    return starts


def test_undamped_conic_is_conserved(undamped):
    start = AffineState(0.0, math.sqrt(2.0) - 1.0)
    assert conic_constant(start.a, start.b).C == pytest.approx(-0.5)
    outcome = integrate_affine(start, undamped, 100.0, tol=1e-10)
    assert outcome.verdict.is_smooth
    assert outcome.diagnostics["conic_drift"] < 1e-7


@pytest.mark.slow
def test_undamped_dichotomy(undamped):
    rng = np.random.default_rng(20240601)
    for start in _random_starts(rng, 50, hyperbolic=False):
        assert integrate_affine(start, undamped, 100.0).verdict.is_smooth
    for start in _random_starts(rng, 50, hyperbolic=True):
        coarse = integrate_affine(start, undamped, 100.0, tol=1e-8)
        fine = integrate_affine(start, undamped, 100.0, tol=1e-10)
        assert coarse.verdict.is_blowup and fine.verdict.is_blowup
        assert coarse.verdict.time == pytest.approx(fine.verdict.time, rel=1e-2)


@pytest.mark.parametrize("gamma,epsilon", [(2.0, 0.8), (1.0, 0.5)])
def test_damping_suppresses_hyperbolic_datum(gamma, epsilon):
    start = AffineState(2.0, 0.5)
    assert conic_constant(2.0, 0.5).C == pytest.approx(16.0)
    spec = DampingSpec.power_law(gamma, epsilon=epsilon)
    assert integrate_affine(start, spec.with_epsilon(0.0), 200.0).verdict.is_blowup
    assert integrate_affine(start, spec, 200.0).verdict.is_smooth


def test_phase_portrait_contrast():
    portrait = reproduce_fig1()
    assert portrait.undamped.verdict.is_blowup
    assert portrait.damped.verdict.is_smooth
    assert portrait.damped.returns_to_upper()


def test_damped_series_decays():
    pair = reproduce_fig2()
    assert pair.undamped.verdict.is_blowup
    assert pair.damped.verdict.is_smooth
    assert pair.envelope.size >= 2
    assert pair.envelope[-1] < 0.1 * pair.envelope[0]


def test_expanding_starts_always_turn_to_compression(undamped):
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        start = AffineState(rng.uniform(0.05, 3.0), rng.uniform(-1.0, 0.9))
        C = conic_constant(start.a, start.b).C
        if -0.2 < C < 0.05:
            continue
        curve = phase_curve(start, undamped, 100.0)
        assert curve.first_lower_crossing() is not None, (start, C)
        checked += 1


def test_damped_and_undamped_series_agree_early():
    pair = reproduce_fig2()
    assert pair.early_gap(0.05) < 1e-2
    assert pair.early_gap(0.05) <= pair.early_gap(0.5)


def test_persistence_bound_agrees_with_integration(sqrt_law):
    bound = blowup_persistence_bound(4.0, sqrt_law)
    assert abs(bound.epsilon_bound - 1.0) < 1e-12
    prediction = predict_persistence(4.0, sqrt_law)
    start = AffineState(-math.sqrt(5.0), 0.0)
    outcome = integrate_affine(start, sqrt_law, 50.0)
    assert outcome.verdict.is_blowup
    assert prediction.persists == outcome.verdict.is_blowup


def test_corrector_is_first_order(quadratic):
    report = corrector_convergence(16.0, 0.0, quadratic.with_epsilon(0.01))
    assert report.min_order >= 0.9
    assert all(a > b for a, b in zip(report.errors, report.errors[1:]))


def test_sigma0_closed_form_on_random_cases():
    rng = np.random.default_rng(11)
    for _ in range(20):
        C = rng.uniform(0.1, 10.0)
        init = (float(rng.normal()), float(rng.normal()))
        fit = fit_sigma0(sigma0_system((0.0, -5.0), init, C))
        assert fit.residual < 1e-6


@pytest.mark.slow
def test_energy_is_dissipated_along_characteristics(tmp_path):
    config = WavebreakConfig(output_dir=str(tmp_path))
    result = compute_scenario(load_scenario("energy-audit"), config)
    summary = result.summary
    assert summary["audit_monotone"]
    assert summary["audit_max_relative_increase"] < 1e-6
    assert summary["audit_budget_residual"] < 1e-5


@pytest.mark.slow
def test_quadratic_damping_keeps_the_steep_field_smooth(quadratic):
    run = run_field(InitialData.zero_velocity_sine(0.95), quadratic, 200.0, N=256)
    assert run.verdict.is_smooth
    assert run.verdict.time == 200.0
    assert run.reentered


@pytest.mark.slow
def test_field_sweep_boundary():
    result = gamma_threshold_sweep(
        [0.25, 0.5, 0.75, 1.0, 1.5, 2.0], [0.5], [0.9], N=256, refine_N=512, t_end=200.0,
        workers=3,
    )
    assert result.summary()["failed"] == 0
    assert result.monotone(0.5, 0.9)
    cells = result.select(0.5, 0.9)
    assert all(c.verdict == "smooth" for c in cells if c.gamma >= 1.0)
    blowups = [c for c in cells if c.verdict == "blowup"]
    assert blowups
    for cell in blowups:
        assert cell.refinement_gap is not None and cell.refinement_gap < 0.02


@pytest.mark.slow
def test_velocity_decays_at_damped_blowup(undamped):
    data = InitialData.drifting_sine(0.95, slope=1.0, drift=0.5)
    damped = run_field(data, DampingSpec.power_law(0.25, epsilon=0.3), 50.0, N=256)
    assert damped.verdict.is_blowup
    assert v_at_blowup(damped, efolds=4.0).decreasing

    control = run_field(data, undamped, 50.0, N=256)
    assert control.verdict.is_blowup
    limit = v_at_blowup(control, efolds=4.0)
    assert abs(limit.v_last - limit.v_mid) <= 0.1 * abs(limit.v_mid)


def test_uncoupled_system_breaks_under_sublinear_damping():
    # Without the field, f = n**0.25 leaves q / n tending to a negative constant.
    data = InitialData.drifting_sine(0.5, slope=1.0, drift=0.0)
    run = run_euler_analog(data, DampingSpec.power_law(0.25, epsilon=0.5), 20.0, N=64)
    assert run.verdict.is_blowup
    assert math.isfinite(run.verdict.time)
