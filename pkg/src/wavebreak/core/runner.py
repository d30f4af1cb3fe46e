"""Scenario runner: validates a manifest, dispatches by kind, writes the outputs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from wavebreak.config import WavebreakConfig
from wavebreak.core.damping import DampingSpec
from wavebreak.core.events import EventCallback, emit
from wavebreak.core.scenario import (
    AffineParams,
    ConditionParams,
    CorrectorParams,
    EulerParams,
    FieldParams,
    FigureParams,
    PersistenceParams,
    PhaseParams,
    Scenario,
    ScenarioKind,
    Sigma0Params,
    SweepParams,
)
from wavebreak.experiments.conditions import condition_report, condition_results
from wavebreak.experiments.figures import reproduce_fig1, reproduce_fig2
from wavebreak.experiments.sweep import gamma_threshold_sweep
from wavebreak.export.writer import OutputWriter, ResultSet
from wavebreak.solvers.affine import (
    AffineState,
    conic_invariant,
    direction_field,
    integrate_affine,
    phase_curve,
    unperturbed_branch,
)
from wavebreak.solvers.characteristics import (
    DIAGNOSTIC_COLUMNS,
    characteristic_conics,
    energy_audit,
    run_field,
    seed_ensemble,
    v_at_blowup,
)
from wavebreak.solvers.euler_analog import burgers_breaking_time, run_euler_analog
from wavebreak.solvers.perturbation import (
    blowup_persistence_bound,
    corrector_alpha1,
    corrector_convergence,
    fit_sigma0,
    predict_persistence,
    sigma0_closed_form,
    sigma0_system,
)
from wavebreak.utils.file_io import ensure_dir
from wavebreak.utils.logging import bind_run, clear_run, get_logger

logger = get_logger(__name__)


@dataclass
class RunReport:
    scenario: Scenario
    directory: Path
    result: ResultSet
    files: list[Path]


def _verdict_summary(verdict: Any) -> dict[str, Any]:
    return {"verdict": str(verdict), "kind": verdict.kind.value, "time": verdict.time}


def _run_affine(name: str, p: AffineParams, config: WavebreakConfig, _: Any) -> ResultSet:
    spec = DampingSpec.from_config(p.damping)
    outcome = integrate_affine(
        AffineState(p.a0, p.b0, p.A0, p.B0), spec, p.t_end, p.tol,
        flipped_sign=p.flipped_sign, threshold=config.blowup_threshold, h_min=config.h_min,
        max_steps=config.max_steps,
        conic_tol=config.conic_tol,
    )
    trace = outcome.trace
    a, b = trace.column("a"), trace.column("b")
    result = ResultSet(scenario=name, kind="affine")
    result.add(
        "trace",
        "affine_trace",
        {
            "t": trace.t, "a": a, "b": b, "A": trace.column("A"), "B": trace.column("B"),
            "step": trace.steps, "invC": conic_invariant(a, b),
        },
    )
    result.summary = {**_verdict_summary(outcome.verdict), **outcome.diagnostics}
    result.plots.append("affine")
    return result


def _run_phase(name: str, p: PhaseParams, config: WavebreakConfig, _: Any) -> ResultSet:
    spec = DampingSpec.from_config(p.damping)
    curve = phase_curve(AffineState(p.a0, p.b0), spec, p.t_end, p.tol, flipped_sign=p.flipped_sign)
    field = direction_field(spec, p.b_range, p.a_range, (p.grid, p.grid), p.flipped_sign)
    result = ResultSet(scenario=name, kind="phase")
    result.add("curve", "phase_curve", {"t": curve.t, "b": curve.b, "a": curve.a})
    result.add(
        "direction_field", "direction_field",
        {"b": field.b, "a": field.a, "db": field.db, "da": field.da},
    )
    result.summary = {
        **_verdict_summary(curve.verdict),
        "first_lower_crossing": curve.first_lower_crossing(),
        "returns_to_upper": curve.returns_to_upper(),
    }
    result.plots.append("phase")
    return result


def _run_figure(name: str, p: FigureParams, config: WavebreakConfig, _: Any) -> ResultSet:
    if p.figure == "fig1":
        return reproduce_fig1(
            0.8 if p.epsilon is None else p.epsilon, p.a0, p.b0, p.gamma,
            50.0 if p.t_end is None else p.t_end, p.tol,
        ).to_results(name)
    return reproduce_fig2(
        1.0 if p.epsilon is None else p.epsilon, p.a0, p.b0, p.gamma,
        200.0 if p.t_end is None else p.t_end, p.tol,
    ).to_results(name)


def _run_corrector(name: str, p: CorrectorParams, config: WavebreakConfig, _: Any) -> ResultSet:
    spec = DampingSpec.from_config(p.damping)
    grid = np.linspace(p.b0, p.b_min, p.samples + 1)[1:]
    curve = corrector_alpha1(p.C, p.b0, spec, grid)
    result = ResultSet(scenario=name, kind="corrector")
    result.add("corrector", "corrector", {"b": curve.b_grid, "alpha1": curve.alpha1})
    result.summary = {"C": p.C, "b0": p.b0, "law": spec.form.label}
    if p.convergence:
        report = corrector_convergence(p.C, p.b0, spec, p.b_eval, p.eps_list)
        result.add(
            "convergence",
            "convergence",
            {
                "epsilon": report.epsilons,
                "error": report.errors,
                "order": [math.nan, *report.orders]
                if len(report.orders) == len(report.errors) - 1
                else [math.nan] * len(report.errors),
            },
        )
        result.summary.update(alpha1=report.alpha1, min_order=report.min_order)
    result.plots.append("corrector")
    return result


def _run_persistence(
    name: str, p: PersistenceParams, config: WavebreakConfig, _: Any
) -> ResultSet:
    spec = DampingSpec.from_config(p.damping)
    bound = blowup_persistence_bound(p.C, spec, p.eta0)
    prediction = predict_persistence(p.C, spec, p.eta0)
    b0 = 1.0 - p.eta0
    start = AffineState(float(unperturbed_branch(b0, p.C, -1)), b0)
    outcome = integrate_affine(
        start, spec, p.t_end, p.tol, threshold=config.blowup_threshold, h_min=config.h_min,
        max_steps=config.max_steps,
        conic_tol=config.conic_tol,
    )
    densities = np.geomspace(p.eta0, 1e4 * p.eta0, 101)[1:]
    curve = corrector_alpha1(p.C, b0, spec, 1.0 - densities)
    result = ResultSet(scenario=name, kind="persistence")
    result.add("corrector", "corrector", {"b": curve.b_grid, "alpha1": curve.alpha1})
    result.summary = {
        "C": p.C,
        "eta0": p.eta0,
        "epsilon": spec.epsilon,
        "epsilon_bound": bound.epsilon_bound,
        "damping_integral": bound.damping_integral,
        "bound_persists": bound.persists,
        "predicted_persists": prediction.persists,
        "predicted_slope": prediction.slope,
        **_verdict_summary(outcome.verdict),
        "agrees": prediction.persists == outcome.verdict.is_blowup,
    }
    result.plots.append("corrector")
    return result


def _run_sigma0(name: str, p: Sigma0Params, config: WavebreakConfig, _: Any) -> ResultSet:
    trace = sigma0_system(p.s_range, p.init, p.C, p.branch, p.samples, p.tol)
    fit = fit_sigma0(trace)
    closed, _xi = sigma0_closed_form(trace.s, fit.C1, fit.C2, p.C, p.branch)
    result = ResultSet(scenario=name, kind="sigma0")
    result.add(
        "sigma0", "sigma0",
        {"s": trace.s, "sigma0": trace.sigma0, "xi0": trace.xi0, "sigma0_closed": closed},
    )
    result.summary = {"C": p.C, "C1": fit.C1, "C2": fit.C2, "residual": fit.residual}
    result.plots.append("sigma0")
    return result


def _long_frame(snapshots: list[Any], fields: tuple[str, ...]) -> dict[str, np.ndarray]:
    if not snapshots:
        return {name: np.zeros(0) for name in ("t", *fields)}
    columns: dict[str, np.ndarray] = {
        "t": np.concatenate([np.full(snap.x.size, snap.t) for snap in snapshots])
    }
    for name in fields:
        columns[name] = np.concatenate([np.asarray(getattr(snap, name)) for snap in snapshots])
    return columns


def _run_field(name: str, p: FieldParams, config: WavebreakConfig, _: Any) -> ResultSet:
    data = p.data.build()
    spec = DampingSpec.from_config(p.damping)
    conics = characteristic_conics(seed_ensemble(data, p.N))
    run = run_field(
        data, spec, p.t_end, p.tol or config.tol, p.N, method=p.method, closure=p.closure,
        threshold=config.blowup_threshold, floor_factor=config.spacing_floor,
        snapshot_count=p.snapshot_count or config.snapshot_count, h_min=config.h_min,
        max_steps=config.max_steps,
    )
    result = ResultSet(scenario=name, kind="field")
    result.add("snapshots", "snapshots", _long_frame(run.snapshots, ("x", "V", "E", "q", "s", "n")))
    trace = run.outcome.trace
    result.add(
        "diagnostics",
        "field_diagnostics",
        {"t": trace.t, **{col: trace.column(col) for col in DIAGNOSTIC_COLUMNS}},
    )
    result.summary = {
        **_verdict_summary(run.verdict),
        **run.outcome.diagnostics,
        "data": data.label,
        "law": spec.describe(),
        "max_conic": float(np.max(conics)),
    }
    if p.audit:
        audit = energy_audit(run)
        scale = float(np.max(audit.initial_energy)) or 1.0
        result.add(
            "energy_audit",
            "energy_audit",
            {
                "index": np.arange(run.N),
                "initial_energy": audit.initial_energy,
                "max_increase": audit.max_increase,
                "allowed": audit.allowed,
                "budget_residual": run.max_budget_residual / scale,
            },
        )
        result.summary.update(
            audit_monotone=audit.monotone,
            audit_max_relative_increase=audit.max_relative_increase,
            audit_budget_residual=audit.budget_residual,
            audit_passes=audit.passes,
        )
    if p.velocity_efolds is not None and run.verdict.is_blowup and spec.epsilon > 0.0:
        limit = v_at_blowup(run, p.velocity_efolds)
        result.summary.update(
            v_field=limit.v_field,
            v_last=limit.v_last,
            v_efold_earlier=limit.v_efold_earlier,
            v_mid=limit.v_mid,
            v_decreasing=limit.decreasing,
        )
    result.plots.append("field")
    return result


def _run_euler(name: str, p: EulerParams, config: WavebreakConfig, _: Any) -> ResultSet:
    data = p.data.build()
    spec = DampingSpec.from_config(p.damping)
    run = run_euler_analog(
        data, spec, p.t_end, p.tol or config.tol, p.N, method=p.method,
        threshold=config.blowup_threshold, floor_factor=config.spacing_floor,
        snapshot_count=p.snapshot_count or config.snapshot_count, max_steps=config.max_steps,
    )
    result = ResultSet(scenario=name, kind="euler-analog")
    result.add("snapshots", "euler_snapshots", _long_frame(run.snapshots, ("x", "V", "q", "n")))
    result.summary = {
        **_verdict_summary(run.verdict),
        **run.outcome.diagnostics,
        "law": spec.describe(),
        "burgers_t_star": burgers_breaking_time(data),
    }
    result.plots.append("euler")
    return result


def _run_conditions(
    name: str, p: ConditionParams, config: WavebreakConfig, _: Any
) -> ResultSet:
    reports = [condition_report(DampingSpec.from_config(law), p.eta0) for law in p.laws]
    return condition_results(name, reports)


def _run_sweep(
    name: str, p: SweepParams, config: WavebreakConfig, on_event: EventCallback | None
) -> ResultSet:
    result = gamma_threshold_sweep(
        p.gammas, p.epsilons, p.ds, data=p.data, nu0=p.nu0, N=p.N, refine_N=p.refine_N,
        tol=p.tol or config.tol, t_end=p.t_end, method=p.method, max_steps=config.max_steps,
        workers=p.workers or config.workers, on_event=on_event,
    )
    return result.to_results(name)


_DISPATCH: dict[ScenarioKind, Callable[..., ResultSet]] = {
    ScenarioKind.AFFINE: _run_affine,
    ScenarioKind.PHASE: _run_phase,
    ScenarioKind.FIGURE: _run_figure,
    ScenarioKind.CORRECTOR: _run_corrector,
    ScenarioKind.PERSISTENCE: _run_persistence,
    ScenarioKind.SIGMA0: _run_sigma0,
    ScenarioKind.FIELD: _run_field,
    ScenarioKind.EULER_ANALOG: _run_euler,
    ScenarioKind.CONDITION_CHECK: _run_conditions,
    ScenarioKind.GAMMA_SWEEP: _run_sweep,
}


def compute_scenario(
    scenario: Scenario, config: WavebreakConfig, on_event: EventCallback | None = None
) -> ResultSet:
    """Runs the experiment in memory without touching the filesystem."""
    params = scenario.params()
    return _DISPATCH[scenario.kind](scenario.name, params, config, on_event)


def run_scenario(
    scenario: Scenario,
    config: WavebreakConfig,
    on_event: EventCallback | None = None,
) -> RunReport:
    """Main entry point: validate, compute, then write every output at once.

    Nothing is written unless the computation finishes, so a rejected
    manifest or a failing run leaves no partial outputs behind.
    """
    bind_run(scenario=scenario.name, kind=scenario.kind.value)
    try:
        scenario.params()
        logger.info("scenario_loaded", description=scenario.description)
        emit(on_event, "scenario_loaded", {"name": scenario.name, "kind": scenario.kind.value})

        result = compute_scenario(scenario, config, on_event)
        emit(on_event, "scenario_computed", {"tables": [t.stem for t in result.tables]})

        if scenario.outputs:
            directory = ensure_dir(scenario.outputs)
        else:
            directory = config.scenario_dir(scenario.name)
        files = OutputWriter(directory, scenario.manifest()).write(result)
        logger.info("scenario_complete", directory=str(directory), files=len(files))
        emit(on_event, "scenario_complete", {"directory": str(directory), "files": len(files)})
        return RunReport(scenario=scenario, directory=directory, result=result, files=files)
    finally:
        clear_run()
