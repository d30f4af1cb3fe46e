"""Column layouts of every CSV the experiments emit."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CsvSchema:
    """Header and meaning of one CSV kind."""

    name: str
    columns: tuple[str, ...]
    description: str


SCHEMAS: dict[str, CsvSchema] = {
    "affine_trace": CsvSchema(
        name="affine_trace",
        columns=("t", "a", "b", "A", "B", "step", "invC"),
        description="Affine trajectory with accepted step sizes and the conic invariant",
    ),
    "phase_curve": CsvSchema(
        name="phase_curve",
        columns=("t", "b", "a"),
        description="Phase curve a(b) ordered by time",
    ),
    "direction_field": CsvSchema(
        name="direction_field",
        columns=("b", "a", "db", "da"),
        description="Unit direction vectors of the (a, b) subsystem",
    ),
    "b_series": CsvSchema(
        name="b_series",
        columns=("t", "b"),
        description="b(t) of one affine run",
    ),
    "envelope": CsvSchema(
        name="envelope",
        columns=("t", "abs_b"),
        description="Successive local maxima of |b(t)|",
    ),
    "corrector": CsvSchema(
        name="corrector",
        columns=("b", "alpha1"),
        description="First-order corrector along the lower conic branch",
    ),
    "convergence": CsvSchema(
        name="convergence",
        columns=("epsilon", "error", "order"),
        description="Corrector error against the damped phase curve and observed order",
    ),
    "sigma0": CsvSchema(
        name="sigma0",
        columns=("s", "sigma0", "xi0", "sigma0_closed"),
        description="Integrated (sigma0, xi0) with the fitted closed form",
    ),
    "snapshots": CsvSchema(
        name="snapshots",
        columns=("t", "x", "V", "E", "q", "s", "n"),
        description="Characteristic ensemble at evenly spaced times",
    ),
    "field_diagnostics": CsvSchema(
        name="field_diagnostics",
        columns=("t", "h", "min_q", "min_n", "max_n", "min_spacing", "energy", "budget"),
        description="Per-step scalars of a field run",
    ),
    "energy_audit": CsvSchema(
        name="energy_audit",
        columns=("index", "initial_energy", "max_increase", "allowed", "budget_residual"),
        description="Per-characteristic energy monotonicity and dissipation budget",
    ),
    "euler_snapshots": CsvSchema(
        name="euler_snapshots",
        columns=("t", "x", "V", "q", "n"),
        description="Uncoupled Euler ensemble at evenly spaced times",
    ),
    "sweep": CsvSchema(
        name="sweep",
        columns=(
            "gamma",
            "epsilon",
            "d",
            "status",
            "verdict",
            "t_star",
            "t_star_refined",
            "N",
            "tol",
            "reentered",
            "audit_ok",
            "message",
        ),
        description="One row per (gamma, epsilon, d) cell",
    ),
    "conditions": CsvSchema(
        name="conditions",
        columns=(
            "law",
            "tail_gamma",
            "epsilon",
            "suppression",
            "parabolic",
            "tail_limit",
            "tail_passes",
            "integral",
            "predicted",
        ),
        description="Analytic criteria per damping law",
    ),
}


def get_schema(name: str) -> CsvSchema:
    if name not in SCHEMAS:
        available = ", ".join(SCHEMAS.keys())
        raise KeyError(f"Schema '{name}' not found. Available: {available}")
    return SCHEMAS[name]


def list_schemas() -> list[dict[str, str]]:
    return [
        {"name": s.name, "columns": ",".join(s.columns), "description": s.description}
        for s in SCHEMAS.values()
    ]
