"""CLI entry point for wavebreak."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import typer
from rich.console import Console
from rich.table import Table

from wavebreak import __version__
from wavebreak.core.errors import WavebreakError
from wavebreak.core.runner import RunReport
from wavebreak.core.scenario import Scenario, ScenarioKind

app = typer.Typer(
    name="wavebreak",
    help="wavebreak: damped pressureless Euler-Poisson, smooth vs blow-up experiments.",
    no_args_is_help=True,
)
console = Console()

_VERBOSE = typer.Option(False, "--verbose", "-v", help="Live progress and debug logging")
_OUTPUT = typer.Option(None, "--output-dir", "-o", help="Output root (env WAVEBREAK_OUTPUT_DIR)")
_MANIFEST = typer.Option(None, "--manifest", "-m", help="Scenario manifest (YAML or JSON)")
_LAW = typer.Option(None, "--law", help="Damping law: power, saturating or log-linear")
_GAMMA = typer.Option(None, "--gamma", help="Power-law exponent of f")
_NU0 = typer.Option(None, "--nu0", help="Amplitude of f")
_EPSILON = typer.Option(None, "--epsilon", help="Damping amplitude epsilon")
_TEND = typer.Option(None, "--tend", help="Final time")
_TOL = typer.Option(None, "--tol", help="Integration tolerance")


def _floats(text: Optional[str]) -> list[float] | None:
    """Parses "0.25,0.5,1" into floats; None stays None."""
    if text is None:
        return None
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise typer.BadParameter(f"expected comma-separated numbers, got '{text}'") from exc


def _damping(
    law: Optional[str], gamma: Optional[float], nu0: Optional[float], epsilon: Optional[float]
) -> dict[str, Any]:
    return {"kind": law, "gamma": gamma, "nu0": nu0, "epsilon": epsilon}


def _fail(exc: BaseException) -> typer.Exit:
    message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
    console.print(f"[red]Error:[/red] {message}")
    return typer.Exit(1)


def _scenario(
    manifest: Optional[Path], name: str, kind: ScenarioKind, **parameters: Any
) -> Scenario:
    """Manifest (or an empty scenario of `kind`) with every given flag merged over it."""
    if manifest is not None:
        base = Scenario.from_file(manifest)
        if base.kind is not kind:
            raise WavebreakError(
                f"manifest kind '{base.kind.value}' does not match command kind '{kind.value}'"
            )
    else:
        base = Scenario(name=name, kind=kind)
    return base.with_overrides(**parameters)


def _execute(scenario: Scenario, output_dir: Optional[str], verbose: bool) -> RunReport:
    from wavebreak.config import WavebreakConfig
    from wavebreak.core.runner import run_scenario
    from wavebreak.utils.logging import setup_logging

    setup_logging(verbose=verbose)
    config = WavebreakConfig(output_dir=output_dir) if output_dir else WavebreakConfig()

    if verbose:
        from wavebreak.ui.progress import RunProgress

        progress = RunProgress(console=console)
        with progress:
            return run_scenario(scenario, config, on_event=progress.on_event)
    console.print(f"\n[bold cyan]wavebreak v{__version__}[/bold cyan] {scenario.summary()}")
    return run_scenario(scenario, config)


def _report(report: RunReport) -> None:
    from wavebreak.ui.tables import summary_table

    console.print(summary_table(report.scenario.name, report.result.summary))
    console.print(f"\n[green bold]Done![/green bold] Output at: {report.directory}")


def _run_and_report(scenario_factory: Any, output_dir: Optional[str], verbose: bool) -> RunReport:
    try:
        report = _execute(scenario_factory(), output_dir, verbose)
    except (WavebreakError, KeyError, OSError, ValueError) as exc:
        raise _fail(exc) from exc
    _report(report)
    return report


@app.command("affine-run")
def affine_run(
    a0: Optional[float] = typer.Option(None, "--a0", help="Initial V_x"),
    b0: Optional[float] = typer.Option(None, "--b0", help="Initial E_x (must be < 1)"),
    A0: Optional[float] = typer.Option(None, "--A0", help="Initial V at the origin"),
    B0: Optional[float] = typer.Option(None, "--B0", help="Initial E at the origin"),
    law: Optional[str] = _LAW,
    gamma: Optional[float] = _GAMMA,
    nu0: Optional[float] = _NU0,
    epsilon: Optional[float] = _EPSILON,
    tend: Optional[float] = _TEND,
    tol: Optional[float] = _TOL,
    flipped_sign: Optional[bool] = typer.Option(
        None, "--flipped-sign/--derived-sign", help="Sign convention of the A equation"
    ),
    manifest: Optional[Path] = _MANIFEST,
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """Integrate the affine (a, b, A, B) system and write its trace."""
    _run_and_report(
        lambda: _scenario(
            manifest, "affine-run", ScenarioKind.AFFINE,
            a0=a0, b0=b0, A0=A0, B0=B0, t_end=tend, tol=tol, flipped_sign=flipped_sign,
            damping=_damping(law, gamma, nu0, epsilon),
        ),
        output_dir, verbose,
    )


@app.command()
def phase(
    a0: Optional[float] = typer.Option(None, "--a0", help="Initial a"),
    b0: Optional[float] = typer.Option(None, "--b0", help="Initial b (must be < 1)"),
    law: Optional[str] = _LAW,
    gamma: Optional[float] = _GAMMA,
    nu0: Optional[float] = _NU0,
    epsilon: Optional[float] = _EPSILON,
    tend: Optional[float] = _TEND,
    tol: Optional[float] = _TOL,
    grid: Optional[int] = typer.Option(None, "--grid", help="Direction field points per axis"),
    manifest: Optional[Path] = _MANIFEST,
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """Phase curve in the (b, a) plane together with the direction field."""
    _run_and_report(
        lambda: _scenario(
            manifest, "phase", ScenarioKind.PHASE,
            a0=a0, b0=b0, t_end=tend, tol=tol, grid=grid,
            damping=_damping(law, gamma, nu0, epsilon),
        ),
        output_dir, verbose,
    )


@app.command()
def corrector(
    C: Optional[float] = typer.Option(None, "--C", help="Conic constant (>= 0)"),
    b0: Optional[float] = typer.Option(None, "--b0", help="Starting b on the lower branch"),
    b_min: Optional[float] = typer.Option(None, "--b-min", help="End of the b grid"),
    law: Optional[str] = _LAW,
    gamma: Optional[float] = _GAMMA,
    nu0: Optional[float] = _NU0,
    epsilon: Optional[float] = _EPSILON,
    convergence: Optional[bool] = typer.Option(
        None, "--convergence/--no-convergence", help="Also measure the corrector order"
    ),
    manifest: Optional[Path] = _MANIFEST,
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """First-order correction alpha1(b) to the lower conic branch."""
    _run_and_report(
        lambda: _scenario(
            manifest, "corrector", ScenarioKind.CORRECTOR,
            C=C, b0=b0, b_min=b_min, convergence=convergence,
            damping=_damping(law, gamma, nu0, epsilon),
        ),
        output_dir, verbose,
    )


@app.command()
def sigma0(
    C: Optional[float] = typer.Option(None, "--C", help="Conic constant"),
    init: Optional[str] = typer.Option(None, "--init", help="sigma0,xi0 at the start, e.g. 1,0"),
    branch: Optional[int] = typer.Option(None, "--branch", help="-1 lower, +1 upper"),
    manifest: Optional[Path] = _MANIFEST,
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """Unperturbed sigma along a conic, fitted to its closed form."""
    start = _floats(init)
    if start is not None and len(start) != 2:
        raise typer.BadParameter("--init takes exactly two numbers")
    _run_and_report(
        lambda: _scenario(
            manifest, "sigma0", ScenarioKind.SIGMA0, C=C, init=start, branch=branch,
        ),
        output_dir, verbose,
    )


def _data_overrides(
    kind: Optional[str], d: Optional[float], slope: Optional[float], drift: Optional[float],
    L: Optional[float], table: Optional[str], mode: Optional[str],
) -> dict[str, Any]:
    return {
        "kind": kind, "d": d, "slope": slope, "drift": drift, "L": L, "table": table,
        "mode": mode,
    }


_DATA_KIND = typer.Option(None, "--data", help="zero-velocity-sine, drifting-sine, affine, ...")
_D = typer.Option(None, "--d", help="Field amplitude d (|d| < 1)")
_SLOPE = typer.Option(None, "--slope", help="Velocity slope of drifting-sine data")
_DRIFT = typer.Option(None, "--drift", help="Uniform drift of drifting-sine data")
_L = typer.Option(None, "--L", help="Period or interval length")
_TABLE = typer.Option(None, "--table", help="CSV with x, V, E for custom-table data")
_MODE = typer.Option(None, "--mode", help="periodic or truncated")
_N = typer.Option(None, "--N", help="Number of characteristics")
_METHOD = typer.Option(None, "--method", help="dopri5, radau or auto")


@app.command("field-run")
def field_run(
    data: Optional[str] = _DATA_KIND,
    d: Optional[float] = _D,
    slope: Optional[float] = _SLOPE,
    drift: Optional[float] = _DRIFT,
    L: Optional[float] = _L,
    table: Optional[str] = _TABLE,
    mode: Optional[str] = _MODE,
    law: Optional[str] = _LAW,
    gamma: Optional[float] = _GAMMA,
    nu0: Optional[float] = _NU0,
    epsilon: Optional[float] = _EPSILON,
    N: Optional[int] = _N,
    tend: Optional[float] = _TEND,
    tol: Optional[float] = _TOL,
    method: Optional[str] = _METHOD,
    audit: Optional[bool] = typer.Option(None, "--audit/--no-audit", help="Energy audit"),
    efolds: Optional[float] = typer.Option(
        None, "--velocity-efolds", help="Report the velocity gap at blow-up"
    ),
    manifest: Optional[Path] = _MANIFEST,
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """Simulate the full field along N characteristics."""
    _run_and_report(
        lambda: _scenario(
            manifest, "field-run", ScenarioKind.FIELD,
            data=_data_overrides(data, d, slope, drift, L, table, mode),
            damping=_damping(law, gamma, nu0, epsilon),
            N=N, t_end=tend, tol=tol, method=method, audit=audit, velocity_efolds=efolds,
        ),
        output_dir, verbose,
    )


@app.command("euler-analog")
def euler_analog(
    data: Optional[str] = _DATA_KIND,
    d: Optional[float] = _D,
    slope: Optional[float] = _SLOPE,
    drift: Optional[float] = _DRIFT,
    L: Optional[float] = _L,
    law: Optional[str] = _LAW,
    gamma: Optional[float] = _GAMMA,
    nu0: Optional[float] = _NU0,
    epsilon: Optional[float] = _EPSILON,
    N: Optional[int] = _N,
    tend: Optional[float] = _TEND,
    tol: Optional[float] = _TOL,
    method: Optional[str] = _METHOD,
    manifest: Optional[Path] = _MANIFEST,
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """Damped pressureless Euler without the electric field."""
    _run_and_report(
        lambda: _scenario(
            manifest, "euler-analog", ScenarioKind.EULER_ANALOG,
            data=_data_overrides(data, d, slope, drift, L, None, None),
            damping=_damping(law, gamma, nu0, epsilon),
            N=N, t_end=tend, tol=tol, method=method,
        ),
        output_dir, verbose,
    )


@app.command()
def sweep(
    gamma_list: Optional[str] = typer.Option(None, "--gamma-list", help="e.g. 0.25,0.5,1,2"),
    epsilon_list: Optional[str] = typer.Option(None, "--epsilon-list", help="e.g. 0.5,1"),
    d_list: Optional[str] = typer.Option(None, "--d-list", help="e.g. 0.5,0.9"),
    data: Optional[str] = _DATA_KIND,
    N: Optional[int] = _N,
    refine_N: Optional[int] = typer.Option(None, "--refine-N", help="Rerun blow-ups at this N"),
    tend: Optional[float] = _TEND,
    tol: Optional[float] = _TOL,
    method: Optional[str] = _METHOD,
    workers: Optional[int] = typer.Option(None, "--workers", "-j", help="Worker processes"),
    manifest: Optional[Path] = _MANIFEST,
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """Sweep (gamma, epsilon, d) and locate the smooth/blow-up boundary."""
    from wavebreak.ui.tables import sweep_table

    report = _run_and_report(
        lambda: _scenario(
            manifest, "gamma-sweep", ScenarioKind.GAMMA_SWEEP,
            gammas=_floats(gamma_list), epsilons=_floats(epsilon_list), ds=_floats(d_list),
            data={"kind": data}, N=N, refine_N=refine_N, t_end=tend, tol=tol, method=method,
            workers=workers,
        ),
        output_dir, verbose,
    )
    console.print(sweep_table(report.result.table("sweep")))
    for row in report.result.summary.get("boundaries", []):
        console.print(
            f"  eps={row['epsilon']:g} d={row['d']:g}: last blow-up gamma "
            f"{row['last_blowup_gamma']}, first smooth gamma {row['first_smooth_gamma']}"
            f"{'' if row['monotone'] else '  [yellow](not monotone)[/yellow]'}"
        )


@app.command("check-condition")
def check_condition(
    gamma_list: Optional[str] = typer.Option(None, "--gamma-list", help="Power-law exponents"),
    law: Optional[str] = typer.Option(
        None, "--law", help="Named law instead of power laws: saturating or log-linear"
    ),
    nu0: float = typer.Option(1.0, "--nu0", help="Amplitude of f"),
    epsilon: float = typer.Option(1.0, "--epsilon", help="Damping amplitude epsilon"),
    eta0: Optional[float] = typer.Option(None, "--eta0", help="Lower limit of the integral"),
    manifest: Optional[Path] = _MANIFEST,
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """Evaluate the suppression criteria for one or more damping laws."""
    from wavebreak.core.damping import DampingSpec
    from wavebreak.experiments.conditions import condition_report
    from wavebreak.ui.tables import condition_table

    laws: list[dict[str, Any]] | None = None
    if law is not None:
        laws = [{"kind": law, "nu0": nu0, "epsilon": epsilon}]
    gammas = _floats(gamma_list)
    if gammas is not None:
        laws = (laws or []) + [
            {"kind": "power", "gamma": g, "nu0": nu0, "epsilon": epsilon} for g in gammas
        ]

    report = _run_and_report(
        lambda: _scenario(
            manifest, "condition-check", ScenarioKind.CONDITION_CHECK, laws=laws, eta0=eta0
        ),
        output_dir, verbose,
    )
    params = report.scenario.params()
    console.print(
        condition_table(
            condition_report(DampingSpec.from_config(cfg), params.eta0) for cfg in params.laws
        )
    )


@app.command()
def figures(
    which: str = typer.Option("all", "--which", help="fig1, fig2 or all"),
    epsilon: Optional[float] = _EPSILON,
    gamma: Optional[float] = _GAMMA,
    a0: Optional[float] = typer.Option(None, "--a0", help="Start a (default 2)"),
    b0: Optional[float] = typer.Option(None, "--b0", help="Start b (default 0.5)"),
    tend: Optional[float] = _TEND,
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """Reproduce the phase portrait (fig1) and the damped b(t) series (fig2)."""
    names = ["fig1", "fig2"] if which == "all" else [which]
    if any(name not in ("fig1", "fig2") for name in names):
        console.print(f"[red]Error:[/red] unknown figure '{which}'; use fig1, fig2 or all")
        raise typer.Exit(1)
    for name in names:
        _run_and_report(
            lambda name=name: _scenario(
                None, name, ScenarioKind.FIGURE,
                figure=name, epsilon=epsilon, gamma=gamma, a0=a0, b0=b0, t_end=tend,
            ),
            output_dir, verbose,
        )


@app.command()
def scenarios(
    name: Optional[str] = typer.Argument(None, help="Scenario name to inspect"),
) -> None:
    """List builtin scenarios or inspect one."""
    from wavebreak.scenarios.registry import ScenarioRegistry

    registry = ScenarioRegistry()
    registry.discover()

    if name:
        if not registry.has(name):
            console.print(f"[red]Scenario '{name}' not found.[/red]")
            raise typer.Exit(1)
        scenario = registry.get(name)
        console.print(f"\n[bold]{scenario.name}[/bold] ({scenario.kind.value})")
        console.print(f"  {scenario.description}")
        for key, value in scenario.parameters.items():
            console.print(f"  {key}: {value}")
        return

    details = registry.list_details()
    if not details:
        console.print("[yellow]No scenarios found.[/yellow]")
        return
    table = Table(title="Builtin Scenarios")
    table.add_column("Name", style="cyan")
    table.add_column("Kind")
    table.add_column("Description")
    for entry in details:
        table.add_row(entry["name"], entry["kind"], entry["description"])
    console.print(table)


@app.command()
def run(
    target: str = typer.Argument(..., help="Manifest path or builtin scenario name"),
    output_dir: Optional[str] = _OUTPUT,
    verbose: bool = _VERBOSE,
) -> None:
    """Execute a scenario manifest or a builtin scenario."""
    from wavebreak.scenarios.registry import load_scenario

    _run_and_report(lambda: load_scenario(target), output_dir, verbose)


@app.command()
def version() -> None:
    """Show wavebreak version."""
    console.print(f"wavebreak v{__version__}")


if __name__ == "__main__":
    app()
