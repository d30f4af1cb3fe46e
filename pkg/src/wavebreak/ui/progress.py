"""Rich Live progress display for scenario runs and sweeps."""

from __future__ import annotations

from typing import Any

from rich.console import Console, Group
from rich.live import Live
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table
from rich.text import Text

_VERDICT_STYLE = {"smooth": "green", "blowup": "red", "unresolved": "yellow"}


class RunProgress:
    """Live view driven by the runner's event callback.

    Usage:
        progress = RunProgress()
        with progress:
            run_scenario(scenario, config, on_event=progress.on_event)
    """

    def __init__(self, console: Console | None = None) -> None:
        self._console = console
        self._status = "starting"
        self._scenario = "?"
        self._kind = "?"
        self._cells = 0
        self._done = 0
        self._failed = 0
        self._counts: dict[str, int] = {}
        self._events: list[str] = []

        self._progress = Progress(
            SpinnerColumn(),
            TextColumn("[bold blue]{task.description}"),
            BarColumn(bar_width=30),
            MofNCompleteColumn(),
        )
        self._task_id = self._progress.add_task("starting", total=None)
        self._live: Live | None = None

    def __enter__(self) -> RunProgress:
        self._live = Live(self._render(), console=self._console, refresh_per_second=4)
        self._live.__enter__()
        return self

    def __exit__(self, *args: Any) -> None:
        if self._live:
            self._live.__exit__(*args)

    def on_event(self, event: str, data: dict[str, Any]) -> None:
        if event == "scenario_loaded":
            self._scenario = data.get("name", "?")
            self._kind = data.get("kind", "?")
            self._status = "running"
            self._log(f"Scenario: {self._scenario} ({self._kind})")

        elif event == "sweep_start":
            self._cells = data.get("cells", 0)
            self._progress.update(self._task_id, total=self._cells, completed=0)
            self._log(f"Sweep: {self._cells} cells on {data.get('workers', 1)} worker(s)")

        elif event == "cell_complete":
            self._done += 1
            verdict = data.get("verdict") or "failed"
            if data.get("status") == "failed":
                self._failed += 1
                verdict = "failed"
            self._counts[verdict] = self._counts.get(verdict, 0) + 1
            t_star = data.get("t_star")
            when = f" t*={t_star:.4g}" if isinstance(t_star, float) else ""
            self._log(
                f"gamma={data.get('gamma')} eps={data.get('epsilon')} d={data.get('d')}: "
                f"{verdict}{when}"
            )

        elif event == "sweep_complete":
            self._log(f"Sweep complete: {data.get('cells', 0)} cells, {self._failed} failed")

        elif event == "scenario_computed":
            self._status = "writing"
            self._log(f"Tables: {', '.join(data.get('tables', []))}")

        elif event == "scenario_complete":
            self._status = "complete"
            self._log(f"Wrote {data.get('files', 0)} files to {data.get('directory', '?')}")

        self._progress.update(self._task_id, completed=self._done, description=self._status)
        if self._live:
            self._live.update(self._render())

    def _log(self, msg: str) -> None:
        """Append a log line (keep last 12)."""
        self._events.append(msg)
        if len(self._events) > 12:
            self._events = self._events[-12:]

    def _render(self) -> Group:
        status = Table.grid(padding=(0, 2))
        status.add_column(style="bold")
        status.add_column()
        status.add_row("Scenario", f"{self._scenario} ({self._kind})")
        if self._cells:
            status.add_row("Cells", f"{self._done}/{self._cells}")
            for verdict, count in sorted(self._counts.items()):
                style = _VERDICT_STYLE.get(verdict, "dim")
                status.add_row(verdict, Text(str(count), style=style))

        log_text = Text("\n".join(self._events[-10:]) if self._events else "(waiting...)")
        return Group(
            Panel(self._progress, title="wavebreak", border_style="cyan"),
            Panel(status, title="Status", border_style="green"),
            Panel(log_text, title="Events", border_style="blue"),
        )
