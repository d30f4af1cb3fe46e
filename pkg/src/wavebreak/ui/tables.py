"""Rich tables for run summaries, condition reports and sweep grids."""

from __future__ import annotations

import math
from typing import Any, Iterable, Mapping

import pandas as pd
from rich.table import Table

from wavebreak.experiments.conditions import ConditionReport


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6g}"
    if value is None:
        return "-"
    return str(value)


def summary_table(title: str, summary: Mapping[str, Any]) -> Table:
    table = Table(title=title)
    table.add_column("Key", style="cyan")
    table.add_column("Value")
    for key, value in summary.items():
        if isinstance(value, (list, dict)):
            continue
        table.add_row(key, _fmt(value))
    return table


def condition_table(reports: Iterable[ConditionReport]) -> Table:
    table = Table(title="Damping criteria")
    table.add_column("Law", style="cyan")
    table.add_column("tail gamma", justify="right")
    table.add_column("epsilon", justify="right")
    table.add_column("suppression")
    table.add_column("parabolic")
    table.add_column("tail")
    table.add_column("integral", justify="right")
    table.add_column("predicted")
    for r in reports:
        table.add_row(
            r.law,
            _fmt(r.tail_gamma),
            _fmt(r.epsilon),
            _fmt(r.suppression),
            _fmt(r.parabolic),
            _fmt(r.tail.passes),
            _fmt(r.integral),
            r.predicted,
        )
    return table


def sweep_table(frame: pd.DataFrame) -> Table:
    """Verdict grid from the rows of a `sweep` table."""
    table = Table(title="Gamma sweep")
    for name in ("d", "epsilon", "gamma", "verdict", "t*", "t* refined", "message"):
        table.add_column(name, justify="left" if name in ("verdict", "message") else "right")
    style = {"smooth": "green", "blowup": "red", "unresolved": "yellow"}
    for row in frame.itertuples(index=False):
        verdict = row.verdict if isinstance(row.verdict, str) else row.status
        table.add_row(
            _fmt(row.d),
            _fmt(row.epsilon),
            _fmt(row.gamma),
            f"[{style.get(verdict, 'dim')}]{verdict}[/]",
            _fmt(row.t_star),
            _fmt(row.t_star_refined),
            row.message if isinstance(row.message, str) else "",
        )
    return table
