"""Field-level (gamma, epsilon, d) sweeps locating the smooth/blow-up boundary."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Literal, Optional, Sequence

from pydantic import BaseModel, Field

from wavebreak.core.damping import DampingSpec
from wavebreak.core.errors import WavebreakError
from wavebreak.core.events import EventCallback, emit
from wavebreak.core.scenario import DataConfig
from wavebreak.export.writer import ResultSet
from wavebreak.solvers.characteristics import energy_audit, run_field
from wavebreak.utils.logging import get_logger

logger = get_logger(__name__)

# Energy may exceed its initial maximum by at most this many tolerances.
ENERGY_SLACK = 1e3


class CellStatus(str, enum.Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


CellVerdict = Literal["smooth", "blowup", "unresolved"]


class CellTask(BaseModel):
    """Everything a worker process needs to rebuild and run one cell."""

    index: int
    gamma: float
    epsilon: float
    d: float
    data: DataConfig
    nu0: float = 1.0
    N: int = 256
    refine_N: Optional[int] = None
    tol: float = 1e-8
    t_end: float = 200.0
    method: Literal["dopri5", "auto", "radau"] = "auto"
    max_steps: int = 2_000_000


class SweepCell(BaseModel):
    gamma: float
    epsilon: float
    d: float
    N: int
    tol: float
    status: CellStatus = CellStatus.PENDING
    verdict: Optional[CellVerdict] = None
    t_star: Optional[float] = None
    t_star_refined: Optional[float] = None
    reentered: Optional[bool] = None
    audit_ok: Optional[bool] = None
    message: str = ""

    @property
    def refinement_gap(self) -> float | None:
        """Relative change of t* under refinement in N."""
        if self.t_star is None or self.t_star_refined is None:
            return None
        return abs(self.t_star_refined - self.t_star) / self.t_star


class SweepResult(BaseModel):
    """Cells in grid order (gamma fastest, then epsilon, then d)."""

    cells: list[SweepCell] = Field(default_factory=list)
    t_end: float = 200.0

    def select(self, epsilon: float, d: float) -> list[SweepCell]:
        return sorted(
            (c for c in self.cells if c.epsilon == epsilon and c.d == d), key=lambda c: c.gamma
        )

    def monotone(self, epsilon: float, d: float) -> bool:
        """All blow-up gammas lie strictly below all smooth gammas."""
        cells = self.select(epsilon, d)
        blowup = [c.gamma for c in cells if c.verdict == "blowup"]
        smooth = [c.gamma for c in cells if c.verdict == "smooth"]
        return not blowup or not smooth or max(blowup) < min(smooth)

    def boundary(self, epsilon: float, d: float) -> tuple[float | None, float | None]:
        """(largest blow-up gamma, smallest smooth gamma) for one (epsilon, d)."""
        cells = self.select(epsilon, d)
        blowup = [c.gamma for c in cells if c.verdict == "blowup"]
        smooth = [c.gamma for c in cells if c.verdict == "smooth"]
        return (max(blowup) if blowup else None, min(smooth) if smooth else None)

    def summary(self) -> dict[str, Any]:
        pairs = sorted({(c.epsilon, c.d) for c in self.cells})
        return {
            "cells": len(self.cells),
            "failed": sum(1 for c in self.cells if c.status is CellStatus.FAILED),
            "boundaries": [
                {
                    "epsilon": eps,
                    "d": d,
                    "last_blowup_gamma": self.boundary(eps, d)[0],
                    "first_smooth_gamma": self.boundary(eps, d)[1],
                    "monotone": self.monotone(eps, d),
                }
                for eps, d in pairs
            ],
        }

    def to_results(self, name: str) -> ResultSet:
        result = ResultSet(scenario=name, kind="gamma-sweep")
        columns: dict[str, list[Any]] = {
            key: [] for key in (
                "gamma", "epsilon", "d", "status", "verdict", "t_star", "t_star_refined",
                "N", "tol", "reentered", "audit_ok", "message",
            )
        }
        for cell in self.cells:
            row = cell.model_dump(mode="json")
            for key in columns:
                value = row[key]
                columns[key].append(math.nan if value is None and key.startswith("t_") else value)
        result.add("sweep", "sweep", columns)
        result.summary = self.summary()
        result.plots.append("sweep")
        return result


def run_cell(task: CellTask) -> SweepCell:
    """Runs one field simulation; domain and integration errors mark the cell failed."""
    cell = SweepCell(
        gamma=task.gamma, epsilon=task.epsilon, d=task.d, N=task.N, tol=task.tol,
        status=CellStatus.RUNNING,
    )
    try:
        data = task.data.model_copy(update={"d": task.d}).build()
        spec = DampingSpec.power_law(task.gamma, nu0=task.nu0, epsilon=task.epsilon)
        run = run_field(
            data, spec, task.t_end, task.tol, task.N, method=task.method,
            snapshot_count=2, record_fields=False, max_steps=task.max_steps,
        )
        cell.reentered = run.reentered
        if run.verdict.is_blowup:
            cell.verdict = "blowup"
            cell.t_star = run.verdict.time
            if task.refine_N:
                fine = run_field(
                    data, spec, task.t_end, task.tol, task.refine_N, method=task.method,
                    snapshot_count=2, record_fields=False, max_steps=task.max_steps,
                )
                cell.t_star_refined = fine.verdict.time if fine.verdict.is_blowup else None
        else:
            audit = energy_audit(run)
            bound = float(audit.initial_energy.max()) if audit.initial_energy.size else 0.0
            cell.audit_ok = run.max_energy <= bound + ENERGY_SLACK * task.tol * (1.0 + bound)
            cell.verdict = "smooth" if run.reentered and cell.audit_ok else "unresolved"
        cell.status = CellStatus.DONE
    except WavebreakError as exc:
        cell.status = CellStatus.FAILED
        cell.message = str(exc)
    return cell


def sweep_tasks(
    gammas: Sequence[float],
    epsilons: Sequence[float],
    ds: Sequence[float],
    data: DataConfig,
    **common: Any,
) -> list[CellTask]:
    tasks = []
    for d in ds:
        for eps in epsilons:
            for gamma in gammas:
                tasks.append(
                    CellTask(
                        index=len(tasks), gamma=gamma, epsilon=eps, d=d, data=data, **common
                    )
                )
    return tasks


def gamma_threshold_sweep(
    gammas: Sequence[float],
    epsilons: Sequence[float],
    ds: Sequence[float],
    *,
    data: DataConfig | None = None,
    nu0: float = 1.0,
    N: int = 256,
    refine_N: int | None = None,
    tol: float = 1e-8,
    t_end: float = 200.0,
    method: Literal["dopri5", "auto", "radau"] = "auto",
    max_steps: int = 2_000_000,
    workers: int = 1,
    on_event: EventCallback | None = None,
) -> SweepResult:
    """Runs `run_field` over the grid; failed cells are recorded and the sweep continues.

    An empty range gives an empty result.

    With workers > 1 cells run in a process pool; results are collected
    back into grid order, so the table never depends on completion order.
    """
    tasks = sweep_tasks(
        gammas, epsilons, ds, data or DataConfig(),
        nu0=nu0, N=N, refine_N=refine_N, tol=tol, t_end=t_end, method=method,
        max_steps=max_steps,
    )
    cells: list[SweepCell | None] = [None] * len(tasks)
    emit(on_event, "sweep_start", {"cells": len(tasks), "workers": workers})
    logger.info("sweep_start", cells=len(tasks), workers=workers, N=N, tol=tol)

    def collect(task: CellTask, cell: SweepCell) -> None:
        cells[task.index] = cell
        if cell.status is CellStatus.FAILED:
            logger.warning(
                "sweep_cell_failed", gamma=task.gamma, epsilon=task.epsilon, d=task.d,
                error=cell.message,
            )
        emit(on_event, "cell_complete", {"index": task.index, **cell.model_dump(mode="json")})

    if workers <= 1:
        for task in tasks:
            emit(on_event, "cell_start", {"index": task.index, "gamma": task.gamma})
            collect(task, run_cell(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run_cell, task): task for task in tasks}
            for future in as_completed(futures):
                task = futures[future]
                try:
                    cell = future.result()
                except Exception as exc:
                    cell = SweepCell(
                        gamma=task.gamma, epsilon=task.epsilon, d=task.d, N=task.N,
                        tol=task.tol, status=CellStatus.FAILED, message=f"worker error: {exc}",
                    )
                collect(task, cell)

    result = SweepResult(cells=[c for c in cells if c is not None], t_end=t_end)
    summary = result.summary()
    emit(on_event, "sweep_complete", summary)
    logger.info("sweep_complete", cells=summary["cells"], failed=summary["failed"])
    return result
