"""Damped pressureless Euler system without the field coupling.

    V_t + V V_x = -nu(n) V,    n_t + (n V)_x = 0

Along characteristics, with q = V_x and n_x reconstructed across neighbours:

    x' = V    V' = -nu V    q' = -q**2 - (nu q + V nu'(n) n_x)    n' = -n q

For nu = 0 the velocity decouples into Burgers' equation, which breaks at
t* = -1 / min V0'.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from wavebreak.core.damping import DampingSpec
from wavebreak.core.errors import DomainError, IntegrationFailure, NonPositiveDensityError
from wavebreak.core.integrator import Method, StepControl, StepInfo, integrate
from wavebreak.core.outcome import SimOutcome, Trace, Verdict
from wavebreak.solvers.characteristics import (
    BLOWUP_THRESHOLD,
    COLLAPSE_MIN_Q,
    SPACING_FLOOR,
    DomainMode,
    InitialData,
    spacing_floor,
)
from wavebreak.solvers.stencils import neighbour_pattern, nonuniform_derivative, spacings
from wavebreak.utils.logging import get_logger

logger = get_logger(__name__)

EULER_FIELDS = ("x", "V", "q", "n")
EULER_COLUMNS = ("h", "min_q", "max_n", "min_spacing")


@dataclass
class EulerSnapshot:
    t: float
    x: np.ndarray
    V: np.ndarray
    q: np.ndarray
    n: np.ndarray


@dataclass
class EulerRun:
    outcome: SimOutcome
    spec: DampingSpec
    N: int
    tol: float
    t_end: float
    snapshots: list[EulerSnapshot]
    final: EulerSnapshot

    @property
    def verdict(self) -> Verdict:
        return self.outcome.verdict


def burgers_breaking_time(data: InitialData, samples: int = 4096) -> float:
    """-1 / min V0' on a fine sample of one period; infinite when V0' >= 0 everywhere."""
    x = data.x0 + data.L * np.arange(samples) / samples
    slope = float(np.min(np.asarray(data.dV0(x), dtype=float) * np.ones(samples)))
    return -1.0 / slope if slope < 0.0 else float("inf")


def euler_rhs(
    spec: DampingSpec, N: int, L: float, mode: DomainMode
) -> Callable[[float, np.ndarray], np.ndarray]:
    period = L if mode is DomainMode.PERIODIC else None

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        x, V, q, n = y[:N], y[N : 2 * N], y[2 * N : 3 * N], y[3 * N :]
        if np.any(n <= 0.0):
            return np.full_like(y, np.nan)
        out = np.empty_like(y)
        out[:N] = V
        out[3 * N :] = -n * q
        if spec.epsilon == 0.0:
            out[N : 2 * N] = 0.0
            out[2 * N : 3 * N] = -q * q
            return out
        nu = spec.nu(n)
        n_x = nonuniform_derivative(x, n, period)
        out[N : 2 * N] = -nu * V
        out[2 * N : 3 * N] = -q * q - (nu * q + V * spec.nu_prime(n) * n_x)
        return out

    return rhs


class _EulerRecorder:
    def __init__(
        self, N: int, L: float, mode: DomainMode, times: np.ndarray, first: EulerSnapshot
    ) -> None:
        self.N, self.L, self.mode = N, L, mode
        self.period = L if mode is DomainMode.PERIODIC else None
        self.times = times
        self._next = 1
        self.snapshots = [first]
        self.rows: list[list[float]] = [
            [0.0, float(np.min(first.q)), float(np.max(first.n)),
             float(np.min(spacings(first.x, self.period)))]
        ]
        self.t: list[float] = [first.t]

    def _unpack(self, t: float, y: np.ndarray) -> EulerSnapshot:
        x, V, q, n = (np.array(part) for part in np.split(y, len(EULER_FIELDS)))
        return EulerSnapshot(t, x, V, q, n)

    def __call__(self, step: StepInfo) -> None:
        while self._next < self.times.size and self.times[self._next] <= step.t:
            ts = float(self.times[self._next])
            self.snapshots.append(self._unpack(ts, step.dense(ts)))
            self._next += 1
        snap = self._unpack(step.t, step.y)
        self.t.append(step.t)
        self.rows.append(
            [abs(step.h), float(np.min(snap.q)), float(np.max(snap.n)),
             float(np.min(spacings(snap.x, self.period)))]
        )


def run_euler_analog(
    data: InitialData,
    spec: DampingSpec,
    t_end: float,
    tol: float = 1e-8,
    N: int = 256,
    *,
    method: Method = "auto",
    threshold: float = BLOWUP_THRESHOLD,
    floor_factor: float = SPACING_FLOOR,
    snapshot_count: int = 50,
    max_steps: int = 2_000_000,
) -> EulerRun:
    """Runs the uncoupled system with V0 from `data` and n0 = 1 - E0'.

    Breaking signals: min q below -threshold, max n above threshold, or
    neighbours closer than the spacing floor.
    """
    if not 0.0 < tol <= 1e-3:
        raise DomainError(f"tol must lie in (0, 1e-3], got {tol}")
    if N < 16:
        raise DomainError(f"need at least 16 characteristics, got N={N}")
    if data.periodic:
        x = data.x0 + data.L * np.arange(N) / N
    else:
        x = np.linspace(data.x0, data.x0 + data.L, N)
    ones = np.ones(N)
    n0 = 1.0 - np.asarray(data.dE0(x), dtype=float) * ones
    if np.any(n0 <= 0.0):
        raise NonPositiveDensityError(f"initial density reaches {np.min(n0):.6g} <= 0")
    V0 = np.asarray(data.V0(x), dtype=float) * ones
    q0 = np.asarray(data.dV0(x), dtype=float) * ones
    y0 = np.concatenate([x, V0, q0, n0])
    period = data.L if data.periodic else None
    floor = spacing_floor(data.L, N, floor_factor)

    def stop(t: float, y: np.ndarray) -> str | None:
        q, n = y[2 * N : 3 * N], y[3 * N :]
        if np.min(q) < -threshold:
            return f"min q = {np.min(q):.3e} below -{threshold:.1e}"
        if np.max(n) > threshold:
            return f"max n = {np.max(n):.3e} above {threshold:.1e}"
        gaps = spacings(y[:N], period)
        if np.min(gaps) < floor:
            return f"characteristics crossing (gap {np.min(gaps):.3e})"
        return None

    first = EulerSnapshot(0.0, x, V0, q0, n0)
    times = np.linspace(0.0, t_end, max(snapshot_count, 2))
    recorder = _EulerRecorder(N, data.L, data.mode, times, first)
    result = integrate(
        euler_rhs(spec, N, data.L, data.mode),
        0.0,
        y0,
        t_end,
        StepControl.from_tol(tol, max_steps=max_steps),
        stop=stop,
        on_step=recorder,
        record=False,
        method=method,
        jac_sparsity=neighbour_pattern(N, len(EULER_FIELDS), data.periodic),
    )
    final = recorder._unpack(result.t_final, result.y_final)
    if result.status == "finished":
        verdict = Verdict.smooth(t_end)
    elif result.status == "stopped" or float(np.min(final.q)) < COLLAPSE_MIN_Q:
        verdict = Verdict.blowup(result.t_final)
    else:
        raise IntegrationFailure(
            f"uncoupled integration {result.status} at t={result.t_final:.12g} "
            f"without divergence: {result.message}"
        )
    rows = np.array(recorder.rows)
    trace = Trace(np.array(recorder.t), rows, rows[:, 0], EULER_COLUMNS)
    diagnostics: dict[str, Any] = {
        "min_q": float(np.min(rows[:, 1])),
        "max_n": float(np.max(rows[:, 2])),
        "steps": result.n_steps,
        "rejected": result.n_rejected,
        "status": result.status,
        "reason": result.message,
        "N": N,
        "tol": tol,
    }
    logger.info("euler_analog_complete", verdict=str(verdict), steps=result.n_steps, N=N)
    return EulerRun(
        outcome=SimOutcome(verdict=verdict, trace=trace, diagnostics=diagnostics),
        spec=spec,
        N=N,
        tol=tol,
        t_end=t_end,
        snapshots=recorder.snapshots,
        final=final,
    )
