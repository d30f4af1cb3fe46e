"""Adaptive time stepping shared by every solver.

`DormandPrince54` is the explicit 5(4) pair with FSAL, PI step control,
dense output and stiffness detection. It follows scipy's OdeSolver surface
(`t`, `y`, `status`, `step()`, `dense_output()`) so `integrate` can hand a run
over to `scipy.integrate.Radau` when the pair reports stiffness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Literal

import numpy as np
from scipy import integrate as sp_integrate

from wavebreak.utils.logging import get_logger

logger = get_logger(__name__)

RHS = Callable[[float, np.ndarray], np.ndarray]
Method = Literal["dopri5", "auto", "radau"]

EPS = float(np.finfo(float).eps)

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Quartic dense output; columns multiply x, x**2, x**3, x**4.
P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

STIFF_HLAMBDA = 3.25
STIFF_HITS = 15
NONSTIFF_RESET = 6


@dataclass(frozen=True)
class StepControl:
    """Tolerances and step-size controller parameters."""

    rtol: float = 1e-8
    atol: float = 1e-8
    h_min: float = 1e-14
    h_max: float = math.inf
    first_step: float | None = None
    max_steps: int = 2_000_000
    safety: float = 0.9
    fac_min: float = 0.2
    fac_max: float = 10.0
    beta: float = 0.04

    @classmethod
    def from_tol(cls, tol: float, **overrides: Any) -> StepControl:
        return cls(rtol=tol, atol=tol, **overrides)

    @property
    def expo1(self) -> float:
        return 0.2 - 0.75 * self.beta


@dataclass
class StepInfo:
    """One accepted step, handed to `on_step` observers."""

    t_old: float
    t: float
    y: np.ndarray
    dense: Callable[[float], np.ndarray]

    @property
    def h(self) -> float:
        return self.t - self.t_old


@dataclass
class Integration:
    """Result of `integrate`. Rows of `y` match `t`; `steps[0]` is 0."""

    t: np.ndarray
    y: np.ndarray
    steps: np.ndarray
    status: str
    message: str = ""
    nfev: int = 0
    n_steps: int = 0
    n_rejected: int = 0
    switched_at: float | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def y_final(self) -> np.ndarray:
        return self.y[-1]

    @property
    def finished(self) -> bool:
        return self.status == "finished"


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


def select_initial_step(
    fun: RHS,
    t0: float,
    y0: np.ndarray,
    f0: np.ndarray,
    direction: float,
    control: StepControl,
    t_bound: float = math.inf,
) -> float:
    """Initial step from the local Lipschitz estimate (Hairer, Norsett and Wanner, II.4).

    Neither the trial evaluation nor the returned step leaves [t0, t_bound].
    """
    if y0.size == 0:
        return math.inf
    interval = abs(t_bound - t0)
    scale = control.atol + np.abs(y0) * control.rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, interval) if interval > 0.0 else h0
    y1 = y0 + h0 * direction * f0
    with np.errstate(all="ignore"):
        try:
            f1 = fun(t0 + h0 * direction, y1)
        except ArithmeticError:
            return h0
        d2 = _rms((f1 - f0) / scale) / h0
    if not math.isfinite(d2):
        return h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    h = min(100 * h0, h1)
    return min(h, interval) if interval > 0.0 else h


class DormandPrince54:
    """Explicit Runge-Kutta 5(4) pair of Dormand and Prince.

    `status` is "running", "finished" (reached `t_bound`) or "collapsed" (the
    controller asked for a step below max(h_min, 16 eps |t|)). Non-finite
    stage values reject the step and shrink it by `fac_min`, so a right-hand
    side that returns NaN outside its domain is never stepped into.
    """

    def __init__(
        self, fun: RHS, t0: float, y0: np.ndarray, t_bound: float, control: StepControl
    ) -> None:
        self.control = control
        self.nfev = 0
        self._fun = fun
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.t_bound = float(t_bound)
        self.direction = 1.0 if t_bound >= t0 else -1.0
        self.f = self.fun(self.t, self.y)
        if control.first_step is not None:
            self.h_abs = control.first_step
        else:
            self.h_abs = select_initial_step(
                self.fun, self.t, self.y, self.f, self.direction, control, self.t_bound
            )
        self.h_abs = min(self.h_abs, control.h_max, abs(self.t_bound - self.t) or math.inf)
        self.status = "running" if self.t != self.t_bound else "finished"
        self.message = ""
        self.step_size = 0.0
        self.n_rejected = 0
        self.stiff = False
        self._err_old = 1e-4
        self._rejected_last = False
        self._stiff_hits = 0
        self._nonstiff_run = 0
        self._K = np.zeros((7, self.y.size))
        self._t_old = self.t
        self._y_old = self.y.copy()

    def fun(self, t: float, y: np.ndarray) -> np.ndarray:
        self.nfev += 1
        return np.asarray(self._fun(t, y), dtype=float)

    def _attempt(self, h: float) -> tuple[np.ndarray, np.ndarray, float, float]:
        """One trial step; returns (y_new, f_new, scaled error, h*lambda estimate)."""
        t, y, K = self.t, self.y, self._K
        K[0] = self.f
        y_stage = y
        with np.errstate(all="ignore"):
            try:
                for s in range(1, 6):
                    y_stage = y + h * (A[s, :s] @ K[:s])
                    K[s] = self.fun(t + C[s] * h, y_stage)
                y_new = y + h * (B @ K[:6])
                f_new = self.fun(t + h, y_new)
            except ArithmeticError:
                return y, self.f, math.nan, 0.0
            K[6] = f_new
            err_vec = h * (E @ K)
            scale = self.control.atol + self.control.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec) / scale)) if y.size else 0.0
            den = float(np.sum((y_new - y_stage) ** 2))
            num = float(np.sum((K[6] - K[5]) ** 2))
            hlam = abs(h) * math.sqrt(num / den) if den > 0.0 else 0.0
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))):
            err = math.nan
        return y_new, f_new, err, hlam

    def step(self) -> None:
        if self.status != "running":
            raise RuntimeError(f"step() called on a {self.status} solver")
        c = self.control
        h_abs = min(self.h_abs, c.h_max)
        while True:
            floor = max(c.h_min, 16.0 * EPS * abs(self.t))
            if h_abs < floor:
                self.status = "collapsed"
                self.message = f"step {h_abs:.3e} below floor {floor:.3e} at t={self.t:.12g}"
                return
            h = h_abs * self.direction
            t_new = self.t + h
            if self.direction * (t_new - self.t_bound) > 0:
                t_new = self.t_bound
                h = t_new - self.t
                h_abs = abs(h)
            y_new, f_new, err, hlam = self._attempt(h)
            if not math.isfinite(err):
                h_abs *= c.fac_min
                self.n_rejected += 1
                self._rejected_last = True
                continue
            if err <= 1.0:
                if err == 0.0:
                    factor = c.fac_max
                else:
                    factor = c.safety * err ** (-c.expo1) * self._err_old**c.beta
                    factor = min(c.fac_max, max(c.fac_min, factor))
                if self._rejected_last:
                    factor = min(1.0, factor)
                self._err_old = max(err, 1e-4)
                self._rejected_last = False
                break
            h_abs *= max(c.fac_min, c.safety * err ** (-c.expo1))
            self.n_rejected += 1
            self._rejected_last = True

        self._detect_stiffness(hlam)
        self._t_old, self._y_old = self.t, self.y
        self.step_size = h_abs
        self.t, self.y, self.f = t_new, y_new, f_new
        self.h_abs = h_abs * factor
        if self.t == self.t_bound:
            self.status = "finished"

    def _detect_stiffness(self, hlam: float) -> None:
        if hlam > STIFF_HLAMBDA:
            self._nonstiff_run = 0
            self._stiff_hits += 1
            if self._stiff_hits >= STIFF_HITS:
                self.stiff = True
        else:
            self._nonstiff_run += 1
            if self._nonstiff_run >= NONSTIFF_RESET:
                self._stiff_hits = 0

    def dense_output(self) -> Callable[[float], np.ndarray]:
        """Quartic interpolant on the last accepted step."""
        t_old, y_old = self._t_old, self._y_old
        h = self.t - t_old
        Q = self._K.T @ P

        def interpolate(t: float) -> np.ndarray:
            if h == 0.0:
                return y_old.copy()
            x = (t - t_old) / h
            powers = np.array([x, x * x, x**3, x**4])
            return y_old + h * (Q @ powers)

        return interpolate


def _radau_handover(
    fun: RHS, t: float, y: np.ndarray, t_end: float, control: StepControl, h: float,
    jac_sparsity: Any,
) -> sp_integrate.Radau:
    return sp_integrate.Radau(
        fun,
        t,
        y,
        t_end,
        rtol=max(control.rtol, 100 * EPS),
        atol=control.atol,
        first_step=h if h > 0 else None,
        max_step=control.h_max,
        jac_sparsity=jac_sparsity,
    )


def _implicit_step(solver: sp_integrate.Radau) -> str:
    """One Radau step; returns why it failed, or "" when it was accepted.

    Factorization and Newton errors raised inside scipy, a "failed" solver
    status and a non-finite new state all count as failures.
    """
    t_old = float(solver.t)
    try:
        with np.errstate(all="ignore"):
            solver.step()
    except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        return f"implicit solver raised at t={t_old:.12g}: {type(exc).__name__}: {exc}"
    if solver.status == "failed":
        return f"implicit solver failed at t={solver.t:.12g}: {solver.message}"
    if not np.all(np.isfinite(solver.y)):
        return f"implicit solver produced a non-finite state at t={solver.t:.12g}"
    return ""


def integrate(
    fun: RHS,
    t0: float,
    y0: Any,
    t_end: float,
    control: StepControl,
    *,
    stop: Callable[[float, np.ndarray], str | None] | None = None,
    on_step: Callable[[StepInfo], None] | None = None,
    record: bool = True,
    method: Method = "dopri5",
    jac_sparsity: Any = None,
) -> Integration:
    """Integrates y' = fun(t, y) from t0 towards t_end.

    Status is one of:
      finished   reached t_end
      stopped    `stop(t, y)` returned a reason (kept in `message`)
      collapsed  the step size fell below its floor, or the implicit solver failed
      exhausted  `control.max_steps` accepted steps were used

    With `method="auto"` the explicit pair runs until it flags stiffness, then
    the run continues with an implicit Radau IIA solver. `record=False` keeps
    only the first and last rows.
    """
    y0 = np.array(y0, dtype=float)
    ts: list[float] = [float(t0)]
    ys: list[np.ndarray] = [y0.copy()]
    hs: list[float] = [0.0]
    switched_at: float | None = None
    n_steps = 0
    nfev_before = 0
    n_rejected = 0

    solver: Any
    if method == "radau":
        solver = _radau_handover(
            fun, t0, y0, t_end, control, control.first_step or 0.0, jac_sparsity
        )
        switched_at = float(t0)
    else:
        solver = DormandPrince54(fun, t0, y0, t_end, control)

    status = "finished" if t0 == t_end else "running"
    message = ""
    while status == "running":
        if n_steps >= control.max_steps:
            status = "exhausted"
            message = f"step budget {control.max_steps} used up at t={solver.t:.12g}"
            break
        t_old = solver.t
        if isinstance(solver, DormandPrince54):
            solver.step()
            if solver.status == "collapsed":
                status, message = "collapsed", solver.message
                break
        else:
            failure = _implicit_step(solver)
            if failure:
                status, message = "collapsed", failure
                break
        n_steps += 1
        t_new, y_new = float(solver.t), np.array(solver.y, dtype=float)
        h = abs(t_new - t_old)
        if not isinstance(solver, DormandPrince54) and h < control.h_min:
            status = "collapsed"
            message = f"implicit step {h:.3e} below h_min at t={t_new:.12g}"
            break

        if record or len(ts) == 1:
            ts.append(t_new)
            ys.append(y_new)
            hs.append(h)
        else:
            ts[-1], ys[-1], hs[-1] = t_new, y_new, h
        if on_step is not None:
            on_step(StepInfo(t_old=float(t_old), t=t_new, y=y_new, dense=solver.dense_output()))

        if stop is not None:
            reason = stop(t_new, y_new)
            if reason:
                status, message = "stopped", reason
                break
        if solver.status == "finished":
            status = "finished"
            break

        if method == "auto" and isinstance(solver, DormandPrince54) and solver.stiff:
            n_rejected += solver.n_rejected
            nfev_before += solver.nfev
            switched_at = t_new
            logger.info("stiffness_switch", t=t_new, h=solver.step_size, nfev=solver.nfev)
            solver = _radau_handover(fun, t_new, y_new, t_end, control, solver.h_abs, jac_sparsity)

    nfev = nfev_before + int(solver.nfev)
    if isinstance(solver, DormandPrince54):
        n_rejected += solver.n_rejected

    return Integration(
        t=np.array(ts),
        y=np.array(ys),
        steps=np.array(hs),
        status=status,
        message=message,
        nfev=nfev,
        n_steps=n_steps,
        n_rejected=n_rejected,
        switched_at=switched_at,
    )


def sample_solution(
    fun: RHS, t0: float, y0: Any, times: Any, control: StepControl, method: Method = "dopri5"
) -> tuple[np.ndarray, np.ndarray, str]:
    """Solution values at the requested `times` (monotone, starting at or after t0).

    Values come from the dense output of the steps that straddle each time.
    Returns (times reached, values, status); the run stops early with the
    status of the underlying integration.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return times, np.zeros((0, np.size(y0))), "finished"
    out: list[np.ndarray] = []
    cursor = 0
    direction = 1.0 if times[-1] >= t0 else -1.0
    while cursor < times.size and direction * (times[cursor] - t0) <= 0.0:
        out.append(np.array(y0, dtype=float))
        cursor += 1

    def collect(step: StepInfo) -> None:
        nonlocal cursor
        while cursor < times.size and direction * (times[cursor] - step.t) <= 0.0:
            out.append(step.dense(float(times[cursor])))
            cursor += 1

    result = integrate(
        fun, t0, y0, float(times[-1]), control, on_step=collect, record=False, method=method
    )
    return times[: len(out)], np.array(out).reshape(len(out), -1), result.status
