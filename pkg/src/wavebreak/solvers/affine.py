"""Affine solutions V = a(t) x + A(t), E = b(t) x + B(t).

Substituting the ansatz reduces the damped Euler-Poisson system to

    a' = -a**2 - b - nu(1-b) a          b' = (1-b) a
    A' = -A (a + nu(1-b)) - B           B' = (1-b) A

with density n = 1 - b. For nu = 0 the phase curves are the conics
a**2 = 1 - 2b + C (1-b)**2; C > 0 trajectories leave to a, b -> -infinity in
finite time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from wavebreak.core.damping import DampingSpec
from wavebreak.core.errors import (
    BranchTurningError,
    DomainError,
    IntegrationFailure,
    NonPositiveDensityError,
)
from wavebreak.core.integrator import StepControl, integrate, sample_solution
from wavebreak.core.outcome import SimOutcome, Trace, Verdict
from wavebreak.utils.logging import get_logger

logger = get_logger(__name__)

AFFINE_COLUMNS = ("a", "b", "A", "B")

CONIC_TOL = 1e-12
BLOWUP_THRESHOLD = 1e8
HARD_STOP = 1e12
STEP_SHRINK = 1e6
H_MIN = 1e-14


class ConicKind(str, Enum):
    ELLIPSE = "ellipse"
    PARABOLA = "parabola"
    HYPERBOLA = "hyperbola"


@dataclass(frozen=True)
class ConicClass:
    C: float
    kind: ConicKind

    @property
    def bounded(self) -> bool:
        return self.kind is ConicKind.ELLIPSE


@dataclass(frozen=True)
class AffineState:
    a: float
    b: float
    A: float = 0.0
    B: float = 0.0
    t: float = 0.0

    def __post_init__(self) -> None:
        if not self.b < 1.0:
            raise NonPositiveDensityError(f"b must be < 1 (density 1-b > 0), got b={self.b}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.A, self.B], dtype=float)

    @property
    def density(self) -> float:
        return 1.0 - self.b


def conic_invariant(a: Any, b: Any) -> Any:
    """(a**2 + 2b - 1) / (1-b)**2, conserved along undamped trajectories."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (a * a + 2.0 * b - 1.0) / ((1.0 - b) ** 2)


def conic_constant(a0: float, b0: float, tol: float = CONIC_TOL) -> ConicClass:
    if not b0 < 1.0:
        raise NonPositiveDensityError(f"b0 must be < 1 (nonpositive density), got b0={b0}")
    C = (a0 * a0 + 2.0 * b0 - 1.0) / ((1.0 - b0) ** 2)
    if abs(C) <= tol:
        kind = ConicKind.PARABOLA
    elif C < 0.0:
        kind = ConicKind.ELLIPSE
    else:
        kind = ConicKind.HYPERBOLA
    return ConicClass(C=C, kind=kind)


def radicand(b: Any, C: float) -> Any:
    b = np.asarray(b, dtype=float)
    return 1.0 - 2.0 * b + C * (1.0 - b) ** 2


def unperturbed_branch(b: Any, C: float, sign: int) -> Any:
    """sign * sqrt(1 - 2b + C (1-b)**2); a scalar in, a scalar out."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    r = radicand(b, C)
    # Rounding at the vertex of the conic.
    slack = 1e-13 * (1.0 + np.abs(C) * (1.0 - np.asarray(b, dtype=float)) ** 2)
    if np.any(r < -slack):
        raise DomainError(f"point off the real locus of the conic C={C}: radicand {np.min(r):.3e}")
    value = sign * np.sqrt(np.maximum(r, 0.0))
    return float(value) if np.ndim(value) == 0 else value


def affine_rhs(spec: DampingSpec, flipped_sign: bool = False) -> Any:
    """Right-hand side for (a, b, A, B); NaN outside n = 1 - b > 0 so the step is rejected."""
    offset_sign = -1.0 if flipped_sign else 1.0
    eps = spec.epsilon
    f = spec.form.f

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        a, b, A, B = y
        n = 1.0 - b
        if not n > 0.0:
            return np.full(4, np.nan)
        nu = eps * float(f(n)) if eps else 0.0
        return np.array([-a * a - b - nu * a, n * a, -A * (a + offset_sign * nu) - B, n * A])

    return rhs


def detect_blowup(
    trace: Trace, threshold: float = BLOWUP_THRESHOLD, shrink: float = STEP_SHRINK
) -> float | None:
    """Earliest t with |a| > threshold and a step at least `shrink` times below the reference.

    The reference is the median accepted step over the first half of the run
    in time, which is the regular part of any trajectory that breaks.
    """
    if len(trace) < 3:
        return None
    t, steps = trace.t, trace.steps
    a = np.abs(trace.column("a"))
    early = (t <= t[0] + 0.5 * (t[-1] - t[0])) & (steps > 0)
    if not np.any(early):
        early = steps > 0
    reference = float(np.median(steps[early]))
    hits = np.flatnonzero((a > threshold) & (steps > 0) & (steps <= reference / shrink))
    if hits.size == 0:
        return None
    return float(t[hits[0]])


def integrate_affine(
    init: AffineState,
    spec: DampingSpec,
    t_end: float,
    tol: float = 1e-10,
    *,
    flipped_sign: bool = False,
    threshold: float = BLOWUP_THRESHOLD,
    h_min: float = H_MIN,
    max_steps: int = 2_000_000,
    conic_tol: float = CONIC_TOL,
) -> SimOutcome:
    """Integrates the affine system and classifies the run.

    Raises IntegrationFailure when stepping stops without the blow-up
    signature (|a| above threshold together with step collapse).
    """
    if not 0.0 < tol <= 1e-3:
        raise DomainError(f"tol must lie in (0, 1e-3], got {tol}")
    if not t_end > init.t:
        raise DomainError(f"t_end={t_end} must exceed the initial time {init.t}")
    control = StepControl.from_tol(tol, h_min=h_min, max_steps=max_steps)
    hard_stop = max(HARD_STOP, 1e4 * threshold)

    def stop(t: float, y: np.ndarray) -> str | None:
        if abs(y[0]) > hard_stop:
            return f"|a| exceeded {hard_stop:.1e} at t={t:.12g}"
        return None

    result = integrate(
        affine_rhs(spec, flipped_sign), init.t, init.as_array(), t_end, control, stop=stop
    )
    trace = Trace(result.t, result.y, result.steps, AFFINE_COLUMNS)
    b = trace.column("b")
    if np.any(1.0 - b <= 0.0):
        lost = float(trace.t[np.argmax(1.0 - b <= 0.0)])
        raise IntegrationFailure(f"density 1-b lost positivity at t={lost}")

    conic = conic_constant(init.a, init.b, conic_tol)
    if result.finished:
        verdict = Verdict.smooth(t_end)
    else:
        t_star = detect_blowup(trace, threshold)
        if t_star is None:
            logger.warning(
                "affine_integration_failed", status=result.status, reason=result.message
            )
            raise IntegrationFailure(
                f"integration {result.status} without blow-up signature: {result.message}"
            )
        verdict = Verdict.blowup(t_star)
        logger.debug("blowup_detected", t_star=t_star, C=conic.C, epsilon=spec.epsilon)

    resolved = trace.truncated(0.9 * verdict.time) if verdict.is_blowup else trace
    drift = 0.0
    if len(resolved):
        inv = conic_invariant(resolved.column("a"), resolved.column("b"))
        drift = float(np.max(np.abs(inv - conic.C)))
    a = trace.column("a")
    diagnostics: dict[str, Any] = {
        "C": conic.C,
        "conic": conic.kind.value,
        "max_abs_a": float(np.max(np.abs(a))),
        "min_b": float(np.min(b)),
        "min_density": float(np.min(1.0 - b)),
        "steps": result.n_steps,
        "rejected": result.n_rejected,
        "nfev": result.nfev,
        "conic_drift": drift,
        "status": result.status,
    }
    logger.debug("affine_run_complete", verdict=str(verdict), steps=result.n_steps)
    return SimOutcome(verdict=verdict, trace=trace, diagnostics=diagnostics)


@dataclass
class PhaseCurve:
    """(b, a) samples of one trajectory, ordered by time."""

    t: np.ndarray
    b: np.ndarray
    a: np.ndarray
    verdict: Verdict

    def first_lower_crossing(self) -> float | None:
        return first_lower_crossing(self.t, self.a)

    def returns_to_upper(self) -> bool:
        """Whether the curve is back in a > 0 after its first visit to a < 0."""
        below = np.flatnonzero(self.a < 0.0)
        return bool(below.size and np.any(self.a[below[0] :] > 0.0))


def phase_curve(
    init: AffineState,
    spec: DampingSpec,
    t_end: float = 50.0,
    tol: float = 1e-10,
    *,
    flipped_sign: bool = False,
) -> PhaseCurve:
    """Phase curve a(b) up to t_end or the last resolved point before blow-up."""
    outcome = integrate_affine(init, spec, t_end, tol, flipped_sign=flipped_sign)
    trace = outcome.trace
    if outcome.verdict.is_blowup:
        trace = trace.truncated(outcome.verdict.time)
    return PhaseCurve(trace.t, trace.column("b"), trace.column("a"), outcome.verdict)


def first_lower_crossing(t: np.ndarray, a: np.ndarray) -> float | None:
    """Time of the first sign change of a from + to -, linearly interpolated."""
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    if a.size and a[0] <= 0.0:
        return float(t[0]) if a[0] < 0.0 else None
    idx = np.flatnonzero((a[:-1] > 0.0) & (a[1:] <= 0.0))
    if idx.size == 0:
        return None
    k = int(idx[0])
    return float(t[k] + (t[k + 1] - t[k]) * a[k] / (a[k] - a[k + 1]))


def phase_rhs(spec: DampingSpec) -> Any:
    """da/db = -(a**2 + b) / ((1-b) a) - nu(1-b) / (1-b), with b as the clock."""
    eps = spec.epsilon
    f = spec.form.f

    def rhs(b: float, y: np.ndarray) -> np.ndarray:
        a = y[0]
        n = 1.0 - b
        nu = eps * float(f(n)) if eps else 0.0
        return np.array([-(a * a + b) / (n * a) - nu / n])

    return rhs


def integrate_phase(
    a_start: float,
    b_start: float,
    b_end: float,
    spec: DampingSpec,
    tol: float = 1e-12,
    samples: Any = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Phase equation integrated in b from b_start to b_end < b_start on the lower branch.

    Returns (b, a) at `samples` (default: every accepted step).
    """
    if not b_end < b_start < 1.0:
        raise DomainError(f"need b_end < b_start < 1, got {b_end}, {b_start}")
    if not a_start < 0.0:
        raise BranchTurningError(f"b decreases only on the lower branch; got a_start={a_start}")
    control = StepControl.from_tol(tol)
    rhs = phase_rhs(spec)
    if samples is not None:
        b, values, status = sample_solution(rhs, b_start, [a_start], samples, control)
        a = values[:, 0]
    else:
        result = integrate(rhs, b_start, [a_start], b_end, control, stop=_branch_stop)
        b, a, status = result.t, result.y[:, 0], result.status
    if status != "finished" or np.any(a >= 0.0):
        raise BranchTurningError(f"phase curve left the lower branch before b={b_end}")
    return b, a


def _branch_stop(b: float, y: np.ndarray) -> str | None:
    return "a reached 0" if y[0] >= -1e-12 else None


@dataclass
class DirectionField:
    b: np.ndarray
    a: np.ndarray
    db: np.ndarray
    da: np.ndarray


def direction_field(
    spec: DampingSpec,
    b_range: tuple[float, float] = (-3.0, 0.9),
    a_range: tuple[float, float] = (-4.0, 4.0),
    shape: tuple[int, int] = (25, 25),
    flipped_sign: bool = False,
) -> DirectionField:
    """Unit vectors (b', a') of the (a, b) subsystem on a regular grid.

    The (A, B) equations do not feed back into (a, b), so `flipped_sign` has no
    effect here; it is accepted so every affine entry point takes it.
    """
    if not b_range[1] < 1.0:
        raise DomainError(f"b grid must stay below 1, got upper bound {b_range[1]}")
    bb, aa = np.meshgrid(
        np.linspace(*b_range, shape[0]), np.linspace(*a_range, shape[1]), indexing="xy"
    )
    n = 1.0 - bb
    nu = spec.nu(n)
    da = -aa * aa - bb - nu * aa
    db = n * aa
    norm = np.hypot(da, db)
    norm[norm == 0.0] = 1.0
    return DirectionField(
        b=bb.ravel(), a=aa.ravel(), db=(db / norm).ravel(), da=(da / norm).ravel()
    )


def compare_phase_curves(
    lower: PhaseCurve, upper: PhaseCurve, samples: int = 200
) -> float:
    """Largest amount by which `upper` dips below `lower` on their common lower-branch segment.

    Both curves are restricted to their first stretch with a < 0 and b
    decreasing; a result <= 0 means upper(b) >= lower(b) throughout.
    """
    seg_lo = _lower_segment(lower)
    seg_up = _lower_segment(upper)
    if seg_lo is None or seg_up is None:
        return -math.inf
    b_hi = min(seg_lo[0].max(), seg_up[0].max())
    b_lo = max(seg_lo[0].min(), seg_up[0].min())
    if not b_lo < b_hi:
        return -math.inf
    grid = np.linspace(b_lo, b_hi, samples)
    a_lo = np.interp(grid, seg_lo[0], seg_lo[1])
    a_up = np.interp(grid, seg_up[0], seg_up[1])
    return float(np.max(a_lo - a_up))


def _lower_segment(curve: PhaseCurve) -> tuple[np.ndarray, np.ndarray] | None:
    below = np.flatnonzero(curve.a < 0.0)
    if below.size == 0:
        return None
    start = int(below[0])
    stop = start
    while (
        stop + 1 < curve.a.size
        and curve.a[stop + 1] < 0.0
        and curve.b[stop + 1] < curve.b[stop]
    ):
        stop += 1
    if stop == start:
        return None
    # Ascending b for np.interp.
    return curve.b[start : stop + 1][::-1], curve.a[start : stop + 1][::-1]
