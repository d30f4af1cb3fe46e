"""Phase-plane and time-series reproductions for the affine system with f(n) = n**gamma."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from wavebreak.core.damping import DampingSpec
from wavebreak.core.errors import DomainError
from wavebreak.core.outcome import Verdict
from wavebreak.export.writer import ResultSet
from wavebreak.solvers.affine import (
    AffineState,
    DirectionField,
    PhaseCurve,
    conic_constant,
    direction_field,
    integrate_affine,
    phase_curve,
)
from wavebreak.utils.logging import get_logger

logger = get_logger(__name__)

DEFAULT_START = (2.0, 0.5)


@dataclass
class PhasePortrait:
    """Direction field plus the undamped and damped curves from one start."""

    C: float
    epsilon: float
    field: DirectionField
    undamped: PhaseCurve
    damped: PhaseCurve

    def to_results(self, name: str) -> ResultSet:
        result = ResultSet(scenario=name, kind="figure")
        result.add(
            "direction_field",
            "direction_field",
            {"b": self.field.b, "a": self.field.a, "db": self.field.db, "da": self.field.da},
        )
        for stem, curve in (("curve_eps0", self.undamped), ("curve_eps", self.damped)):
            result.add(stem, "phase_curve", {"t": curve.t, "b": curve.b, "a": curve.a})
        result.summary = {
            "figure": "fig1",
            "C": self.C,
            "epsilon": self.epsilon,
            "undamped": str(self.undamped.verdict),
            "damped": str(self.damped.verdict),
            "damped_returns": self.damped.returns_to_upper(),
        }
        result.plots.append("fig1")
        return result


def reproduce_fig1(
    epsilon: float = 0.8,
    a0: float = DEFAULT_START[0],
    b0: float = DEFAULT_START[1],
    gamma: float = 2.0,
    t_end: float = 50.0,
    tol: float = 1e-10,
) -> PhasePortrait:
    """Direction field of the damped (a, b) system and two phase curves from (a0, b0).

    The dashed curve is undamped; the solid one carries nu = epsilon * n**gamma.
    """
    if not epsilon >= 0.0:
        raise DomainError(f"epsilon must be nonnegative, got {epsilon}")
    spec = DampingSpec.power_law(gamma, epsilon=epsilon)
    start = AffineState(a0, b0)
    portrait = PhasePortrait(
        C=conic_constant(a0, b0).C,
        epsilon=epsilon,
        field=direction_field(spec),
        undamped=phase_curve(start, spec.with_epsilon(0.0), t_end, tol),
        damped=phase_curve(start, spec, t_end, tol),
    )
    logger.info(
        "fig1_complete",
        C=portrait.C,
        undamped=str(portrait.undamped.verdict),
        damped=str(portrait.damped.verdict),
    )
    return portrait


@dataclass
class BSeries:
    t: np.ndarray
    b: np.ndarray
    verdict: Verdict


@dataclass
class TimeSeriesPair:
    C: float
    epsilon: float
    undamped: BSeries
    damped: BSeries
    envelope_t: np.ndarray
    envelope: np.ndarray

    def early_gap(self, horizon: float) -> float:
        """Largest |b_damped - b_undamped| on [0, horizon]."""
        grid = self.undamped.t[self.undamped.t <= horizon]
        if grid.size == 0:
            return 0.0
        damped = np.interp(grid, self.damped.t, self.damped.b)
        undamped = np.interp(grid, self.undamped.t, self.undamped.b)
        return float(np.max(np.abs(damped - undamped)))

    def envelope_decays(self, floor: float = 1e-6) -> bool:
        """Whether |b| peaks above `floor` shrink from one to the next."""
        peaks = self.envelope[self.envelope > floor]
        return bool(peaks.size >= 2 and np.all(np.diff(peaks) < 0.0))

    def to_results(self, name: str) -> ResultSet:
        result = ResultSet(scenario=name, kind="figure")
        result.add("b_eps0", "b_series", {"t": self.undamped.t, "b": self.undamped.b})
        result.add("b_eps", "b_series", {"t": self.damped.t, "b": self.damped.b})
        result.add("envelope", "envelope", {"t": self.envelope_t, "abs_b": self.envelope})
        result.summary = {
            "figure": "fig2",
            "C": self.C,
            "epsilon": self.epsilon,
            "undamped": str(self.undamped.verdict),
            "damped": str(self.damped.verdict),
            "envelope_decays": self.envelope_decays(),
            "peaks": int(self.envelope.size),
        }
        result.plots.append("fig2")
        return result


def _series(start: AffineState, spec: DampingSpec, t_end: float, tol: float) -> BSeries:
    outcome = integrate_affine(start, spec, t_end, tol)
    trace = outcome.trace
    if outcome.verdict.is_blowup:
        trace = trace.truncated(outcome.verdict.time)
    return BSeries(trace.t, trace.column("b"), outcome.verdict)


def reproduce_fig2(
    epsilon: float = 1.0,
    a0: float = DEFAULT_START[0],
    b0: float = DEFAULT_START[1],
    gamma: float = 2.0,
    t_end: float = 200.0,
    tol: float = 1e-10,
) -> TimeSeriesPair:
    """b(t) without damping (breaks) and with nu = epsilon * n**gamma (decaying oscillation)."""
    spec = DampingSpec.power_law(gamma, epsilon=epsilon)
    start = AffineState(a0, b0)
    undamped = _series(start, spec.with_epsilon(0.0), t_end, tol)
    damped = _series(start, spec, t_end, tol)
    peaks, _ = find_peaks(np.abs(damped.b))
    pair = TimeSeriesPair(
        C=conic_constant(a0, b0).C,
        epsilon=epsilon,
        undamped=undamped,
        damped=damped,
        envelope_t=damped.t[peaks],
        envelope=np.abs(damped.b[peaks]),
    )
    logger.info(
        "fig2_complete", undamped=str(undamped.verdict), damped=str(damped.verdict),
        peaks=int(peaks.size),
    )
    return pair
