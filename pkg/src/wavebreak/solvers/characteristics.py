"""Full-field solver: a Lagrangian ensemble of characteristics.

Along every characteristic x(t), x' = V, the damped Euler-Poisson system reads

    V' = -E - nu V          E' = V
    q' = -q**2 - s - (nu q - V nu'(n) sigma)
    s' = (1 - s) q          n = 1 - s

with q = V_x, s = E_x and sigma = E_xx. By default sigma and xi = V_xx are
carried along each characteristic as well,

    sigma' = n xi - 2 q sigma
    xi'    = -3 q xi - sigma - nu xi + 2 nu'(n) q sigma

which drops the V-weighted terms of the exact xi equation (V nu'' sigma**2
and V nu' sigma_x) and is exact without damping. Characteristics then evolve
independently. `Closure.STENCIL` instead reconstructs sigma across
neighbouring characteristics. Each particle also carries D, the integral of
2 nu V**2, so the energy budget V**2 + E**2 + D = const can be audited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable

import numpy as np
from scipy.interpolate import CubicSpline

from wavebreak.core.damping import DampingSpec
from wavebreak.core.errors import (
    DomainError,
    IntegrationFailure,
    NonPositiveDensityError,
)
from wavebreak.core.integrator import DormandPrince54, Method, StepControl, StepInfo, integrate
from wavebreak.core.outcome import SimOutcome, Trace, Verdict
from wavebreak.solvers.perturbation import TURN_EFOLDS, field_along_conic, turns_back
from wavebreak.solvers.stencils import (
    check_spacing,
    neighbour_pattern,
    nonuniform_derivative,
    spacings,
)
from wavebreak.utils.logging import get_logger

logger = get_logger(__name__)

FIELDS = ("x", "V", "E", "q", "s", "sigma", "xi", "D")
DIAGNOSTIC_COLUMNS = ("h", "min_q", "min_n", "max_n", "min_spacing", "energy", "budget")
BLOWUP_THRESHOLD = 1e8
SPACING_FLOOR = 1e-10
# Step collapse counts as breaking only with this much evidence of divergence.
COLLAPSE_MIN_Q = -1e4
COLLAPSE_SPACING_FACTOR = 1e4

Profile = Callable[[Any], Any]


class InitialDataKind(str, Enum):
    ZERO_VELOCITY_SINE = "zero-velocity-sine"
    DRIFTING_SINE = "drifting-sine"
    AFFINE = "affine"
    CUSTOM_TABLE = "custom-table"


class DomainMode(str, Enum):
    PERIODIC = "periodic"
    TRUNCATED = "truncated"


class Closure(str, Enum):
    """How sigma = E_xx enters the q equation."""

    TRANSPORTED = "transported"
    STENCIL = "stencil"


@dataclass(frozen=True)
class InitialData:
    """Cauchy data (V0, E0) with derivatives on [x0, x0 + L).

    Without `d2V0` / `d2E0` the seeds take second derivatives from the
    neighbouring first derivatives.
    """

    V0: Profile
    E0: Profile
    dV0: Profile
    dE0: Profile
    L: float = 2.0 * math.pi
    x0: float = 0.0
    mode: DomainMode = DomainMode.PERIODIC
    kind: InitialDataKind = InitialDataKind.CUSTOM_TABLE
    sigma_closure: bool = True
    label: str = ""
    d2V0: Profile | None = None
    d2E0: Profile | None = None

    @property
    def periodic(self) -> bool:
        return self.mode is DomainMode.PERIODIC

    @classmethod
    def zero_velocity_sine(cls, d: float, L: float = 2.0 * math.pi) -> InitialData:
        """V0 = 0, E0 = (d/k) sin kx with k = 2 pi / L, so n0 = 1 - d cos kx."""
        return cls.drifting_sine(d, slope=0.0, drift=0.0, L=L)

    @classmethod
    def drifting_sine(
        cls, d: float, slope: float = 1.0, drift: float = 0.5, L: float = 2.0 * math.pi
    ) -> InitialData:
        """V0 = drift - (slope/k) sin kx on top of the zero-velocity field."""
        if not L > 0.0:
            raise DomainError(f"period must be positive, got {L}")
        k = 2.0 * math.pi / L
        kind = (
            InitialDataKind.ZERO_VELOCITY_SINE
            if slope == 0.0 and drift == 0.0
            else InitialDataKind.DRIFTING_SINE
        )
        return cls(
            V0=lambda x: drift - (slope / k) * np.sin(k * np.asarray(x)),
            E0=lambda x: (d / k) * np.sin(k * np.asarray(x)),
            dV0=lambda x: -slope * np.cos(k * np.asarray(x)),
            dE0=lambda x: d * np.cos(k * np.asarray(x)),
            d2V0=lambda x: slope * k * np.sin(k * np.asarray(x)),
            d2E0=lambda x: -d * k * np.sin(k * np.asarray(x)),
            L=L,
            kind=kind,
            label=f"{kind.value}(d={d:g}, slope={slope:g}, drift={drift:g})",
        )

    @classmethod
    def affine(
        cls,
        a0: float,
        b0: float,
        A0: float = 0.0,
        B0: float = 0.0,
        L: float = 2.0 * math.pi,
        sigma_closure: bool = False,
    ) -> InitialData:
        """V0 = a0 x + A0, E0 = b0 x + B0 on [-L/2, L/2), truncated at the ends."""

        def zeros(x: Any) -> np.ndarray:
            return np.zeros_like(np.asarray(x, dtype=float))

        return cls(
            V0=lambda x: a0 * np.asarray(x) + A0,
            E0=lambda x: b0 * np.asarray(x) + B0,
            dV0=lambda x: np.full_like(np.asarray(x, dtype=float), a0),
            dE0=lambda x: np.full_like(np.asarray(x, dtype=float), b0),
            d2V0=zeros,
            d2E0=zeros,
            L=L,
            x0=-0.5 * L,
            mode=DomainMode.TRUNCATED,
            kind=InitialDataKind.AFFINE,
            sigma_closure=sigma_closure,
            label=f"affine(a0={a0:g}, b0={b0:g}, A0={A0:g}, B0={B0:g})",
        )
    @classmethod
    def from_table(
        cls, x: Any, V: Any, E: Any, L: float, mode: DomainMode = DomainMode.PERIODIC
    ) -> InitialData:
        """Cubic splines through tabulated V0, E0; periodic tables omit the point x0 + L."""
        x = np.asarray(x, dtype=float)
        V = np.asarray(V, dtype=float)
        E = np.asarray(E, dtype=float)
        if x.ndim != 1 or x.size < 4 or V.shape != x.shape or E.shape != x.shape:
            raise DomainError("table needs matching 1-D columns x, V, E with at least 4 rows")
        if np.any(np.diff(x) <= 0.0):
            raise DomainError("table x must be strictly increasing")
        if mode is DomainMode.PERIODIC:
            if not x[-1] < x[0] + L:
                raise DomainError("periodic table must lie within one period")
            xs = np.append(x, x[0] + L)
            V_spline = CubicSpline(xs, np.append(V, V[0]), bc_type="periodic")
            E_spline = CubicSpline(xs, np.append(E, E[0]), bc_type="periodic")
        else:
            V_spline = CubicSpline(x, V)
            E_spline = CubicSpline(x, E)
            L = float(x[-1] - x[0])
        return cls(
            V0=V_spline,
            E0=E_spline,
            dV0=V_spline.derivative(),
            dE0=E_spline.derivative(),
            d2V0=V_spline.derivative(2),
            d2E0=E_spline.derivative(2),
            L=L,
            x0=float(x[0]),
            mode=mode,
            kind=InitialDataKind.CUSTOM_TABLE,
            label=f"table({x.size} rows)",
        )

    def with_sigma_closure(self, enabled: bool) -> InitialData:
        return replace(self, sigma_closure=enabled)


@dataclass
class CharacteristicEnsemble:
    t: float
    x: np.ndarray
    V: np.ndarray
    E: np.ndarray
    q: np.ndarray
    s: np.ndarray
    L: float
    mode: DomainMode = DomainMode.PERIODIC
    D: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    xi: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        for name in ("D", "sigma", "xi"):
            if getattr(self, name).size != self.x.size:
                setattr(self, name, np.zeros_like(self.x))

    @property
    def N(self) -> int:
        return int(self.x.size)

    @property
    def period(self) -> float | None:
        return self.L if self.mode is DomainMode.PERIODIC else None

    @property
    def density(self) -> np.ndarray:
        return 1.0 - self.s

    @property
    def energy(self) -> np.ndarray:
        return self.V * self.V + self.E * self.E

    def state_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.x, self.V, self.E, self.q, self.s, self.sigma, self.xi, self.D]
        )

    @classmethod
    def from_state(
        cls, t: float, y: np.ndarray, L: float, mode: DomainMode
    ) -> CharacteristicEnsemble:
        x, V, E, q, s, sigma, xi, D = (
            np.array(part) for part in np.split(np.asarray(y), len(FIELDS))
        )
        return cls(t=float(t), x=x, V=V, E=E, q=q, s=s, L=L, mode=mode, D=D, sigma=sigma, xi=xi)


def seed_ensemble(data: InitialData, N: int) -> CharacteristicEnsemble:
    """N characteristics at t = 0 with exact pointwise data."""
    if N < 16:
        raise DomainError(f"need at least 16 characteristics, got N={N}")
    if data.periodic:
        x = data.x0 + data.L * np.arange(N) / N
    else:
        x = np.linspace(data.x0, data.x0 + data.L, N)
    s = np.asarray(data.dE0(x), dtype=float) * np.ones(N)
    if np.any(s >= 1.0):
        k = int(np.argmax(s))
        raise NonPositiveDensityError(
            f"E0' = {s[k]:.6g} >= 1 at x = {x[k]:.6g}: initial density must be positive"
        )
    q = np.asarray(data.dV0(x), dtype=float) * np.ones(N)
    period = data.L if data.periodic else None
    if data.d2E0 is None:
        sigma = nonuniform_derivative(x, s, period)
    else:
        sigma = np.asarray(data.d2E0(x), dtype=float) * np.ones(N)
    if data.d2V0 is None:
        xi = nonuniform_derivative(x, q, period)
    else:
        xi = np.asarray(data.d2V0(x), dtype=float) * np.ones(N)
    return CharacteristicEnsemble(
        t=0.0,
        x=x,
        V=np.asarray(data.V0(x), dtype=float) * np.ones(N),
        E=np.asarray(data.E0(x), dtype=float) * np.ones(N),
        q=q,
        s=s,
        L=data.L,
        mode=data.mode,
        sigma=sigma,
        xi=xi,
    )


def spacing_floor(L: float, N: int, factor: float = SPACING_FLOOR) -> float:
    """Crossing threshold, relative to the seed spacing L / N."""
    return factor * L / N


def reconstruct_sigma(ens: CharacteristicEnsemble, floor: float | None = None) -> np.ndarray:
    """sigma = ds/dx at each characteristic from its neighbours' positions."""
    floor = spacing_floor(ens.L, ens.N) if floor is None else floor
    check_spacing(ens.x, ens.period, floor)
    return nonuniform_derivative(ens.x, ens.s, ens.period)


def characteristic_conics(ens: CharacteristicEnsemble) -> np.ndarray:
    """Pointwise conic constants (q**2 + 2s - 1) / (1-s)**2."""
    return (ens.q * ens.q + 2.0 * ens.s - 1.0) / (1.0 - ens.s) ** 2


def field_rhs(
    spec: DampingSpec,
    N: int,
    L: float,
    mode: DomainMode,
    sigma_closure: bool = True,
    closure: Closure = Closure.TRANSPORTED,
) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand side on the field-major state laid out as FIELDS.

    Under the stencil closure sigma and xi are left at their seed values.
    """
    period = L if mode is DomainMode.PERIODIC else None
    eps = spec.epsilon
    transported = closure is Closure.TRANSPORTED
    at = {name: slice(k * N, (k + 1) * N) for k, name in enumerate(FIELDS)}

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        x, V, E, q, s = (y[at[name]] for name in FIELDS[:5])
        sigma, xi = y[at["sigma"]], y[at["xi"]]
        n = 1.0 - s
        if np.any(n <= 0.0):
            return np.full_like(y, np.nan)
        out = np.zeros_like(y)
        out[at["x"]] = V
        out[at["E"]] = V
        out[at["s"]] = n * q
        if eps == 0.0:
            out[at["V"]] = -E
            out[at["q"]] = -q * q - s
            if transported:
                out[at["sigma"]] = n * xi - 2.0 * q * sigma
                out[at["xi"]] = -3.0 * q * xi - sigma
            return out
        nu = spec.nu(n)
        nu_prime = spec.nu_prime(n)
        damping_q = nu * q
        if sigma_closure:
            coupling = sigma if transported else nonuniform_derivative(x, s, period)
            damping_q = damping_q - V * nu_prime * coupling
        out[at["V"]] = -E - nu * V
        out[at["q"]] = -q * q - s - damping_q
        if transported:
            out[at["sigma"]] = n * xi - 2.0 * q * sigma
            out[at["xi"]] = -3.0 * q * xi - sigma - nu * xi + 2.0 * nu_prime * q * sigma
        out[at["D"]] = 2.0 * nu * V * V
        return out

    return rhs


class FieldStepper:
    """Advances an ensemble one adaptive step at a time with a shared step size.

    Under the stencil closure a step that brings two neighbours within the
    crossing floor raises ImminentCrossingError.
    """

    def __init__(
        self,
        ens: CharacteristicEnsemble,
        spec: DampingSpec,
        control: StepControl,
        *,
        sigma_closure: bool = True,
        closure: Closure = Closure.TRANSPORTED,
        floor: float | None = None,
        t_bound: float = math.inf,
    ) -> None:
        self.L, self.mode, self.N = ens.L, ens.mode, ens.N
        self.closure = closure
        self.floor = spacing_floor(ens.L, ens.N) if floor is None else floor
        check_spacing(ens.x, ens.period, self.floor)
        self._solver = DormandPrince54(
            field_rhs(spec, ens.N, ens.L, ens.mode, sigma_closure, closure),
            ens.t,
            ens.state_vector(),
            t_bound,
            control,
        )

    @property
    def ensemble(self) -> CharacteristicEnsemble:
        return CharacteristicEnsemble.from_state(self._solver.t, self._solver.y, self.L, self.mode)

    def step(self) -> CharacteristicEnsemble:
        self._solver.step()
        if self._solver.status == "collapsed":
            raise IntegrationFailure(self._solver.message)
        ens = self.ensemble
        if self.closure is Closure.STENCIL:
            check_spacing(ens.x, ens.period, self.floor)
        return ens


def step_field(
    ens: CharacteristicEnsemble,
    spec: DampingSpec,
    control: StepControl,
    sigma_closure: bool = True,
    closure: Closure = Closure.TRANSPORTED,
) -> CharacteristicEnsemble:
    """One adaptive step of the coupled system; returns a new ensemble."""
    return FieldStepper(ens, spec, control, sigma_closure=sigma_closure, closure=closure).step()


@dataclass
class FieldSnapshot:
    t: float
    x: np.ndarray
    V: np.ndarray
    E: np.ndarray
    q: np.ndarray
    s: np.ndarray

    @property
    def n(self) -> np.ndarray:
        return 1.0 - self.s


class FieldRecorder:
    """Per-step diagnostics, snapshots and running per-characteristic extrema.

    Holding only accumulators keeps long runs at large N small in memory;
    `record_fields=False` also drops the snapshots.
    """

    def __init__(
        self,
        initial: CharacteristicEnsemble,
        t_end: float,
        snapshot_count: int = 50,
        record_fields: bool = True,
    ) -> None:
        self.N = initial.N
        self.L, self.mode = initial.L, initial.mode
        self.record_fields = record_fields
        self.snapshot_times = np.linspace(initial.t, t_end, max(snapshot_count, 2))
        self._next = 0
        self.snapshots: list[FieldSnapshot] = []
        self.rows: list[list[float]] = []
        self.times: list[float] = []
        self.initial_energy = initial.energy.copy()
        self.max_energy = float(np.max(self.initial_energy)) if self.N else 0.0
        self._running_min = self.initial_energy.copy()
        self.max_increase = np.zeros(self.N)
        self.max_budget = np.zeros(self.N)
        self.deepest_q = float(np.min(initial.q))
        self.deepest_index = int(np.argmin(initial.q))
        self.deepest_t = initial.t
        self.reentered = bool(self.deepest_q >= 0.0)
        self.max_density = float(np.max(initial.density))
        self._take_snapshots(initial.t, lambda _t: initial.state_vector())
        self._append(initial, 0.0)

    def _take_snapshots(self, t: float, dense: Callable[[float], np.ndarray]) -> None:
        while self._next < self.snapshot_times.size and self.snapshot_times[self._next] <= t:
            ts = float(self.snapshot_times[self._next])
            if self.record_fields:
                ens = CharacteristicEnsemble.from_state(ts, dense(ts), self.L, self.mode)
                self.snapshots.append(
                    FieldSnapshot(ts, ens.x, ens.V, ens.E, ens.q, ens.s)
                )
            self._next += 1

    def _append(self, ens: CharacteristicEnsemble, h: float) -> None:
        W = ens.energy
        n = ens.density
        budget = self.initial_energy - W - ens.D
        self.times.append(ens.t)
        self.rows.append(
            [
                h,
                float(np.min(ens.q)),
                float(np.min(n)),
                float(np.max(n)),
                float(np.min(spacings(ens.x, ens.period))),
                float(np.sum(W)),
                float(np.max(np.abs(budget))),
            ]
        )
        np.maximum(self.max_increase, W - self._running_min, out=self.max_increase)
        np.minimum(self._running_min, W, out=self._running_min)
        np.maximum(self.max_budget, np.abs(budget), out=self.max_budget)
        self.max_energy = max(self.max_energy, float(np.max(W)))
        self.max_density = max(self.max_density, float(np.max(n)))

        k = int(np.argmin(ens.q))
        if ens.q[k] < self.deepest_q:
            self.deepest_q, self.deepest_index, self.deepest_t = float(ens.q[k]), k, ens.t
            self.reentered = False
        elif ens.q[self.deepest_index] > 0.0:
            self.reentered = True

    def __call__(self, step: StepInfo) -> None:
        self._take_snapshots(step.t, step.dense)
        ens = CharacteristicEnsemble.from_state(step.t, step.y, self.L, self.mode)
        self._append(ens, abs(step.h))

    def trace(self) -> Trace:
        rows = np.array(self.rows) if self.rows else np.zeros((0, len(DIAGNOSTIC_COLUMNS)))
        return Trace(
            t=np.array(self.times),
            states=rows,
            steps=rows[:, 0] if rows.size else np.zeros(0),
            columns=DIAGNOSTIC_COLUMNS,
        )


@dataclass
class FieldRun:
    """Outcome of `run_field` with the recorder's accumulators."""

    outcome: SimOutcome
    spec: DampingSpec
    data: InitialData
    N: int
    tol: float
    t_end: float
    final: CharacteristicEnsemble
    snapshots: list[FieldSnapshot]
    initial_energy: np.ndarray
    max_energy_increase: np.ndarray
    max_budget_residual: np.ndarray
    max_energy: float
    deepest_q: float
    deepest_index: int
    deepest_t: float
    reentered: bool
    switched_at: float | None = None
    closure: Closure = Closure.TRANSPORTED
    turned_back: int = 0

    @property
    def verdict(self) -> Verdict:
        return self.outcome.verdict




def _classify(
    status: str,
    message: str,
    t_final: float,
    t_end: float,
    min_q: float,
    min_gap: float,
    floor: float,
    *,
    crossing: bool = True,
    deepest_turns: bool = False,
) -> Verdict:
    if status == "finished":
        return Verdict.smooth(t_end)
    if status == "stopped":
        return Verdict.blowup(t_final)
    if crossing and min_gap < COLLAPSE_SPACING_FACTOR * floor:
        return Verdict.blowup(t_final)
    if min_q < COLLAPSE_MIN_Q and not deepest_turns:
        return Verdict.blowup(t_final)
    raise IntegrationFailure(
        f"field integration {status} at t={t_final:.12g} without divergence "
        f"(min q={min_q:.3e}, min spacing={min_gap:.3e}): {message}"
    )


def run_field(
    data: InitialData,
    spec: DampingSpec,
    t_end: float,
    tol: float = 1e-8,
    N: int = 256,
    *,
    method: Method = "auto",
    closure: Closure = Closure.TRANSPORTED,
    threshold: float = BLOWUP_THRESHOLD,
    turn_efolds: float = TURN_EFOLDS,
    floor_factor: float = SPACING_FLOOR,
    snapshot_count: int = 50,
    record_fields: bool = True,
    h_min: float = 1e-14,
    max_steps: int = 2_000_000,
) -> FieldRun:
    """Runs the ensemble to t_end or to the first breaking signal.

    A characteristic whose q drops below -threshold is followed ahead in the
    density clock (`turns_back`). It breaks the run unless it stops
    compressing within `turn_efolds` e-folds of density; characteristics that
    turn are not checked again until q climbs back above -threshold.

    Under the stencil closure two neighbours closer than
    `floor_factor * L / N` also break the run. Under the transported closure
    the characteristics are independent and the spacing is only reported.

    A step collapse counts as breaking only with min q below -1e4 on a
    characteristic that does not turn back, or (stencil closure) a gap within
    1e4 of the floor; otherwise it raises IntegrationFailure.
    """
    if not 0.0 < tol <= 1e-3:
        raise DomainError(f"tol must lie in (0, 1e-3], got {tol}")
    if not t_end > 0.0:
        raise DomainError(f"t_end must be positive, got {t_end}")
    ens = seed_ensemble(data, N)
    floor = spacing_floor(data.L, N, floor_factor)
    check_spacing(ens.x, ens.period, floor)
    recorder = FieldRecorder(ens, t_end, snapshot_count, record_fields)
    period = ens.period
    stencil = closure is Closure.STENCIL
    q_part = slice(3 * N, 4 * N)
    s_part = slice(4 * N, 5 * N)
    cleared: set[int] = set()
    ever_cleared: set[int] = set()

    def stop(t: float, y: np.ndarray) -> str | None:
        q, s = y[q_part], y[s_part]
        deep = np.flatnonzero(q < -threshold)
        cleared.intersection_update(deep.tolist())
        for k in deep.tolist():
            if k in cleared:
                continue
            check = turns_back(float(q[k]), float(s[k]), spec, turn_efolds)
            if not check.turned:
                return (
                    f"min q = {q[k]:.3e} below -{threshold:.1e} at characteristic {k}, "
                    f"still compressing after {check.efolds:.3g} e-folds"
                )
            cleared.add(k)
            ever_cleared.add(k)
            logger.debug("turn_back_cleared", index=k, t=t, q=float(q[k]), density=check.density)
        if stencil:
            gaps = spacings(y[:N], period)
            if np.min(gaps) < floor:
                k = int(np.argmin(gaps))
                return f"characteristics {k} and {(k + 1) % N} crossing (gap {gaps[k]:.3e})"
        return None

    control = StepControl.from_tol(tol, h_min=h_min, max_steps=max_steps)
    result = integrate(
        field_rhs(spec, N, data.L, data.mode, data.sigma_closure, closure),
        0.0,
        ens.state_vector(),
        t_end,
        control,
        stop=stop,
        on_step=recorder,
        record=False,
        method=method,
        jac_sparsity=neighbour_pattern(N, len(FIELDS), data.periodic, reach=2 if stencil else 0),
    )
    final = CharacteristicEnsemble.from_state(result.t_final, result.y_final, data.L, data.mode)
    min_gap = float(np.min(spacings(final.x, period)))
    min_q = float(np.min(final.q))
    deepest_turns = False
    if result.status not in ("finished", "stopped") and min_q < COLLAPSE_MIN_Q:
        k = int(np.argmin(final.q))
        deepest_turns = turns_back(min_q, float(final.s[k]), spec, turn_efolds).turned
    verdict = _classify(
        result.status, result.message, result.t_final, t_end, min_q, min_gap, floor,
        crossing=stencil, deepest_turns=deepest_turns,
    )
    if verdict.is_blowup:
        logger.info("blowup_detected", t_star=verdict.time, reason=result.message, N=N)
    trace = recorder.trace()
    diagnostics: dict[str, Any] = {
        "min_q": float(np.min(trace.column("min_q"))),
        "min_n": float(np.min(trace.column("min_n"))),
        "max_n": recorder.max_density,
        "min_spacing": float(np.min(trace.column("min_spacing"))),
        "steps": result.n_steps,
        "rejected": result.n_rejected,
        "nfev": result.nfev,
        "status": result.status,
        "reason": result.message,
        "N": N,
        "tol": tol,
        "closure": closure.value,
        "turned_back": len(ever_cleared),
        "reentered": recorder.reentered,
        "switched_at": result.switched_at,
    }
    logger.info(
        "field_run_complete", verdict=str(verdict), steps=result.n_steps, N=N,
        epsilon=spec.epsilon, law=spec.form.label, closure=closure.value,
    )
    return FieldRun(
        outcome=SimOutcome(verdict=verdict, trace=trace, diagnostics=diagnostics),
        spec=spec,
        data=data,
        N=N,
        tol=tol,
        t_end=t_end,
        final=final,
        snapshots=recorder.snapshots,
        initial_energy=recorder.initial_energy,
        max_energy_increase=recorder.max_increase,
        max_budget_residual=recorder.max_budget,
        max_energy=recorder.max_energy,
        deepest_q=recorder.deepest_q,
        deepest_index=recorder.deepest_index,
        deepest_t=recorder.deepest_t,
        reentered=recorder.reentered,
        switched_at=result.switched_at,
        closure=closure,
        turned_back=len(ever_cleared),
    )


@dataclass
class EnergyAudit:
    """Per-characteristic check that V**2 + E**2 never increases."""

    initial_energy: np.ndarray
    max_increase: np.ndarray
    allowed: np.ndarray
    budget_residual: float
    tol: float
    budget_limit: float = 1e-5

    @property
    def violations(self) -> np.ndarray:
        return np.flatnonzero(self.max_increase > self.allowed)

    @property
    def max_violation(self) -> float:
        excess = self.max_increase - self.allowed
        return float(np.max(excess)) if excess.size else 0.0

    @property
    def max_relative_increase(self) -> float:
        rel = self.max_increase / (1.0 + self.initial_energy)
        return float(np.max(rel)) if rel.size else 0.0

    @property
    def monotone(self) -> bool:
        return self.violations.size == 0

    @property
    def budget_ok(self) -> bool:
        return self.budget_residual <= self.budget_limit

    @property
    def passes(self) -> bool:
        return self.monotone and self.budget_ok


def energy_audit(
    run: FieldRun, tol: float | None = None, budget_limit: float = 1e-5
) -> EnergyAudit:
    """Monotonicity of V**2 + E**2 within 10 tol (1 + W0) and the closure of the dissipation budget.

    The budget residual is max |W0 - W - D| over the run, relative to the
    largest initial energy (absolute when all data vanish).
    """
    tol = run.tol if tol is None else tol
    W0 = run.initial_energy
    scale = float(np.max(W0)) if W0.size and np.max(W0) > 0.0 else 1.0
    budget = float(np.max(run.max_budget_residual)) / scale if W0.size else 0.0
    return EnergyAudit(
        initial_energy=W0,
        max_increase=run.max_energy_increase,
        allowed=10.0 * tol * (1.0 + W0),
        budget_residual=budget,
        tol=tol,
        budget_limit=budget_limit,
    )


@dataclass
class VelocityLimit:
    """V on the breaking characteristic as the singularity is approached."""

    index: int
    t_star: float
    v_field: float
    v_last: float
    v_efold_earlier: float
    v_mid: float
    decreasing: bool
    efolds: float
    density_last: float


def v_at_blowup(run: FieldRun, efolds: float = 4.0) -> VelocityLimit:
    """Follows the characteristic with the most negative q for `efolds` more e-folds of density.

    `v_mid` is taken halfway through the refinement, `v_efold_earlier` one
    e-fold of (1 - s) before its end.
    """
    if not run.verdict.is_blowup:
        raise DomainError(f"run did not break: {run.verdict}")
    if efolds < 1.0:
        raise DomainError(f"need at least one e-fold of refinement, got {efolds}")
    final = run.final
    k = int(np.argmin(final.q))
    path = field_along_conic(
        (final.t, final.V[k], final.E[k], final.q[k], final.s[k]), run.spec, efolds=efolds
    )
    if path.w.size < 3:
        raise IntegrationFailure(f"refinement along characteristic {k} ended early ({path.status})")
    target = path.w[-1] - 1.0
    earlier = int(np.argmin(np.abs(path.w - target)))
    mid = int(np.argmin(np.abs(path.w - 0.5 * (path.w[0] + path.w[-1]))))
    v_last = float(path.V[-1])
    v_earlier = float(path.V[earlier])
    return VelocityLimit(
        index=k,
        t_star=run.verdict.time,
        v_field=float(final.V[k]),
        v_last=v_last,
        v_efold_earlier=v_earlier,
        v_mid=float(path.V[mid]),
        decreasing=abs(v_last) < abs(v_earlier),
        efolds=float(path.w[-1] - path.w[0]),
        density_last=float(1.0 - path.s[-1]),
    )
