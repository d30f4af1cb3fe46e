"""Regular expansion in the damping amplitude.

The phase curve of the damped affine system is expanded as
a(b) = a0(b) + eps * alpha1(b) + ..., where a0 is the lower branch of the
conic with constant C. alpha1 comes from quadrature; higher correctors are not
computed, and `corrector_convergence` checks the first order numerically.

Along a characteristic of the full field problem the zeroth-order second
derivative sigma0 = E_xx obeys a linear system in the clock s = E_x whose
solutions are (s-1)(C1 s + C2 q0(s)). The same density clock decides
whether a deeply compressed characteristic still turns back (`turns_back`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate as sp_integrate

from wavebreak.core.damping import DampingSpec, damping_integral
from wavebreak.core.errors import BranchTurningError, DomainError, FitError
from wavebreak.core.integrator import StepControl, integrate, sample_solution
from wavebreak.solvers.affine import integrate_phase, radicand, unperturbed_branch

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-12


@dataclass
class CorrectorCurve:
    b_grid: np.ndarray
    alpha1: np.ndarray
    b0: float
    C: float

    def perturbed(self, epsilon: float) -> np.ndarray:
        """First-order phase curve a0(b) + eps * alpha1(b) on the grid."""
        return unperturbed_branch(self.b_grid, self.C, -1) + epsilon * self.alpha1


def _corrector_integrand(spec: DampingSpec, C: float) -> Any:
    # w = log(1 - beta), u = e^w; a0(beta) = -sqrt(C u^2 + 2u - 1).
    f = spec.form.f

    def h(w: float) -> float:
        u = math.exp(w)
        r = C * u * u + 2.0 * u - 1.0
        return -math.sqrt(max(r, 0.0)) * float(f(u)) / (u * u)

    return h


def corrector_alpha1(C: float, b0: float, spec: DampingSpec, b_grid: Any) -> CorrectorCurve:
    """alpha1(b) = (1-b)**2 / a0(b) * int_b^b0 a0(beta) f(1-beta) / (1-beta)**3 d beta.

    Only f enters; the amplitude `spec.epsilon` is ignored. The integral is
    accumulated segment by segment in w = log(1 - beta).
    """
    if C < 0.0:
        raise DomainError(f"the corrector is defined for C >= 0, got C={C}")
    if not b0 < 1.0:
        raise DomainError(f"b0 must be < 1, got {b0}")
    b = np.asarray(b_grid, dtype=float)
    if b.ndim != 1 or np.any(b >= b0):
        raise DomainError(f"b_grid must lie strictly below b0={b0}")
    if np.any(radicand(b, C) <= 0.0):
        raise DomainError(f"a0 vanishes inside the grid for C={C}, b0={b0}")

    h = _corrector_integrand(spec, C)
    order = np.argsort(-b)  # b descending, w ascending
    w_nodes = np.log1p(-b[order])
    w = math.log1p(-b0)
    running = 0.0
    integral = np.empty_like(b)
    for k, w_next in zip(order, w_nodes):
        if w_next > w:
            piece, _ = sp_integrate.quad(
                h, w, float(w_next), epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200
            )
            running += piece
            w = float(w_next)
        integral[k] = running

    u = 1.0 - b
    a0 = unperturbed_branch(b, C, -1)
    alpha1 = u * u / a0 * integral
    return CorrectorCurve(b_grid=b, alpha1=np.asarray(alpha1, dtype=float), b0=b0, C=C)


@dataclass
class PersistenceBound:
    epsilon_bound: float
    persists: bool
    damping_integral: float
    note: str = ""


def blowup_persistence_bound(C: float, spec: DampingSpec, eta0: float = 1.0) -> PersistenceBound:
    """eps_bound = sqrt(C) / int_eta0^inf f / eta**2; zero when the integral diverges."""
    if not C > 0.0:
        raise DomainError(f"the persistence bound needs hyperbolic data C > 0, got C={C}")
    if not eta0 > 0.0:
        raise DomainError(f"eta0 must be positive, got {eta0}")
    integral = damping_integral(spec, eta0)
    if math.isinf(integral):
        return PersistenceBound(
            epsilon_bound=0.0,
            persists=spec.epsilon == 0.0,
            damping_integral=math.inf,
            note="infinite damping integral",
        )
    if integral == 0.0:
        return PersistenceBound(epsilon_bound=math.inf, persists=True, damping_integral=0.0)
    bound = math.sqrt(C) / integral
    return PersistenceBound(
        epsilon_bound=bound, persists=spec.epsilon < bound, damping_integral=integral
    )


@dataclass
class PersistencePrediction:
    """Corrector-based prediction: sign of (a0 + eps alpha1) / (1-b) deep in the tail."""

    slope: float
    persists: bool
    bound: PersistenceBound
    depth: float


def predict_persistence(
    C: float, spec: DampingSpec, eta0: float = 1.0, depth: float = 1e8
) -> PersistencePrediction:
    """Whether the first-order curve a0 + eps*alpha1 still runs off to -infinity.

    The curve starts on the lower branch at density eta0 (b0 = 1 - eta0) and is
    evaluated at density `depth`.
    """
    bound = blowup_persistence_bound(C, spec, eta0)
    b0 = 1.0 - eta0
    b_deep = 1.0 - depth
    curve = corrector_alpha1(C, b0, spec, [b_deep])
    a_first = float(curve.perturbed(spec.epsilon)[0])
    slope = a_first / depth
    return PersistencePrediction(slope=slope, persists=slope < 0.0, bound=bound, depth=depth)


@dataclass
class ConvergenceReport:
    b_eval: float
    epsilons: list[float]
    errors: list[float]
    orders: list[float] = field(default_factory=list)
    alpha1: float = 0.0

    @property
    def min_order(self) -> float:
        return min(self.orders) if self.orders else math.nan


def corrector_convergence(
    C: float,
    b0: float,
    spec: DampingSpec,
    b_eval: float = -0.5,
    eps_list: Any = (1e-2, 5e-3, 2.5e-3),
    tol: float = 1e-13,
) -> ConvergenceReport:
    """Errors |(a_eps(b) - a0(b)) / eps - alpha1(b)| and their observed orders in eps.

    a_eps comes from integrating the damped phase equation from the lower
    branch point (b0, a0(b0)).
    """
    eps_values = [float(e) for e in eps_list]
    if len(eps_values) < 2 or any(e <= 0.0 for e in eps_values):
        raise DomainError("need at least two positive epsilons")
    a_start = unperturbed_branch(b0, C, -1)
    a0 = unperturbed_branch(b_eval, C, -1)
    alpha1 = float(corrector_alpha1(C, b0, spec, [b_eval]).alpha1[0])
    errors = []
    for eps in eps_values:
        _, a = integrate_phase(a_start, b0, b_eval, spec.with_epsilon(eps), tol, [b0, b_eval])
        errors.append(abs((float(a[-1]) - a0) / eps - alpha1))
    orders = [
        math.log(errors[k] / errors[k + 1]) / math.log(eps_values[k] / eps_values[k + 1])
        for k in range(len(errors) - 1)
        if errors[k] > 0.0 and errors[k + 1] > 0.0
    ]
    return ConvergenceReport(
        b_eval=b_eval, epsilons=eps_values, errors=errors, orders=orders, alpha1=alpha1
    )


@dataclass
class SigmaZeroTrace:
    s: np.ndarray
    sigma0: np.ndarray
    xi0: np.ndarray
    C: float
    branch: int


def _check_branch(s_start: float, s_end: float, C: float) -> None:
    lo, hi = min(s_start, s_end), max(s_start, s_end)
    if not hi < 1.0:
        raise DomainError(f"s must stay below 1, got {hi}")
    # The radicand is concave for C < 0 and decreasing on s < 1 for C >= 0,
    # so its minimum over the range sits at an endpoint.
    if min(float(radicand(lo, C)), float(radicand(hi, C))) <= 0.0:
        raise BranchTurningError(f"q0(s) vanishes on [{lo}, {hi}] for C={C}")


def sigma0_rhs(C: float, branch: int) -> Any:
    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        sigma, xi = y
        q0 = unperturbed_branch(s, C, branch)
        u = 1.0 - s
        return np.array([xi / q0 - sigma / u, -(2.0 * q0 * xi + sigma) / (u * q0)])

    return rhs


def sigma0_system(
    s_range: tuple[float, float],
    init: tuple[float, float],
    C: float,
    branch: int = -1,
    samples: int = 41,
    tol: float = 1e-12,
) -> SigmaZeroTrace:
    """(sigma0, xi0) along the conic branch, sampled at `samples` equispaced s values."""
    s_start, s_end = (float(v) for v in s_range)
    if samples < 3:
        raise ValueError("need at least 3 samples")
    _check_branch(s_start, s_end, C)
    grid = np.linspace(s_start, s_end, samples)
    s, values, status = sample_solution(
        sigma0_rhs(C, branch), s_start, list(init), grid, StepControl.from_tol(tol)
    )
    if status != "finished":
        raise BranchTurningError(f"sigma0 integration stopped ({status}) before s={s_end}")
    return SigmaZeroTrace(s=s, sigma0=values[:, 0], xi0=values[:, 1], C=C, branch=branch)


def sigma0_closed_form(
    s: Any, C1: float, C2: float, C: float, branch: int = -1
) -> tuple[np.ndarray, np.ndarray]:
    """sigma0 = (s-1)(C1 s + C2 q0) and xi0 = C1 q0 (s-1) + C2 (q0**2 + s)."""
    s = np.asarray(s, dtype=float)
    q0 = np.asarray(unperturbed_branch(s, C, branch), dtype=float)
    sigma = (s - 1.0) * (C1 * s + C2 * q0)
    xi = C1 * q0 * (s - 1.0) + C2 * (q0 * q0 + s)
    return sigma, xi


@dataclass(frozen=True)
class SigmaZeroFit:
    C1: float
    C2: float
    residual: float


def fit_sigma0(samples: SigmaZeroTrace, C: float | None = None) -> SigmaZeroFit:
    """Solves for (C1, C2) from the first and last samples; residual is relative max deviation."""
    C = samples.C if C is None else C
    s, sigma = samples.s, samples.sigma0
    if s.size < 3:
        raise FitError(f"need at least 3 samples, got {s.size}")
    scale = float(np.max(np.abs(sigma)))
    if scale == 0.0:
        return SigmaZeroFit(C1=0.0, C2=0.0, residual=0.0)
    q0 = np.asarray(unperturbed_branch(s, C, samples.branch), dtype=float)
    i, j = 0, s.size - 1
    matrix = np.array([[s[i], q0[i]], [s[j], q0[j]]])
    det = float(np.linalg.det(matrix))
    if abs(det) <= 1e-12 * float(np.max(np.abs(matrix))) ** 2:
        raise FitError(f"degenerate sample placement: determinant {det:.3e}")
    rhs = np.array([sigma[i] / (s[i] - 1.0), sigma[j] / (s[j] - 1.0)])
    C1, C2 = np.linalg.solve(matrix, rhs)
    closed, _ = sigma0_closed_form(s, float(C1), float(C2), C, samples.branch)
    residual = float(np.max(np.abs(closed - sigma))) / scale
    return SigmaZeroFit(C1=float(C1), C2=float(C2), residual=residual)


@dataclass
class ConicFieldPath:
    """Zeroth-order (V, E, q) along one characteristic, clocked by w = log(1 - s)."""

    w: np.ndarray
    t: np.ndarray
    V: np.ndarray
    E: np.ndarray
    q: np.ndarray
    s: np.ndarray
    status: str


def _density_clock(spec: DampingSpec) -> Any:
    """(u, nu, dp/dw) at clock w for p = q / u, the sigma term dropped."""
    eps = spec.epsilon
    f = spec.form.f

    def rates(w: float, p: float) -> tuple[float, float, float]:
        with np.errstate(all="ignore"):
            u = float(np.exp(w))
            nu = eps * float(f(u)) if eps else 0.0
            return u, nu, (1.0 - u) / (p * u * u) + nu / u

    return rates


def field_along_conic(
    state: tuple[float, float, float, float, float],
    spec: DampingSpec,
    efolds: float = 4.0,
    tol: float = 1e-13,
    samples: int = 81,
) -> ConicFieldPath:
    """Follows one characteristic towards the singularity with density as the clock.

    `state` is (t, V, E, q, s) with q < 0. The sigma term is dropped. In
    w = log u, u = 1 - s, p = q / u:

        dV/dw = (E + nu V) / (p u)     dE/dw = -V / (p u)
        dp/dw = s / (p u**2) + nu / u  dt/dw = -1 / (p u)
    """
    t0, V0, E0, q0, s0 = (float(v) for v in state)
    u0 = 1.0 - s0
    if not u0 > 0.0:
        raise DomainError(f"density must be positive, got 1-s={u0}")
    if not q0 < 0.0:
        raise BranchTurningError(f"the characteristic is not compressing (q={q0})")
    rates = _density_clock(spec)

    def rhs(w: float, y: np.ndarray) -> np.ndarray:
        V, E, p, _t = y
        u, nu, dp = rates(w, p)
        with np.errstate(all="ignore"):
            pu = p * u
            return np.array([(E + nu * V) / pu, -V / pu, dp, -1.0 / pu])

    w0 = math.log(u0)
    grid = np.linspace(w0, w0 + efolds, samples)
    control = StepControl.from_tol(tol)
    w, values, status = sample_solution(rhs, w0, [V0, E0, q0 / u0, t0], grid, control)
    if values.shape[0] and np.any(values[:, 2] >= 0.0):
        keep = np.flatnonzero(values[:, 2] >= 0.0)[0]
        w, values, status = w[:keep], values[:keep], "turned"
    u = np.exp(w)
    return ConicFieldPath(
        w=w,
        t=values[:, 3],
        V=values[:, 0],
        E=values[:, 1],
        q=values[:, 2] * u,
        s=1.0 - u,
        status=status,
    )


TURN_EFOLDS = 60.0


@dataclass(frozen=True)
class TurnCheck:
    """Outcome of `turns_back`; `density` is where the check ended."""

    turned: bool
    density: float
    efolds: float
    status: str


def compression_rate(q: float, s: float, nu: float) -> float:
    """dq/dt = -q**2 - s - nu q without the sigma term."""
    return -q * q - s - nu * q


def turns_back(
    q: float, s: float, spec: DampingSpec, efolds: float = TURN_EFOLDS, tol: float = 1e-10
) -> TurnCheck:
    """Whether a compressing characteristic stops compressing within `efolds` e-folds of density.

    The characteristic is followed in the clock w = log(1 - s) with the same
    rates as `field_along_conic`. It has turned once dq/dt >= 0. A run that
    uses up its e-folds still compressing, or that the integrator cannot
    follow, has not turned.
    """
    u0 = 1.0 - float(s)
    if not u0 > 0.0:
        raise DomainError(f"density must be positive, got 1-s={u0}")
    if not q < 0.0:
        return TurnCheck(turned=True, density=u0, efolds=0.0, status="expanding")
    rates = _density_clock(spec)

    def rate_at(w: float, p: float) -> float:
        u, nu, _ = rates(w, p)
        return compression_rate(p * u, 1.0 - u, nu)

    w0 = math.log(u0)
    if rate_at(w0, q / u0) >= 0.0:
        return TurnCheck(turned=True, density=u0, efolds=0.0, status="turned")

    def rhs(w: float, y: np.ndarray) -> np.ndarray:
        return np.array([rates(w, y[0])[2]])

    def stop(w: float, y: np.ndarray) -> str | None:
        return "turned" if y[0] >= 0.0 or rate_at(w, y[0]) >= 0.0 else None

    result = integrate(
        rhs, w0, [q / u0], w0 + efolds, StepControl.from_tol(tol), stop=stop, record=False
    )
    w_last = result.t_final
    return TurnCheck(
        turned=result.status == "stopped",
        density=math.exp(min(w_last, 700.0)),
        efolds=w_last - w0,
        status="turned" if result.status == "stopped" else result.status,
    )
