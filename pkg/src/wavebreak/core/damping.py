"""Damping laws nu(n) = epsilon * f(n) and the analytic criteria evaluated on f.

A law is either a power law f(n) = nu0 * n**gamma or a custom law that declares
its power-law tail exponent. The tail exponent is all the criteria need: the
suppression condition (divergence of the integral of f(eta)/eta**2) holds iff
gamma >= 1, the parabolic condition iff gamma > 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Any, Callable, Literal

import numpy as np
from pydantic import BaseModel, Field
from scipy import integrate

from wavebreak.core.errors import DomainError, UnsupportedAnalysisError

FloatArray = np.ndarray
Law = Callable[[Any], Any]

# Grid for the sampled nonnegativity check.
NONNEGATIVITY_GRID = np.logspace(-3.0, 6.0, 181)
# Default grid for the tail regularity check.
TAIL_GRID = np.logspace(0.0, 8.0, 161)
TAIL_SPREAD_TOL = 1e-3
TAIL_MATCH_TOL = 1e-2
QUADRATURE_UPPER = 1e8


@dataclass(frozen=True)
class PowerLaw:
    """f(eta) = nu0 * eta**gamma with its exact derivative."""

    nu0: float
    gamma: float

    def f(self, eta: Any) -> Any:
        return self.nu0 * np.power(eta, self.gamma)

    def fprime(self, eta: Any) -> Any:
        return self.nu0 * self.gamma * np.power(eta, self.gamma - 1.0)

    @property
    def tail_gamma(self) -> float:
        return self.gamma

    @property
    def label(self) -> str:
        return f"{self.nu0:g}*n^{self.gamma:g}"


@dataclass(frozen=True)
class CustomLaw:
    """User supplied f and f' with an optional declared tail exponent."""

    f: Law
    fprime: Law
    tail_gamma: float | None = None
    label: str = "custom"
    kind: str | None = None
    nu0: float = 1.0


def _saturating(nu0: float, eta: Any) -> Any:
    return nu0 * eta / (1.0 + eta)


def _saturating_prime(nu0: float, eta: Any) -> Any:
    return nu0 / (1.0 + eta) ** 2


def _log_linear(nu0: float, eta: Any) -> Any:
    return nu0 * eta * np.log1p(eta)


def _log_linear_prime(nu0: float, eta: Any) -> Any:
    return nu0 * (np.log1p(eta) + eta / (1.0 + eta))


def saturating_law(nu0: float = 1.0) -> CustomLaw:
    """f = nu0 * eta / (1 + eta); bounded, tail exponent 0."""
    return CustomLaw(
        f=partial(_saturating, nu0),
        fprime=partial(_saturating_prime, nu0),
        tail_gamma=0.0,
        label=f"{nu0:g}*n/(1+n)",
        kind="saturating",
        nu0=nu0,
    )


def log_linear_law(nu0: float = 1.0) -> CustomLaw:
    """f = nu0 * eta * log(1 + eta); tail exponent 1 reached only logarithmically."""
    return CustomLaw(
        f=partial(_log_linear, nu0),
        fprime=partial(_log_linear_prime, nu0),
        tail_gamma=1.0,
        label=f"{nu0:g}*n*log(1+n)",
        kind="log-linear",
        nu0=nu0,
    )


@dataclass(frozen=True)
class DampingSpec:
    """Immutable damping law nu(n) = epsilon * f(n)."""

    epsilon: float
    form: PowerLaw | CustomLaw

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise DomainError(f"epsilon must be a finite nonnegative number, got {self.epsilon}")
        if isinstance(self.form, PowerLaw):
            if not (math.isfinite(self.form.nu0) and self.form.nu0 > 0.0):
                raise DomainError(f"nu0 must be positive, got {self.form.nu0}")
            if not math.isfinite(self.form.gamma):
                raise DomainError(f"gamma must be finite, got {self.form.gamma}")
        with np.errstate(all="ignore"):
            values = np.asarray(self.form.f(NONNEGATIVITY_GRID), dtype=float)
        bad = ~np.isfinite(values) | (values < 0.0)
        if np.any(bad):
            eta = float(NONNEGATIVITY_GRID[np.argmax(bad)])
            raise DomainError(f"f must be finite and nonnegative; fails at eta={eta:.3g}")
        if isinstance(self.form, CustomLaw) and self.form.tail_gamma is not None:
            self._check_declared_tail(float(self.form.tail_gamma))

    def _check_declared_tail(self, declared: float) -> None:
        """A declared tail exponent must agree with eta f'/f wherever that ratio has settled."""
        if not math.isfinite(declared):
            raise DomainError(f"tail_gamma must be finite, got {declared}")
        report = check_tail_regularity(self)
        if not report.passes:
            return
        if abs(report.limit_estimate - declared) > TAIL_MATCH_TOL * max(1.0, abs(declared)):
            raise DomainError(
                f"declared tail exponent {declared:g} of '{self.form.label}' does not match "
                f"eta f'/f -> {report.limit_estimate:.4g}"
            )

    @classmethod
    def power_law(cls, gamma: float, nu0: float = 1.0, epsilon: float = 0.0) -> DampingSpec:
        return cls(epsilon=epsilon, form=PowerLaw(nu0=nu0, gamma=gamma))

    @classmethod
    def undamped(cls) -> DampingSpec:
        return cls.power_law(gamma=0.0, epsilon=0.0)

    def f(self, n: Any) -> Any:
        return self.form.f(n)

    def fprime(self, n: Any) -> Any:
        return self.form.fprime(n)

    def nu(self, n: Any) -> Any:
        """epsilon * f(n) without the domain check; callers guarantee n > 0."""
        if self.epsilon == 0.0:
            return 0.0 * np.asarray(n, dtype=float)
        return self.epsilon * self.form.f(n)

    def nu_prime(self, n: Any) -> Any:
        if self.epsilon == 0.0:
            return 0.0 * np.asarray(n, dtype=float)
        return self.epsilon * self.form.fprime(n)

    @property
    def tail_gamma(self) -> float | None:
        return self.form.tail_gamma

    def with_epsilon(self, epsilon: float) -> DampingSpec:
        return replace(self, epsilon=epsilon)

    def describe(self) -> str:
        return f"nu(n) = {self.epsilon:g} * {self.form.label}"

    def to_config(self) -> DampingConfig:
        """Manifest form of the law; custom laws without a named kind cannot be serialized."""
        if isinstance(self.form, PowerLaw):
            return DampingConfig(
                kind="power", nu0=self.form.nu0, gamma=self.form.gamma, epsilon=self.epsilon
            )
        if self.form.kind in _NAMED_LAWS:
            return DampingConfig(
                kind=self.form.kind,  # type: ignore[arg-type]
                nu0=self.form.nu0,
                gamma=self.form.tail_gamma or 0.0,
                epsilon=self.epsilon,
            )
        raise UnsupportedAnalysisError(f"custom law '{self.form.label}' has no manifest form")

    @classmethod
    def from_config(cls, config: DampingConfig | dict[str, Any]) -> DampingSpec:
        if isinstance(config, dict):
            config = DampingConfig.model_validate(config)
        return config.to_spec()


_NAMED_LAWS: dict[str, Callable[[float], CustomLaw]] = {
    "saturating": saturating_law,
    "log-linear": log_linear_law,
}


class DampingConfig(BaseModel):
    """Manifest block `damping = {kind, nu0, gamma, epsilon}`."""

    kind: Literal["power", "saturating", "log-linear"] = Field(
        "power", description="power: nu0*n^gamma; named custom laws otherwise"
    )
    nu0: float = Field(1.0, gt=0, description="Amplitude of f")
    gamma: float = Field(2.0, description="Power-law exponent (ignored by named laws)")
    epsilon: float = Field(0.0, ge=0, description="Perturbation amplitude")

    def to_spec(self) -> DampingSpec:
        if self.kind == "power":
            return DampingSpec.power_law(gamma=self.gamma, nu0=self.nu0, epsilon=self.epsilon)
        return DampingSpec(epsilon=self.epsilon, form=_NAMED_LAWS[self.kind](self.nu0))


class TailReport(BaseModel):
    """Estimate of lim eta f'(eta)/f(eta) on the last decade of a grid."""

    limit_estimate: float
    spread: float
    passes: bool
    zero_points: list[float] = Field(default_factory=list)


def evaluate(spec: DampingSpec, n: float) -> float:
    """nu(n) = epsilon * f(n) for a single positive density."""
    if not n > 0.0:
        raise DomainError(f"density must be positive, got n={n}")
    return float(spec.epsilon * spec.form.f(n))


def _require_tail(spec: DampingSpec) -> float:
    gamma = spec.tail_gamma
    if gamma is None:
        raise UnsupportedAnalysisError(
            f"damping law '{spec.form.label}' declares no tail exponent; "
            "the integral conditions cannot be decided from samples"
        )
    return gamma


def check_suppression_condition(spec: DampingSpec) -> bool:
    """True iff the integral of f(eta)/eta**2 to infinity diverges (tail gamma >= 1)."""
    return _require_tail(spec) >= 1.0


def check_parabolic_condition(spec: DampingSpec) -> bool:
    """True iff eta * int^eta f/eta**(5/2) diverges; strict, so gamma = 1/2 is excluded."""
    return _require_tail(spec) > 0.5


def check_tail_regularity(spec: DampingSpec, grid: Any = None) -> TailReport:
    """Checks that eta f'(eta)/f(eta) settles on the last decade of `grid`.

    The spread is (max - min) / max(|limit|, 1) over the grid points in
    [max(grid)/10, max(grid)], so exponents below one are compared absolutely.
    Points where f vanishes are skipped and reported in `zero_points`.
    """
    eta = np.asarray(TAIL_GRID if grid is None else grid, dtype=float)
    if eta.ndim != 1 or eta.size < 2 or np.any(np.diff(eta) <= 0.0) or eta[0] <= 0.0:
        raise ValueError("grid must be a strictly increasing sequence of positive values")
    if eta[-1] < 1e4:
        raise ValueError(f"grid must reach at least 1e4, got max {eta[-1]:.3g}")

    with np.errstate(all="ignore"):
        f = np.asarray(spec.f(eta), dtype=float) * np.ones_like(eta)
        fp = np.asarray(spec.fprime(eta), dtype=float) * np.ones_like(eta)
    zero = f == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(zero, np.nan, eta * fp / np.where(zero, 1.0, f))

    tail = (eta >= eta[-1] / 10.0) & ~zero & np.isfinite(ratio)
    zero_points = [float(v) for v in eta[zero]]
    if np.count_nonzero(tail) < 2:
        return TailReport(
            limit_estimate=float("nan"), spread=float("inf"), passes=False, zero_points=zero_points
        )
    values = ratio[tail]
    limit = float(values[-1])
    spread = float((values.max() - values.min()) / max(abs(limit), 1.0))
    return TailReport(
        limit_estimate=limit,
        spread=spread,
        passes=spread < TAIL_SPREAD_TOL,
        zero_points=zero_points,
    )


def damping_integral(spec: DampingSpec, eta0: float, upper: float | None = None) -> float:
    """Integral of f(eta)/eta**2 over [eta0, upper]; `upper=None` means infinity.

    Power laws are integrated analytically. Custom laws use adaptive quadrature
    in w = log(eta); a divergent tail (declared gamma >= 1) returns inf.
    """
    if not eta0 > 0.0:
        raise DomainError(f"eta0 must be positive, got {eta0}")
    if upper is not None and not upper > eta0:
        raise DomainError(f"upper limit {upper} must exceed eta0={eta0}")

    form = spec.form
    if isinstance(form, PowerLaw):
        g = form.gamma
        if upper is None:
            if g >= 1.0:
                return math.inf
            return form.nu0 * eta0 ** (g - 1.0) / (1.0 - g)
        if g == 1.0:
            return form.nu0 * math.log(upper / eta0)
        return form.nu0 * (upper ** (g - 1.0) - eta0 ** (g - 1.0)) / (g - 1.0)

    if upper is None:
        if _require_tail(spec) >= 1.0:
            return math.inf
        return _log_quad(form.f, math.log(eta0), math.inf)
    return _log_quad(form.f, math.log(eta0), math.log(upper))


def damping_integral_quadrature(
    spec: DampingSpec, eta0: float = 1.0, upper: float = QUADRATURE_UPPER
) -> float:
    """Raw quadrature of f/eta**2 on [eta0, upper], the cross-check for any law."""
    return _log_quad(spec.form.f, math.log(eta0), math.log(upper))


def _log_quad(f: Law, w0: float, w1: float) -> float:
    def integrand(w: float) -> float:
        return float(f(math.exp(w))) * math.exp(-w)

    value, _ = integrate.quad(integrand, w0, w1, epsabs=1e-13, epsrel=1e-12, limit=400)
    return float(value)


def predicted_behavior(spec: DampingSpec) -> str:
    """Behavior class implied by the tail exponent."""
    gamma = _require_tail(spec)
    if gamma >= 1.0:
        return "suppresses for all data"
    if gamma > 0.5:
        return "suppresses C=0 data only; C>0 data blow up for small eps"
    if gamma == 0.0:
        return "constant-damping regime, blow-up data exist"
    return "no suppression guarantee; C>=0 data blow up for small eps"
