"""Exception hierarchy shared by the solvers, the scenario runner and the CLI."""

from __future__ import annotations


class WavebreakError(Exception):
    """Base class for every error raised on purpose by wavebreak."""


class DomainError(WavebreakError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonPositiveDensityError(DomainError):
    """Initial data with E0' >= 1 somewhere, i.e. density n = 1 - E0' <= 0."""


class UnsupportedAnalysisError(WavebreakError):
    """The damping law carries no tail exponent, so its tail cannot be classified."""


class IntegrationFailure(WavebreakError, RuntimeError):
    """The integrator stopped without evidence of a gradient catastrophe."""


class BranchTurningError(WavebreakError, ValueError):
    """q0(s) vanishes inside a range that must stay on one branch of the conic."""


class FitError(WavebreakError, ValueError):
    """The closed-form fit could not be solved from the given samples."""


class ImminentCrossingError(WavebreakError):
    """Adjacent characteristics are about to cross."""

    def __init__(self, message: str, index: int = -1, spacing: float = 0.0) -> None:
        super().__init__(message)
        self.index = index
        self.spacing = spacing


class ManifestError(WavebreakError, ValueError):
    """A scenario manifest failed validation; `errors` holds one line per field."""

    def __init__(self, message: str, errors: list[str] | None = None) -> None:
        super().__init__(message)
        self.errors = errors or []
