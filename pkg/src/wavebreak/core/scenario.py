"""Scenario: the manifest that drives one experiment."""

from __future__ import annotations

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional

import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from wavebreak.core.damping import DampingConfig
from wavebreak.core.errors import ManifestError
from wavebreak.solvers.characteristics import Closure, DomainMode, InitialData, InitialDataKind


class ScenarioKind(str, Enum):
    AFFINE = "affine"
    PHASE = "phase"
    FIGURE = "figure"
    CORRECTOR = "corrector"
    PERSISTENCE = "persistence"
    SIGMA0 = "sigma0"
    FIELD = "field"
    EULER_ANALOG = "euler-analog"
    CONDITION_CHECK = "condition-check"
    GAMMA_SWEEP = "gamma-sweep"


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataConfig(_Params):
    """Initial data block of field and Euler-analog manifests."""

    kind: InitialDataKind = InitialDataKind.ZERO_VELOCITY_SINE
    d: float = Field(0.5, description="Field amplitude; n0 = 1 - d cos kx")
    slope: float = Field(1.0, description="Velocity slope amplitude of drifting-sine data")
    drift: float = Field(0.5, description="Uniform drift of drifting-sine data")
    L: float = Field(2.0 * math.pi, gt=0, description="Period or truncated interval length")
    a0: float = 0.0
    b0: float = 0.0
    A0: float = 0.0
    B0: float = 0.0
    table: Optional[str] = Field(None, description="CSV with columns x, V, E")
    mode: DomainMode = DomainMode.PERIODIC
    sigma_closure: Optional[bool] = None

    @model_validator(mode="after")
    def _check_kind(self) -> DataConfig:
        sine = (InitialDataKind.ZERO_VELOCITY_SINE, InitialDataKind.DRIFTING_SINE)
        if self.kind in sine and not abs(self.d) < 1.0:
            raise ValueError(f"|d| must be below 1 for positive density, got d={self.d}")
        if self.kind is InitialDataKind.AFFINE and not self.b0 < 1.0:
            raise ValueError(f"b0 must be below 1 for positive density, got b0={self.b0}")
        if self.kind is InitialDataKind.CUSTOM_TABLE and not self.table:
            raise ValueError("custom-table data needs a 'table' path")
        return self

    def build(self) -> InitialData:
        if self.kind is InitialDataKind.ZERO_VELOCITY_SINE:
            data = InitialData.zero_velocity_sine(self.d, self.L)
        elif self.kind is InitialDataKind.DRIFTING_SINE:
            data = InitialData.drifting_sine(self.d, self.slope, self.drift, self.L)
        elif self.kind is InitialDataKind.AFFINE:
            data = InitialData.affine(self.a0, self.b0, self.A0, self.B0, self.L)
        else:
            path = Path(str(self.table))
            if not path.exists():
                raise FileNotFoundError(f"Initial data table not found: {path}")
            frame = pd.read_csv(path, comment="#")
            data = InitialData.from_table(
                frame["x"].to_numpy(), frame["V"].to_numpy(), frame["E"].to_numpy(),
                self.L, self.mode,
            )
        if self.sigma_closure is not None:
            data = data.with_sigma_closure(self.sigma_closure)
        return data


class AffineParams(_Params):
    a0: float
    b0: float = Field(..., lt=1.0)
    A0: float = 0.0
    B0: float = 0.0
    t_end: float = Field(100.0, gt=0)
    tol: float = Field(1e-10, gt=0, le=1e-3)
    damping: DampingConfig = Field(default_factory=DampingConfig)
    flipped_sign: bool = False


class PhaseParams(_Params):
    a0: float
    b0: float = Field(..., lt=1.0)
    t_end: float = Field(50.0, gt=0)
    tol: float = Field(1e-10, gt=0, le=1e-3)
    damping: DampingConfig = Field(default_factory=DampingConfig)
    b_range: tuple[float, float] = (-3.0, 0.9)
    a_range: tuple[float, float] = (-4.0, 4.0)
    grid: int = Field(25, ge=2)
    flipped_sign: bool = False


class FigureParams(_Params):
    figure: Literal["fig1", "fig2"]
    epsilon: Optional[float] = Field(None, ge=0)
    gamma: float = 2.0
    a0: float = 2.0
    b0: float = Field(0.5, lt=1.0)
    t_end: Optional[float] = Field(None, gt=0)
    tol: float = Field(1e-10, gt=0, le=1e-3)


class CorrectorParams(_Params):
    C: float = Field(..., ge=0)
    b0: float = Field(0.0, lt=1.0)
    b_min: float = -10.0
    samples: int = Field(101, ge=2)
    damping: DampingConfig = Field(default_factory=lambda: DampingConfig(epsilon=0.01))
    convergence: bool = True
    b_eval: float = -0.5
    eps_list: list[float] = Field(default_factory=lambda: [1e-2, 5e-3, 2.5e-3], min_length=2)

    @model_validator(mode="after")
    def _check_grid(self) -> CorrectorParams:
        if not self.b_min < self.b0:
            raise ValueError(f"b_min={self.b_min} must lie below b0={self.b0}")
        return self


class PersistenceParams(_Params):
    C: float = Field(..., gt=0)
    eta0: float = Field(1.0, gt=0)
    damping: DampingConfig = Field(
        default_factory=lambda: DampingConfig(gamma=0.5, epsilon=0.5)
    )
    t_end: float = Field(50.0, gt=0)
    tol: float = Field(1e-10, gt=0, le=1e-3)


class Sigma0Params(_Params):
    C: float
    init: tuple[float, float] = (1.0, 0.0)
    s_range: tuple[float, float] = (0.0, -5.0)
    samples: int = Field(41, ge=3)
    branch: Literal[-1, 1] = -1
    tol: float = Field(1e-12, gt=0, le=1e-3)


class FieldParams(_Params):
    data: DataConfig = Field(default_factory=DataConfig)
    damping: DampingConfig = Field(default_factory=DampingConfig)
    N: int = Field(256, ge=16)
    tol: Optional[float] = Field(None, gt=0, le=1e-3)
    t_end: float = Field(50.0, gt=0)
    method: Literal["dopri5", "auto", "radau"] = "auto"
    closure: Closure = Closure.TRANSPORTED
    snapshot_count: Optional[int] = Field(None, ge=2)
    audit: bool = False
    velocity_efolds: Optional[float] = Field(None, ge=1.0)


class EulerParams(_Params):
    data: DataConfig = Field(
        default_factory=lambda: DataConfig(
            kind=InitialDataKind.DRIFTING_SINE, d=0.5, slope=1.0, drift=0.0
        )
    )
    damping: DampingConfig = Field(default_factory=DampingConfig)
    N: int = Field(256, ge=16)
    tol: Optional[float] = Field(None, gt=0, le=1e-3)
    t_end: float = Field(10.0, gt=0)
    method: Literal["dopri5", "auto", "radau"] = "auto"
    snapshot_count: Optional[int] = Field(None, ge=2)


class ConditionParams(_Params):
    laws: list[DampingConfig] = Field(
        default_factory=lambda: [
            DampingConfig(gamma=g, epsilon=1.0) for g in (0.0, 0.25, 0.5, 0.75, 1.0, 2.0)
        ],
        min_length=1,
    )
    eta0: float = Field(1.0, gt=0)


class SweepParams(_Params):
    gammas: list[float] = Field(
        default_factory=lambda: [0.25, 0.5, 0.75, 1.0, 1.5, 2.0]
    )
    epsilons: list[float] = Field(default_factory=lambda: [0.5])
    ds: list[float] = Field(default_factory=lambda: [0.9])
    data: DataConfig = Field(default_factory=DataConfig)
    nu0: float = Field(1.0, gt=0)
    N: int = Field(256, ge=16)
    refine_N: Optional[int] = Field(None, ge=16)
    tol: Optional[float] = Field(None, gt=0, le=1e-3)
    t_end: float = Field(200.0, gt=0)
    method: Literal["dopri5", "auto", "radau"] = "auto"
    workers: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_ranges(self) -> SweepParams:
        if any(e < 0.0 for e in self.epsilons):
            raise ValueError("epsilons must be nonnegative")
        if any(not abs(d) < 1.0 for d in self.ds):
            raise ValueError("every d must satisfy |d| < 1")
        return self


PARAMETER_MODELS: dict[ScenarioKind, type[_Params]] = {
    ScenarioKind.AFFINE: AffineParams,
    ScenarioKind.PHASE: PhaseParams,
    ScenarioKind.FIGURE: FigureParams,
    ScenarioKind.CORRECTOR: CorrectorParams,
    ScenarioKind.PERSISTENCE: PersistenceParams,
    ScenarioKind.SIGMA0: Sigma0Params,
    ScenarioKind.FIELD: FieldParams,
    ScenarioKind.EULER_ANALOG: EulerParams,
    ScenarioKind.CONDITION_CHECK: ConditionParams,
    ScenarioKind.GAMMA_SWEEP: SweepParams,
}


def _field_messages(exc: ValidationError, prefix: str = "") -> list[str]:
    messages = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"])
        where = f"{prefix}{loc}" if loc else prefix.rstrip(".") or "<root>"
        messages.append(f"{where}: {err['msg']}")
    return messages


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict):
            base_value = merged.get(key)
            nested = _merge(base_value if isinstance(base_value, dict) else {}, value)
            if nested or key in merged:
                merged[key] = nested
        else:
            merged[key] = value
    return merged


class Scenario(BaseModel):
    """One experiment: a kind plus the parameters of the module it drives."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1, description="Scenario name; also the output subdirectory")
    kind: ScenarioKind
    description: str = ""
    parameters: dict[str, Any] = Field(default_factory=dict)
    outputs: Optional[str] = Field(None, description="Output directory override")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Scenario:
        """Validates the manifest and its kind-specific parameters.

        Raises ManifestError listing every offending field.
        """
        try:
            scenario = cls.model_validate(data)
        except ValidationError as exc:
            errors = _field_messages(exc)
            raise ManifestError(f"invalid scenario manifest: {'; '.join(errors)}", errors) from exc
        scenario.params()
        return scenario

    @classmethod
    def from_file(cls, path: str | Path) -> Scenario:
        """Load and validate a scenario from a YAML or JSON file."""
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"Scenario file not found: {file_path}")
        if file_path.suffix == ".json":
            data = json.loads(file_path.read_text())
        elif file_path.suffix in (".yaml", ".yml"):
            data = yaml.safe_load(file_path.read_text())
        else:
            raise ValueError(f"Scenario must be a YAML or JSON file, got: {file_path.suffix}")
        if not isinstance(data, dict):
            raise ManifestError(f"{file_path}: top level must be a mapping")
        return cls.from_dict(data)

    def params(self) -> Any:
        """Typed parameter model for this kind."""
        model = PARAMETER_MODELS[self.kind]
        try:
            return model.model_validate(self.parameters)
        except ValidationError as exc:
            errors = _field_messages(exc, "parameters.")
            raise ManifestError(
                f"invalid parameters for '{self.name}' ({self.kind.value}): {'; '.join(errors)}",
                errors,
            ) from exc

    def with_overrides(self, **parameters: Any) -> Scenario:
        """Copy with CLI values merged over the manifest; None means "not given"."""
        merged = _merge(self.parameters, parameters)
        return Scenario.from_dict({**self.manifest(), "parameters": merged})

    def manifest(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)

    def summary(self) -> str:
        parts = [f"Scenario: {self.name}", f"Kind: {self.kind.value}"]
        if self.description:
            parts.append(self.description)
        if self.parameters:
            parts.append(f"Parameters: {self.parameters}")
        return " | ".join(parts)
