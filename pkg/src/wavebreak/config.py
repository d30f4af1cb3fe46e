"""Configuration management via Pydantic Settings."""

from __future__ import annotations

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings

from wavebreak.utils.file_io import ensure_dir
from wavebreak.utils.file_io import scenario_dir as _scenario_dir


class WavebreakConfig(BaseSettings):
    """Loads configuration from .env file and environment variables.

    All settings can be overridden via WAVEBREAK_ prefixed env vars; manifest
    values and CLI flags override these in turn.
    """

    # Paths
    output_dir: str = "./output"

    # Parallelism
    workers: int = Field(1, ge=1)

    # Integration
    tol: float = Field(1e-8, gt=0, le=1e-3)
    h_min: float = Field(1e-14, gt=0)
    max_steps: int = Field(2_000_000, ge=1)

    # Blow-up detection
    blowup_threshold: float = Field(1e8, gt=0)
    conic_tol: float = Field(1e-12, ge=0)
    spacing_floor: float = Field(1e-10, gt=0)

    # Field recording
    snapshot_count: int = Field(50, ge=2)

    model_config = {
        "env_file": ".env",
        "env_prefix": "WAVEBREAK_",
        "extra": "ignore",
    }

    def get_output_path(self) -> Path:
        return ensure_dir(Path(self.output_dir).resolve())

    def scenario_dir(self, name: str) -> Path:
        return _scenario_dir(self.get_output_path(), name)
