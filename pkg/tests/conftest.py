"""Shared test fixtures."""

from __future__ import annotations

import math
from pathlib import Path

import pytest

from wavebreak.config import WavebreakConfig
from wavebreak.core.damping import DampingSpec
from wavebreak.core.scenario import Scenario
from wavebreak.solvers.affine import AffineState

# Upper-branch start used by the phase-portrait reproductions: C = 16.
HYPERBOLIC_START = (2.0, 0.5)
# Ellipse with C = -1/2.
ELLIPTIC_START = (0.0, math.sqrt(2.0) - 1.0)


@pytest.fixture
def config(tmp_path: Path) -> WavebreakConfig:
    return WavebreakConfig(output_dir=str(tmp_path / "output"), snapshot_count=5)


@pytest.fixture
def undamped() -> DampingSpec:
    return DampingSpec.undamped()


@pytest.fixture
def quadratic() -> DampingSpec:
    """f = n**2 at unit amplitude."""
    return DampingSpec.power_law(2.0, epsilon=1.0)


@pytest.fixture
def sqrt_law() -> DampingSpec:
    return DampingSpec.power_law(0.5, epsilon=0.5)


@pytest.fixture
def hyperbolic_start() -> AffineState:
    return AffineState(*HYPERBOLIC_START)


@pytest.fixture
def elliptic_start() -> AffineState:
    return AffineState(*ELLIPTIC_START)


@pytest.fixture
def affine_scenario() -> Scenario:
    return Scenario.from_dict(
        {
            "name": "short-affine",
            "kind": "affine",
            "description": "Short undamped ellipse",
            "parameters": {"a0": ELLIPTIC_START[0], "b0": ELLIPTIC_START[1], "t_end": 5.0},
        }
    )


@pytest.fixture
def scenario_file(tmp_path: Path) -> Path:
    path = tmp_path / "affine.yaml"
    path.write_text(
        "name: from-file\n"
        "kind: affine\n"
        "parameters:\n"
        "  a0: 0.0\n"
        "  b0: 0.41421356237309515\n"
        "  t_end: 5.0\n"
        "  damping:\n"
        "    gamma: 2.0\n"
        "    epsilon: 0.0\n"
    )
    return path
