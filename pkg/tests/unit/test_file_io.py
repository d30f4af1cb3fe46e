"""Tests for file I/O utilities."""

from __future__ import annotations

from pathlib import Path

from wavebreak.utils.file_io import ensure_dir, output_path, scenario_dir, slugify


def test_ensure_dir(tmp_path: Path):
    new_dir = tmp_path / "a" / "b" / "c"
    result = ensure_dir(new_dir)
    assert result.exists()
    assert result.is_dir()


def test_slugify():
    assert slugify("Gamma Sweep (d=0.9)") == "gamma-sweep-d-0.9"
    assert slugify("  ") == "run"


def test_scenario_dir(tmp_path: Path):
    sdir = scenario_dir(tmp_path, "fig1")
    assert sdir.exists()
    assert sdir.name == "fig1"


def test_output_path(tmp_path: Path):
    path = output_path(tmp_path, "phase curve", ".csv")
    assert path.name == "phase-curve.csv"
    assert path.parent == tmp_path
