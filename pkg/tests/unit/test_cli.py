"""Tests for CLI commands."""

from __future__ import annotations

import json
from pathlib import Path

from typer.testing import CliRunner

from wavebreak.cli import app

runner = CliRunner()


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert "wavebreak v" in result.output


def test_help_lists_commands():
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    for command in ("affine-run", "field-run", "sweep", "check-condition", "figures"):
        assert command in result.output


def test_scenarios_list():
    result = runner.invoke(app, ["scenarios"])
    assert result.exit_code == 0
    assert "fig1" in result.output
    assert "gamma-sweep" in result.output


def test_scenarios_inspect():
    result = runner.invoke(app, ["scenarios", "persistence-bound"])
    assert result.exit_code == 0
    assert "persistence" in result.output


def test_scenarios_inspect_missing():
    result = runner.invoke(app, ["scenarios", "nonexistent_scenario_xyz"])
    assert result.exit_code == 1


def test_affine_run_writes_outputs(tmp_path: Path):
    result = runner.invoke(
        app,
        ["affine-run", "--a0", "0", "--b0", "0.41421356237309515", "--tend", "5",
         "-o", str(tmp_path)],
    )
    assert result.exit_code == 0, result.output
    out = tmp_path / "affine-run"
    assert (out / "trace.csv").exists()
    assert (out / "plot_affine.py").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verdict"] == "GloballySmoothUpTo(5)"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["parameters"]["t_end"] == 5.0


def test_invalid_flag_value_exits_with_error(tmp_path: Path):
    result = runner.invoke(
        app, ["affine-run", "--a0", "0", "--b0", "1.5", "-o", str(tmp_path)]
    )
    assert result.exit_code == 1
    assert "b0" in result.output
    assert not (tmp_path / "affine-run").exists()


def test_missing_manifest(tmp_path: Path):
    result = runner.invoke(
        app, ["affine-run", "-m", "/nonexistent/affine.yaml", "-o", str(tmp_path)]
    )
    assert result.exit_code == 1


def test_manifest_kind_mismatch(tmp_path: Path, scenario_file: Path):
    result = runner.invoke(app, ["sigma0", "-m", str(scenario_file), "-o", str(tmp_path)])
    assert result.exit_code == 1
    assert "does not match" in result.output


def test_manifest_flags_override(tmp_path: Path, scenario_file: Path):
    result = runner.invoke(
        app, ["affine-run", "-m", str(scenario_file), "--tend", "2", "-o", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "from-file" / "summary.json").read_text())
    assert summary["verdict"] == "GloballySmoothUpTo(2)"


def test_check_condition(tmp_path: Path):
    result = runner.invoke(
        app, ["check-condition", "--gamma-list", "0.5,2", "-o", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "condition-check" / "conditions.csv").exists()
    table = (tmp_path / "condition-check" / "conditions.csv").read_text()
    assert "suppresses for all data" in table


def test_empty_sweep(tmp_path: Path):
    result = runner.invoke(app, ["sweep", "--gamma-list", "", "-o", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "gamma-sweep" / "sweep.csv").read_text().splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("gamma,epsilon,d")


def test_unknown_figure():
    result = runner.invoke(app, ["figures", "--which", "fig9"])
    assert result.exit_code == 1


def test_run_builtin_missing(tmp_path: Path):
    result = runner.invoke(app, ["run", "nonexistent_scenario_xyz", "-o", str(tmp_path)])
    assert result.exit_code == 1
    assert "not found" in result.output
