"""Tests for CSV schemas, the output writer and plot scripts."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from wavebreak.export.plot_scripts import PLOT_NAMES, render_script
from wavebreak.export.schemas import SCHEMAS, get_schema, list_schemas
from wavebreak.export.writer import OutputWriter, ResultSet, canonical_json, manifest_digest

MANIFEST = {"name": "demo", "kind": "affine", "parameters": {"a0": 0.0, "b0": 0.5}}


@pytest.fixture
def result() -> ResultSet:
    results = ResultSet(scenario="demo", kind="affine", summary={"verdict": "GloballySmooth"})
    results.add("curve", "phase_curve", {"t": [0.0, 0.1], "b": [0.5, 0.4], "a": [1.0, 2.0 / 3.0]})
    results.plots.append("phase")
    return results


def test_get_schema():
    schema = get_schema("phase_curve")
    assert schema.columns == ("t", "b", "a")


def test_get_schema_missing():
    with pytest.raises(KeyError, match="not found"):
        get_schema("nonexistent")


def test_list_schemas_covers_all():
    names = {row["name"] for row in list_schemas()}
    assert names == set(SCHEMAS)


def test_add_reorders_and_checks_columns(result: ResultSet):
    frame = pd.DataFrame({"extra": [1], "a": [0.0], "b": [0.1], "t": [0.0]})
    result.add("reordered", "phase_curve", frame)
    assert list(result.table("reordered").columns) == ["t", "b", "a"]
    with pytest.raises(ValueError, match="lacks columns"):
        result.add("broken", "phase_curve", {"t": [0.0]})


def test_missing_table(result: ResultSet):
    with pytest.raises(KeyError, match="Available"):
        result.table("nope")


def test_digest_ignores_key_order():
    shuffled = {"parameters": {"b0": 0.5, "a0": 0.0}, "kind": "affine", "name": "demo"}
    assert manifest_digest(shuffled) == manifest_digest(MANIFEST)
    assert len(manifest_digest(MANIFEST)) == 64


def test_canonical_json_handles_numpy_and_infinity():
    text = canonical_json({"x": np.float64(1.5), "t": math.inf, "v": np.arange(2)})
    assert json.loads(text) == {"t": "inf", "v": [0, 1], "x": 1.5}


def test_writer_layout(tmp_path: Path, result: ResultSet):
    writer = OutputWriter(tmp_path / "demo", MANIFEST)
    files = writer.write(result)
    names = sorted(p.name for p in files)
    assert names == ["curve.csv", "manifest.json", "plot_phase.py", "summary.json"]
    lines = (tmp_path / "demo" / "curve.csv").read_text().splitlines()
    assert lines[0] == f"# manifest-sha256: {writer.digest}"
    assert lines[1] == "t,b,a"
    assert lines[3] == "0.10000000000000001,0.40000000000000002,0.66666666666666663"
    summary = json.loads((tmp_path / "demo" / "summary.json").read_text())
    assert summary["scenario"] == "demo"
    assert summary["verdict"] == "GloballySmooth"


def test_writer_is_deterministic(tmp_path: Path, result: ResultSet):
    first = OutputWriter(tmp_path / "one", MANIFEST).write(result)
    second = OutputWriter(tmp_path / "two", MANIFEST).write(result)
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


def test_written_csv_reads_back(tmp_path: Path, result: ResultSet):
    OutputWriter(tmp_path, MANIFEST).write(result)
    frame = pd.read_csv(tmp_path / "curve.csv", comment="#")
    pd.testing.assert_frame_equal(frame, result.table("curve"))


@pytest.mark.parametrize("name", PLOT_NAMES)
def test_plot_scripts_compile(name: str):
    script = render_script(name)
    compile(script, f"plot_{name}.py", "exec")
    assert f"plot_{name}.py" in script


def test_unknown_plot():
    with pytest.raises(KeyError, match="not found"):
        render_script("nonexistent")
