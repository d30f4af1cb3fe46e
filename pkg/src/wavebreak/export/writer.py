"""Writes experiment results: CSV tables, manifest echo, summary and plot scripts."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from wavebreak.export.plot_scripts import render_script
from wavebreak.export.schemas import get_schema
from wavebreak.utils.file_io import ensure_dir, output_path
from wavebreak.utils.logging import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"


@dataclass
class Table:
    stem: str
    schema: str
    frame: pd.DataFrame


@dataclass
class ResultSet:
    """Everything one scenario produces, held in memory until written."""

    scenario: str
    kind: str
    tables: list[Table] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    plots: list[str] = field(default_factory=list)

    def add(self, stem: str, schema: str, data: pd.DataFrame | dict[str, Any]) -> None:
        columns = get_schema(schema).columns
        frame = data if isinstance(data, pd.DataFrame) else pd.DataFrame(data)
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise ValueError(f"table '{stem}' lacks columns {missing} of schema '{schema}'")
        self.tables.append(Table(stem, schema, frame.loc[:, list(columns)]))

    def table(self, stem: str) -> pd.DataFrame:
        for t in self.tables:
            if t.stem == stem:
                return t.frame
        available = [t.stem for t in self.tables]
        raise KeyError(f"Table '{stem}' not found. Available: {available}")


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _finite(value: Any) -> Any:
    """Replaces inf/nan by strings so the JSON stays strict."""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def canonical_json(payload: Any, indent: int | None = None) -> str:
    text = json.dumps(payload, sort_keys=True, default=_to_builtin, indent=indent)
    return json.dumps(_finite(json.loads(text)), sort_keys=True, indent=indent)


def manifest_digest(manifest: dict[str, Any]) -> str:
    return hashlib.sha256(canonical_json(manifest).encode("utf-8")).hexdigest()


class OutputWriter:
    """Writes a ResultSet into one scenario directory.

    Every CSV starts with `# manifest-sha256: <hex>` followed by the header
    row; floats use 17 significant digits so reruns are byte-identical.
    """

    def __init__(self, directory: str | Path, manifest: dict[str, Any]) -> None:
        self.directory = Path(directory)
        self.manifest = manifest
        self.digest = manifest_digest(manifest)

    def write_table(self, table: Table) -> Path:
        path = output_path(self.directory, table.stem, "csv")
        try:
            with path.open("w", encoding="utf-8", newline="") as fh:
                fh.write(f"# manifest-sha256: {self.digest}\n")
                table.frame.to_csv(
                    fh, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n"
                )
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        return path

    def _write_text(self, name: str, text: str) -> Path:
        path = self.directory / name
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        return path

    def write(self, result: ResultSet) -> list[Path]:
        ensure_dir(self.directory)
        manifest = canonical_json(self.manifest, indent=2) + "\n"
        written = [self._write_text("manifest.json", manifest)]
        written.extend(self.write_table(t) for t in result.tables)
        summary = {"scenario": result.scenario, "kind": result.kind, **result.summary}
        written.append(self._write_text("summary.json", canonical_json(summary, indent=2) + "\n"))
        for name in result.plots:
            written.append(self._write_text(f"plot_{name}.py", render_script(name)))
        logger.info(
            "outputs_written",
            directory=str(self.directory),
            files=len(written),
            digest=self.digest[:12],
        )
        return written
