"""Output directory layout."""

from __future__ import annotations

import re
from pathlib import Path


def ensure_dir(path: str | Path) -> Path:
    """Ensure a directory exists, creating it if necessary."""
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {p}: {exc}") from exc
    return p


def slugify(name: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9._-]+", "-", name.strip()).strip("-").lower()
    return slug or "run"


def scenario_dir(output_dir: str | Path, name: str) -> Path:
    """Per-scenario directory under the output root."""
    return ensure_dir(Path(output_dir) / slugify(name))


def output_path(directory: str | Path, name: str, ext: str) -> Path:
    """Path for a named output file inside a scenario directory."""
    return Path(directory) / f"{slugify(name)}.{ext.lstrip('.')}"
