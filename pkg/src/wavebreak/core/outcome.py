"""Verdicts and traces returned by every solver."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np


class VerdictKind(str, Enum):
    SMOOTH = "smooth"
    BLOWUP = "blowup"


@dataclass(frozen=True)
class Verdict:
    """GloballySmoothUpTo(T) or BlowUpAt(t*); `time` holds T or t*."""

    kind: VerdictKind
    time: float

    @classmethod
    def smooth(cls, t_end: float) -> Verdict:
        return cls(VerdictKind.SMOOTH, float(t_end))

    @classmethod
    def blowup(cls, t_star: float) -> Verdict:
        return cls(VerdictKind.BLOWUP, float(t_star))

    @property
    def is_blowup(self) -> bool:
        return self.kind is VerdictKind.BLOWUP

    @property
    def is_smooth(self) -> bool:
        return self.kind is VerdictKind.SMOOTH

    @property
    def t_star(self) -> float | None:
        return self.time if self.is_blowup else None

    def __str__(self) -> str:
        if self.is_blowup:
            return f"BlowUpAt({self.time:.10g})"
        return f"GloballySmoothUpTo({self.time:.10g})"


@dataclass
class Trace:
    """Time series of states. `steps[k]` is the step that produced row k (0 for the first row)."""

    t: np.ndarray
    states: np.ndarray
    steps: np.ndarray
    columns: tuple[str, ...]

    def __len__(self) -> int:
        return int(self.t.size)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.states[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(f"Column '{name}' not found. Available: {', '.join(self.columns)}")

    def truncated(self, t_max: float) -> Trace:
        keep = self.t <= t_max
        return Trace(self.t[keep], self.states[keep], self.steps[keep], self.columns)

    @classmethod
    def empty(cls, columns: tuple[str, ...]) -> Trace:
        return cls(np.zeros(0), np.zeros((0, len(columns))), np.zeros(0), columns)


@dataclass
class SimOutcome:
    """Verdict plus the trace and scalar diagnostics of one run."""

    verdict: Verdict
    trace: Trace
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def summary(self) -> str:
        parts = [str(self.verdict)]
        for key in ("max_abs_a", "min_b", "min_q", "min_n", "steps", "rejected"):
            if key in self.diagnostics:
                value = self.diagnostics[key]
                parts.append(f"{key}={value:.6g}" if isinstance(value, float) else f"{key}={value}")
        return " | ".join(parts)
