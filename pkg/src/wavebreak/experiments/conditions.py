"""Analytic suppression criteria evaluated for one or several damping laws."""

from __future__ import annotations

import math
from typing import Sequence

from pydantic import BaseModel

from wavebreak.core.damping import (
    DampingSpec,
    TailReport,
    check_parabolic_condition,
    check_suppression_condition,
    check_tail_regularity,
    damping_integral,
    damping_integral_quadrature,
    predicted_behavior,
)
from wavebreak.export.writer import ResultSet


class ConditionReport(BaseModel):
    """Verdicts of the three criteria and the behavior class they imply."""

    law: str
    tail_gamma: float
    epsilon: float
    suppression: bool
    parabolic: bool
    tail: TailReport
    integral: float
    quadrature: float
    predicted: str

    @property
    def consistent(self) -> bool:
        """The divergent criterion implies the milder one."""
        return self.parabolic or not self.suppression


def condition_report(spec: DampingSpec, eta0: float = 1.0) -> ConditionReport:
    """Evaluates the suppression, parabolic and tail-regularity criteria for `spec`.

    Laws without a declared tail exponent raise UnsupportedAnalysisError.
    """
    suppression = check_suppression_condition(spec)
    return ConditionReport(
        law=spec.form.label,
        tail_gamma=float(spec.tail_gamma),  # type: ignore[arg-type]
        epsilon=spec.epsilon,
        suppression=suppression,
        parabolic=check_parabolic_condition(spec),
        tail=check_tail_regularity(spec),
        integral=damping_integral(spec, eta0),
        quadrature=damping_integral_quadrature(spec, eta0),
        predicted=predicted_behavior(spec),
    )


def condition_results(name: str, reports: Sequence[ConditionReport]) -> ResultSet:
    result = ResultSet(scenario=name, kind="condition-check")
    result.add(
        "conditions",
        "conditions",
        {
            "law": [r.law for r in reports],
            "tail_gamma": [r.tail_gamma for r in reports],
            "epsilon": [r.epsilon for r in reports],
            "suppression": [r.suppression for r in reports],
            "parabolic": [r.parabolic for r in reports],
            "tail_limit": [r.tail.limit_estimate for r in reports],
            "tail_passes": [r.tail.passes for r in reports],
            "integral": [r.integral for r in reports],
            "predicted": [r.predicted for r in reports],
        },
    )
    result.summary = {
        "laws": len(reports),
        "suppressing": [r.law for r in reports if r.suppression],
        "divergent_integrals": sum(1 for r in reports if math.isinf(r.integral)),
    }
    return result
