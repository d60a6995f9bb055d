"""Pixel F1 and cohort risk-agreement rates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .scoring import RiskCategory
from .volume import check_same_shape


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def confusion(pred, gt) -> ConfusionCounts:
    p = np.asarray(getattr(pred, "labels", pred)).astype(bool)
    g = np.asarray(getattr(gt, "labels", gt)).astype(bool)
    check_same_shape(p, g)
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    return ConfusionCounts(tp, fp, fn, p.size - tp - fp - fn)


def f1_from_counts(c: ConfusionCounts) -> tuple[float, float, float]:
    """(precision, recall, F1); every 0/0 is taken as 0."""
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    return precision, recall, _ratio(2 * precision * recall, precision + recall)


def f1(pred, gt) -> tuple[float, float, float]:
    return f1_from_counts(confusion(pred, gt))


def cac_rate(pairs: Iterable[tuple[RiskCategory, RiskCategory]]) -> float:
    """Fraction of (predicted, true) risk pairs that agree."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cac_rate needs at least one patient")
    return sum(pred == true for pred, true in pairs) / len(pairs)


@dataclass(frozen=True)
class PatientOutcome:
    patient_id: str
    true_risk: RiskCategory
    pred_risk_raw: RiskCategory
    pred_risk_filtered: RiskCategory
    f1: float = float("nan")


@dataclass(frozen=True)
class CohortResult:
    n_patients: int
    n_correct_raw: int
    n_correct_filtered: int

    def __post_init__(self):
        for n in (self.n_correct_raw, self.n_correct_filtered):
            if not 0 <= n <= self.n_patients:
                raise ValueError("correct counts must lie in [0, n_patients]")

    @property
    def cac_rate(self) -> float:
        return _ratio(self.n_correct_raw, self.n_patients)

    @property
    def cac_filter_rate(self) -> float:
        return _ratio(self.n_correct_filtered, self.n_patients)


def summarize_cohort(outcomes: Sequence[PatientOutcome]) -> CohortResult:
    if not outcomes:
        raise ValueError("empty cohort")
    return CohortResult(
        len(outcomes),
        sum(o.pred_risk_raw == o.true_risk for o in outcomes),
        sum(o.pred_risk_filtered == o.true_risk for o in outcomes),
    )


def format_cohort_report(outcomes: Sequence[PatientOutcome]) -> str:
    """Per-patient lines, then both rates rounded to two decimals."""
    summary = summarize_cohort(outcomes)
    lines = ["id, true_risk, pred_risk_raw, pred_risk_filtered, f1"]
    for o in outcomes:
        lines.append(f"{o.patient_id}, {o.true_risk}, {o.pred_risk_raw}, "
                     f"{o.pred_risk_filtered}, {o.f1:.4f}")
    lines.append(f"patients {summary.n_patients}, cac_no {summary.n_correct_raw}, "
                 f"cac_filter_no {summary.n_correct_filtered}")
    lines.append(f"cac_rate {summary.cac_rate:.2f}, cac_filter_rate {summary.cac_filter_rate:.2f}")
    return "\n".join(lines) + "\n"
