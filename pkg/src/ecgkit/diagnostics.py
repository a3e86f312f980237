"""Threshold classifiers for Long QT / first-degree A-V block plus ROC metrics.

Classification is positive at or above the threshold. PR thresholds differ
by acquisition source (wearable 150 ms, machine 200 ms); synthetic sources
must state a threshold explicitly. Undefined rates (zero denominators) are
returned as None, never 0 or NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, Empty, LengthMismatch, OneClassOnly, UnknownSource
from .intervals import IntervalReport
from .records import SourceTag


class Condition(Enum):
    LQT = "LQT"
    AVBI = "AVBI"


DEFAULT_LQT_THRESHOLD_MS = 450.0
DEFAULT_AVBI_THRESHOLDS_MS: Mapping[SourceTag, float] = {
    SourceTag.WEARABLE: 150.0,
    SourceTag.MACHINE: 200.0,
}


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        counts = (self.tp, self.fp, self.tn, self.fn)
        if any(c < 0 for c in counts):
            raise DataError(f"negative confusion count: {counts}")
        if sum(counts) < 1:
            raise Empty("confusion matrix has no observations")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]  # (fpr, tpr), (0,0) .. (1,1)
    auc: float


@dataclass(frozen=True)
class DiagnosticReport:
    condition: Condition
    threshold_ms: float
    confusion: ConfusionMatrix
    accuracy: float | None
    sensitivity: float | None
    specificity: float | None
    roc_points: tuple[tuple[float, float], ...]
    auc: float
    skipped: int = 0

    def __post_init__(self):
        points = self.roc_points
        if points[0] != (0.0, 0.0) or points[-1] != (1.0, 1.0):
            raise DataError(f"ROC must run (0,0)..(1,1), got {points[0]}..{points[-1]}")
        for (x0, y0), (x1, y1) in zip(points, points[1:]):
            if x1 < x0 or y1 < y0:
                raise DataError("ROC points must be nondecreasing in both coordinates")
        if not 0.0 <= self.auc <= 1.0:
            raise DataError(f"auc out of [0,1]: {self.auc}")


def confusion(predicted: Sequence[bool], truth: Sequence[bool]) -> ConfusionMatrix:
    """Standard 2x2 cross-tabulation (positive = condition present)."""
    if len(predicted) != len(truth):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(truth)} truths")
    if len(predicted) == 0:
        raise Empty("need at least one prediction")
    p = np.asarray(predicted, dtype=bool)
    t = np.asarray(truth, dtype=bool)
    return ConfusionMatrix(
        tp=int(np.sum(p & t)),
        fp=int(np.sum(p & ~t)),
        tn=int(np.sum(~p & ~t)),
        fn=int(np.sum(~p & t)),
    )


def accuracy(c: ConfusionMatrix) -> float | None:
    """(TP + TN) / (TP + FP + TN + FN); None if the total is zero."""
    return (c.tp + c.tn) / c.total if c.total else None


def sensitivity(c: ConfusionMatrix) -> float | None:
    """TP / (TP + FN); None when no positives exist."""
    return c.tp / (c.tp + c.fn) if (c.tp + c.fn) else None


def specificity(c: ConfusionMatrix) -> float | None:
    """TN / (FP + TN); None when no negatives exist."""
    return c.tn / (c.fp + c.tn) if (c.fp + c.tn) else None


def roc_auc(scores: Sequence[float], truth: Sequence[bool]) -> RocCurve:
    """ROC from sweeping every distinct score as a ">= threshold" rule.

    Tied scores are grouped so the curve is well defined; the trapezoidal
    area then equals the Mann-Whitney statistic
    P(score+ > score-) + 0.5 P(score+ = score-).
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truth, dtype=bool)
    if s.size != t.size:
        raise LengthMismatch(f"{s.size} scores vs {t.size} truths")
    n_pos = int(t.sum())
    n_neg = int(t.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly(f"need both classes, got {n_pos} positive / {n_neg} negative")

    order = np.argsort(-s, kind="stable")
    s_sorted, t_sorted = s[order], t[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < s_sorted.size:
        j = i
        while j < s_sorted.size and s_sorted[j] == s_sorted[i]:
            j += 1
        tp += int(t_sorted[i:j].sum())
        fp += (j - i) - int(t_sorted[i:j].sum())
        points.append((fp / n_neg, tp / n_pos))
        i = j
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(points=tuple(points), auc=float(area))


def classify_lqt(report: IntervalReport, threshold_ms: float = DEFAULT_LQT_THRESHOLD_MS) -> bool | None:
    """True iff record-level QTc >= threshold; None when QTc is absent."""
    value = report.record_level.qtc_ms
    return None if value is None else value >= threshold_ms


def classify_avbi(
    report: IntervalReport,
    source_tag: SourceTag,
    thresholds: Mapping[SourceTag, float] = DEFAULT_AVBI_THRESHOLDS_MS,
) -> bool | None:
    """True iff record-level PR >= the threshold configured for the source."""
    if source_tag not in thresholds:
        raise UnknownSource(
            f"no PR threshold configured for source {source_tag.value!r}; "
            "synthetic sources require an explicit override"
        )
    value = report.record_level.pr_ms
    return None if value is None else value >= thresholds[source_tag]


def evaluate_detector(
    scores: Sequence[float],
    truth: Sequence[bool],
    condition: Condition,
    threshold_ms: float | None = None,
    predicted: Sequence[bool] | None = None,
    skipped: int = 0,
) -> DiagnosticReport:
    """Confusion at the operating threshold plus ROC/AUC over the raw scores.

    ``predicted`` may override the thresholding (e.g. per-source PR cutoffs);
    the recorded threshold_ms is then informational.
    """
    if threshold_ms is None:
        if condition is not Condition.LQT:
            raise UnknownSource("AVBI evaluation requires an explicit threshold_ms")
        threshold_ms = DEFAULT_LQT_THRESHOLD_MS
    s = np.asarray(scores, dtype=np.float64)
    if predicted is None:
        predicted = s >= threshold_ms
    matrix = confusion(list(predicted), list(truth))
    curve = roc_auc(s, truth)
    return DiagnosticReport(
        condition=condition,
        threshold_ms=float(threshold_ms),
        confusion=matrix,
        accuracy=accuracy(matrix),
        sensitivity=sensitivity(matrix),
        specificity=specificity(matrix),
        roc_points=curve.points,
        auc=curve.auc,
        skipped=skipped,
    )
