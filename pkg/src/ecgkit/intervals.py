"""Clinical interval computation from fiducials: PR, QRS, QT, RR, QTc.

QT runs from QRS onset to T offset; QTc uses the Bazett correction
(QT / sqrt(RR in seconds)) with the preceding RR of the same beat.
Record-level values are medians over beats, requiring at least three
contributing beats per parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NonPositiveInput
from .preprocess import QualityScore
from .records import MAX_INTERVAL_MS, FiducialSet

MIN_BEATS_FOR_RECORD_LEVEL = 3


@dataclass(frozen=True)
class BeatIntervals:
    """Per-beat intervals in milliseconds; absent measurements stay None."""

    pr_ms: float | None = None
    qrs_ms: float | None = None
    qt_ms: float | None = None
    rr_ms: float | None = None
    qtc_ms: float | None = None

    def __post_init__(self):
        for name in ("pr_ms", "qrs_ms", "qt_ms", "rr_ms", "qtc_ms"):
            value = getattr(self, name)
            if value is not None and not 0 < value < MAX_INTERVAL_MS:
                raise DataError(f"{name}={value!r} outside (0, {MAX_INTERVAL_MS}) ms")
        if self.qrs_ms is not None and self.qt_ms is not None and self.qrs_ms >= self.qt_ms:
            raise DataError(f"qrs_ms {self.qrs_ms} must be shorter than qt_ms {self.qt_ms}")
        if self.qtc_ms is not None and (self.qt_ms is None or self.rr_ms is None):
            raise DataError("qtc_ms requires both qt_ms and rr_ms")


@dataclass(frozen=True)
class RecordIntervals:
    pr_ms: float | None = None
    qrs_ms: float | None = None
    qt_ms: float | None = None
    qtc_ms: float | None = None


@dataclass(frozen=True)
class IntervalReport:
    """Per-beat and per-record intervals plus the record's quality score."""

    per_beat: tuple[BeatIntervals, ...]
    record_level: RecordIntervals
    quality_score: float
    n_beats_used: int
    record_id: str = ""


def qtc(qt_ms: float, rr_ms: float) -> float:
    """Bazett-corrected QT: qt_ms / sqrt(rr_ms / 1000)."""
    if qt_ms <= 0 or rr_ms <= 0 or not (math.isfinite(qt_ms) and math.isfinite(rr_ms)):
        raise NonPositiveInput(f"qt_ms={qt_ms!r}, rr_ms={rr_ms!r}")
    return qt_ms / math.sqrt(rr_ms / 1000.0)


def _bounded(value_ms: float | None) -> float | None:
    if value_ms is None or not 0 < value_ms < MAX_INTERVAL_MS:
        return None
    return value_ms


def beat_intervals(fiducials: FiducialSet, fs: float) -> list[BeatIntervals]:
    """Convert fiducial indices into per-beat intervals at sampling rate fs."""
    scale = 1000.0 / fs

    def diff(a: int | None, b: int | None) -> float | None:
        if a is None or b is None:
            return None
        return _bounded((b - a) * scale)

    out = []
    prev_r = None
    for beat in fiducials.beats:
        pr = diff(beat.p_onset, beat.qrs_onset)
        qrs = diff(beat.qrs_onset, beat.qrs_offset)
        qt = diff(beat.qrs_onset, beat.t_offset)
        rr = diff(prev_r, beat.r_peak)
        corrected = qtc(qt, rr) if qt is not None and rr is not None else None
        out.append(BeatIntervals(pr_ms=pr, qrs_ms=qrs, qt_ms=qt, rr_ms=rr, qtc_ms=_bounded(corrected)))
        prev_r = beat.r_peak
    return out


def record_intervals(per_beat, quality, record_id: str = "") -> IntervalReport:
    """Aggregate per-beat intervals to record level (median, >= 3 beat floor)."""

    def aggregate(name: str) -> float | None:
        values = [getattr(b, name) for b in per_beat if getattr(b, name) is not None]
        if len(values) < MIN_BEATS_FOR_RECORD_LEVEL:
            return None
        return float(np.median(values))

    qt_count = sum(1 for b in per_beat if b.qt_ms is not None)
    score = quality.value if isinstance(quality, QualityScore) else float(quality)
    return IntervalReport(
        per_beat=tuple(per_beat),
        record_level=RecordIntervals(
            pr_ms=aggregate("pr_ms"),
            qrs_ms=aggregate("qrs_ms"),
            qt_ms=aggregate("qt_ms"),
            qtc_ms=aggregate("qtc_ms"),
        ),
        quality_score=score,
        n_beats_used=qt_count,
        record_id=record_id,
    )
