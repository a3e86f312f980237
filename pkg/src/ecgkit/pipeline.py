"""End-to-end composition: preprocess -> quality gate -> delineate -> intervals.

Quality is scored after baseline removal but before bandpassing; band-limiting
first would make the in-band/total spectral component vacuous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .delineator import DelineatorConfig, delineate, detect_r_peaks, map_fiducials, resample_internal
from .diagnostics import DEFAULT_AVBI_THRESHOLDS_MS, DEFAULT_LQT_THRESHOLD_MS
from .errors import TooShort
from .intervals import IntervalReport, beat_intervals, record_intervals
from .preprocess import PreprocessConfig, bandpass, remove_baseline, signal_quality
from .records import EcgRecord, FiducialSet, SourceTag


@dataclass(frozen=True)
class PipelineConfig:
    preprocess: PreprocessConfig = PreprocessConfig()
    delineator: DelineatorConfig = DelineatorConfig()
    lqt_threshold_ms: float = DEFAULT_LQT_THRESHOLD_MS
    avbi_thresholds_ms: Mapping[SourceTag, float] = field(
        default_factory=lambda: dict(DEFAULT_AVBI_THRESHOLDS_MS)
    )


@dataclass(frozen=True)
class AnalysisResult:
    record_id: str
    quality: float
    report: IntervalReport | None  # None when the record was gated out
    fiducials: FiducialSet | None  # original-rate indices
    source_tag: SourceTag

    @property
    def excluded(self) -> bool:
        return self.report is None


def quality_after_baseline(record: EcgRecord, cfg: PipelineConfig = PipelineConfig()) -> float:
    """Quality score of the baseline-removed record; 0 when unscoreable."""
    try:
        cleaned = remove_baseline(record, cfg.preprocess)
        return signal_quality(cleaned).value
    except TooShort:
        return 0.0


def analyze_record(record: EcgRecord, cfg: PipelineConfig = PipelineConfig()) -> AnalysisResult:
    """Run the full measurement pipeline on one record."""
    quality = quality_after_baseline(record, cfg)
    if quality < cfg.preprocess.quality_threshold:
        return AnalysisResult(
            record_id=record.record_id,
            quality=quality,
            report=None,
            fiducials=None,
            source_tag=record.source_tag,
        )
    cleaned = bandpass(remove_baseline(record, cfg.preprocess), cfg.preprocess)
    internal = resample_internal(cleaned, cfg.delineator)
    r_peaks = detect_r_peaks(internal, cfg.delineator)
    if r_peaks:
        fiducials = delineate(internal, r_peaks, cfg.delineator)
        fiducials = map_fiducials(fiducials, record.sampling_rate_hz, record.n_samples)
    else:
        fiducials = FiducialSet(beats=(), n_samples=record.n_samples,
                                sampling_rate_hz=record.sampling_rate_hz)
    per_beat = beat_intervals(fiducials, record.sampling_rate_hz)
    report = record_intervals(per_beat, quality, record_id=record.record_id)
    return AnalysisResult(
        record_id=record.record_id,
        quality=quality,
        report=report,
        fiducials=fiducials,
        source_tag=record.source_tag,
    )
