import dataclasses

import numpy as np
import pytest

from ecgkit.pipeline import PipelineConfig, analyze_record, quality_after_baseline
from ecgkit.preprocess import PreprocessConfig
from ecgkit.records import EcgRecord
from ecgkit.synth import SynthParams, WaveShape, generate, noise_record


class TestAnalyzeRecord:
    def test_clean_record_produces_full_report(self):
        record, _ = generate(SynthParams(duration_s=20.0, heart_rate_bpm=70.0, seed=17,
                                         record_id="p"))
        result = analyze_record(record)
        assert not result.excluded
        level = result.report.record_level
        assert abs(level.pr_ms - 160.0) <= 10.0
        assert abs(level.qrs_ms - 90.0) <= 10.0
        assert abs(level.qt_ms - 380.0) <= 10.0
        assert result.fiducials is not None

    @pytest.mark.parametrize("fs", [250.0, 360.0, 1000.0])
    def test_non_internal_rates(self, fs):
        record, _ = generate(SynthParams(duration_s=20.0, heart_rate_bpm=70.0,
                                         sampling_rate_hz=fs, seed=17, record_id="p"))
        result = analyze_record(record)
        assert not result.excluded
        level = result.report.record_level
        # one original-rate sample of slack on top of the 500 Hz budgets
        slack = 1000.0 / fs
        assert abs(level.pr_ms - 160.0) <= 10.0 + slack
        assert abs(level.qrs_ms - 90.0) <= 10.0 + slack
        assert abs(level.qt_ms - 380.0) <= 10.0 + slack
        # fiducials are reported at the record's own rate
        assert result.fiducials.sampling_rate_hz == fs

    def test_noise_record_gated_out(self):
        record = noise_record("n", 12.0, sigma_mv=0.3, seed=2)
        result = analyze_record(record)
        assert result.excluded
        assert result.report is None and result.fiducials is None
        assert result.quality < 0.5

    def test_beatless_record_with_gate_disabled(self):
        record = EcgRecord(record_id="flat", sampling_rate_hz=500.0, samples=np.zeros(5000))
        cfg = PipelineConfig(preprocess=PreprocessConfig(quality_threshold=0.0))
        result = analyze_record(record, cfg)
        assert not result.excluded
        assert result.report.n_beats_used == 0
        assert result.report.record_level.qt_ms is None
        assert result.fiducials.beats == ()

    def test_short_record_quality_zero(self):
        record, _ = generate(SynthParams(duration_s=4.0, heart_rate_bpm=70.0, seed=1,
                                         record_id="short"))
        assert quality_after_baseline(record) == 0.0

    @pytest.mark.parametrize(
        "overrides",
        [
            pytest.param({"t_wave": WaveShape(-0.35, 20.0)}, id="inverted-T"),
            pytest.param({"p_wave": WaveShape(0.08, 11.0)}, id="small-P"),
            pytest.param({"q_wave": WaveShape(-0.25, 5.0)}, id="deep-Q"),
            pytest.param(
                {"r_wave": WaveShape(-1.0, 10.0), "q_wave": WaveShape(0.1, 5.0),
                 "s_wave": WaveShape(0.2, 6.0)},
                id="inverted-lead",
            ),
        ],
    )
    def test_morphology_variants(self, overrides):
        record, _ = generate(SynthParams(duration_s=20.0, heart_rate_bpm=70.0, seed=33,
                                         record_id="m", **overrides))
        result = analyze_record(record)
        assert not result.excluded
        level = result.report.record_level
        assert abs(level.pr_ms - 160.0) <= 10.0
        assert abs(level.qrs_ms - 90.0) <= 10.0
        assert abs(level.qt_ms - 380.0) <= 10.0
