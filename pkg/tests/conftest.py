import pytest

from ecgkit.delineator import DelineatorConfig, delineate, detect_r_peaks
from ecgkit.preprocess import bandpass, remove_baseline
from ecgkit.synth import SynthParams, generate


@pytest.fixture(scope="session")
def clean_60bpm():
    """30 s clean synthetic record at 500 Hz / 60 bpm with ground truth."""
    return generate(SynthParams(duration_s=30.0, heart_rate_bpm=60.0, seed=1, record_id="clean-60"))


@pytest.fixture(scope="session")
def delineated_clean(clean_60bpm):
    record, truth = clean_60bpm
    prepared = bandpass(remove_baseline(record))
    cfg = DelineatorConfig()
    peaks = detect_r_peaks(prepared, cfg)
    fiducials = delineate(prepared, peaks, cfg)
    return prepared, peaks, fiducials, truth
