"""Synthetic single-lead ECG with analytically known fiducials and intervals.

Beats are sums of Gaussian bumps (P, Q, R, S, T). Onsets and offsets are
defined at the 3-sigma points of the relevant bump, and bump centers are
solved so the target PR/QRS/QT are realized exactly; ground-truth fiducials
are those analytic points rounded to the nearest sample. Realism is traded
for verifiability; the noise operations restore difficulty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .diagnostics import Condition
from .errors import InfeasibleTargets, InvalidNoiseSpec
from .intervals import BeatIntervals, qtc
from .records import BeatFiducials, EcgRecord, FiducialSet, SourceTag

LEAD_IN_S = 1.2          # quiet margin before the first beat
TAIL_MARGIN_S = 0.3      # quiet margin after the last T offset
R_POSITION_FRACTION = 0.45  # R center location within the QRS complex
_GEOMETRY_MARGIN_MS = 3.0   # keeps rounded fiducials strictly ordered


class NoiseKind(Enum):
    NONE = "none"
    WHITE = "white"
    BASELINE_DRIFT = "baseline_drift"
    MAINS = "mains"


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind = NoiseKind.NONE
    snr_db: float = math.inf
    drift_hz: float = 0.3
    mains_hz: float = 50.0
    amplitude_mv: float = 0.5


@dataclass(frozen=True)
class WaveShape:
    amplitude_mv: float
    width_ms: float  # Gaussian sigma

    def __post_init__(self):
        if not math.isfinite(self.amplitude_mv) or not 0 < self.width_ms:
            raise InfeasibleTargets(f"bad wave shape {self}")


@dataclass(frozen=True)
class SynthParams:
    duration_s: float
    heart_rate_bpm: float
    sampling_rate_hz: float = 500.0
    rr_jitter_pct: float = 2.0
    p_wave: WaveShape = WaveShape(0.15, 11.0)
    q_wave: WaveShape = WaveShape(-0.10, 5.0)
    r_wave: WaveShape = WaveShape(1.00, 10.0)
    s_wave: WaveShape = WaveShape(-0.20, 6.0)
    t_wave: WaveShape = WaveShape(0.35, 20.0)
    target_pr_ms: float = 160.0
    target_qrs_ms: float = 90.0
    target_qt_ms: float = 380.0
    include_p: bool = True
    noise: NoiseSpec = NoiseSpec()
    seed: int = 0
    record_id: str = "synth-0000"

    def __post_init__(self):
        if not 80 <= self.target_pr_ms <= 400:
            raise InfeasibleTargets(f"target_pr_ms {self.target_pr_ms} outside [80, 400]")
        if not 40 <= self.target_qrs_ms <= 200:
            raise InfeasibleTargets(f"target_qrs_ms {self.target_qrs_ms} outside [40, 200]")
        if not 200 <= self.target_qt_ms <= 700:
            raise InfeasibleTargets(f"target_qt_ms {self.target_qt_ms} outside [200, 700]")
        if self.target_qt_ms <= self.target_qrs_ms:
            raise InfeasibleTargets("target_qt_ms must exceed target_qrs_ms")
        # lower bound keeps jittered ground-truth RR under the 2000 ms interval cap
        min_bpm = 30.0 * (1.0 + self.rr_jitter_pct / 100.0)
        if not min_bpm < self.heart_rate_bpm <= 220:
            raise InfeasibleTargets(
                f"heart_rate_bpm {self.heart_rate_bpm} outside ({min_bpm:.1f}, 220] "
                f"at {self.rr_jitter_pct}% jitter"
            )
        if not 0 <= self.rr_jitter_pct < 50:
            raise InfeasibleTargets("rr_jitter_pct outside [0, 50)")
        _beat_geometry(self)  # validates bump ordering


@dataclass(frozen=True)
class GroundTruth:
    fiducials: FiducialSet
    per_beat_intervals: tuple[BeatIntervals, ...]


@dataclass(frozen=True)
class BeatGeometry:
    """Waveform landmarks in milliseconds relative to QRS onset."""

    p_onset: float
    p_center: float
    p_offset: float
    q_center: float
    r_center: float
    s_center: float
    qrs_offset: float
    t_center: float
    t_offset: float


def _beat_geometry(params: SynthParams) -> BeatGeometry:
    margin = max(_GEOMETRY_MARGIN_MS, 2.5 * 1000.0 / params.sampling_rate_hz)
    qrs, qt, pr = params.target_qrs_ms, params.target_qt_ms, params.target_pr_ms
    q_center = 3.0 * params.q_wave.width_ms
    r_center = R_POSITION_FRACTION * qrs
    s_center = qrs - 3.0 * params.s_wave.width_ms
    if not q_center + margin <= r_center <= s_center - margin:
        raise InfeasibleTargets(
            f"QRS bumps do not fit: q@{q_center:.1f} r@{r_center:.1f} s@{s_center:.1f} ms"
        )
    p_onset = -pr
    p_center = p_onset + 3.0 * params.p_wave.width_ms
    p_offset = p_center + 3.0 * params.p_wave.width_ms
    if params.include_p and p_offset > -margin:
        raise InfeasibleTargets(f"P wave (ends {p_offset:.1f} ms) overlaps QRS onset")
    t_center = qt - 3.0 * params.t_wave.width_ms
    t_offset = qt
    if t_center < qrs + margin:
        raise InfeasibleTargets(
            f"T peak at {t_center:.1f} ms would precede QRS offset at {qrs:.1f} ms"
        )
    return BeatGeometry(
        p_onset=p_onset,
        p_center=p_center,
        p_offset=p_offset,
        q_center=q_center,
        r_center=r_center,
        s_center=s_center,
        qrs_offset=qrs,
        t_center=t_center,
        t_offset=t_offset,
    )


def _add_bump(signal: np.ndarray, fs: float, center_s: float, shape: WaveShape) -> None:
    sigma_s = shape.width_ms / 1000.0
    lo = max(0, int(math.floor((center_s - 5 * sigma_s) * fs)))
    hi = min(signal.size, int(math.ceil((center_s + 5 * sigma_s) * fs)) + 1)
    if lo >= hi:
        return
    t = np.arange(lo, hi) / fs
    signal[lo:hi] += shape.amplitude_mv * np.exp(-0.5 * ((t - center_s) / sigma_s) ** 2)


def generate(params: SynthParams) -> tuple[EcgRecord, GroundTruth]:
    """Generate one record plus its analytic ground truth. Deterministic per seed."""
    geometry = _beat_geometry(params)
    fs = params.sampling_rate_hz
    n = int(round(params.duration_s * fs))
    jitter_rng, noise_rng = [np.random.default_rng(s) for s in np.random.SeedSequence(params.seed).spawn(2)]

    left_extent_s = (geometry.r_center - geometry.p_onset) / 1000.0
    right_extent_s = (geometry.t_offset - geometry.r_center) / 1000.0
    rr_nominal_s = 60.0 / params.heart_rate_bpm

    r_times = []
    t = max(LEAD_IN_S, left_extent_s + 0.2)
    while t + right_extent_s + TAIL_MARGIN_S < params.duration_s:
        r_times.append(t)
        jitter = jitter_rng.uniform(-params.rr_jitter_pct, params.rr_jitter_pct) / 100.0
        t += rr_nominal_s * (1.0 + jitter)
    if not r_times:
        raise InfeasibleTargets(
            f"duration {params.duration_s} s leaves no room for a complete beat"
        )

    signal = np.zeros(n, dtype=np.float64)
    beats = []
    truths = []
    prev_r_time = None
    for r_time in r_times:
        onset_s = r_time - geometry.r_center / 1000.0

        def at(offset_ms: float) -> float:
            return onset_s + offset_ms / 1000.0

        def idx(offset_ms: float) -> int:
            return int(round(at(offset_ms) * fs))

        if params.include_p:
            _add_bump(signal, fs, at(geometry.p_center), params.p_wave)
        _add_bump(signal, fs, at(geometry.q_center), params.q_wave)
        _add_bump(signal, fs, at(geometry.r_center), params.r_wave)
        _add_bump(signal, fs, at(geometry.s_center), params.s_wave)
        _add_bump(signal, fs, at(geometry.t_center), params.t_wave)

        beats.append(
            BeatFiducials(
                r_peak=idx(geometry.r_center),
                p_onset=idx(geometry.p_onset) if params.include_p else None,
                p_peak=idx(geometry.p_center) if params.include_p else None,
                p_offset=idx(geometry.p_offset) if params.include_p else None,
                qrs_onset=idx(0.0),
                qrs_offset=idx(geometry.qrs_offset),
                t_peak=idx(geometry.t_center),
                t_offset=idx(geometry.t_offset),
            )
        )
        rr_ms = None if prev_r_time is None else (r_time - prev_r_time) * 1000.0
        truths.append(
            BeatIntervals(
                pr_ms=params.target_pr_ms if params.include_p else None,
                qrs_ms=params.target_qrs_ms,
                qt_ms=params.target_qt_ms,
                rr_ms=rr_ms,
                qtc_ms=qtc(params.target_qt_ms, rr_ms) if rr_ms is not None else None,
            )
        )
        prev_r_time = r_time

    record = EcgRecord(
        record_id=params.record_id,
        sampling_rate_hz=fs,
        samples=signal,
        lead_label="I",
        source_tag=SourceTag.SYNTHETIC,
    )
    if params.noise.kind is not NoiseKind.NONE:
        record = add_noise(record, params.noise, int(noise_rng.integers(0, 2**63 - 1)))
    truth = GroundTruth(
        fiducials=FiducialSet(beats=tuple(beats), n_samples=n, sampling_rate_hz=fs),
        per_beat_intervals=tuple(truths),
    )
    return record, truth


def add_noise(record: EcgRecord, spec: NoiseSpec, seed: int) -> EcgRecord:
    """Add white / baseline-drift / mains noise; never changes length or rate."""
    if spec.kind is NoiseKind.NONE:
        return record
    x = record.samples
    fs = record.sampling_rate_hz
    t = np.arange(x.size) / fs
    if spec.kind is NoiseKind.WHITE:
        if not math.isfinite(spec.snr_db):
            raise InvalidNoiseSpec("white noise requires a finite snr_db")
        power = float(np.mean(x**2))
        if power <= 0:
            raise InvalidNoiseSpec("cannot scale white noise against a zero-power record")
        sigma = math.sqrt(power * 10.0 ** (-spec.snr_db / 10.0))
        rng = np.random.default_rng(seed)
        return record.with_samples(x + rng.normal(0.0, sigma, x.size))
    if spec.kind is NoiseKind.BASELINE_DRIFT:
        if not 0 < spec.drift_hz < fs / 2:
            raise InvalidNoiseSpec(f"drift_hz {spec.drift_hz} outside (0, fs/2)")
        return record.with_samples(x + spec.amplitude_mv * np.sin(2 * np.pi * spec.drift_hz * t))
    if spec.kind is NoiseKind.MAINS:
        if not 0 < spec.mains_hz < fs / 2:
            raise InvalidNoiseSpec(f"mains_hz {spec.mains_hz} outside (0, fs/2)")
        return record.with_samples(x + spec.amplitude_mv * np.sin(2 * np.pi * spec.mains_hz * t))
    raise InvalidNoiseSpec(f"unknown noise kind {spec.kind!r}")


def noise_record(record_id: str, duration_s: float, sigma_mv: float, seed: int,
                 sampling_rate_hz: float = 500.0) -> EcgRecord:
    """Pure Gaussian-noise record (for gating cohorts and negative controls)."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sampling_rate_hz))
    return EcgRecord(
        record_id=record_id,
        sampling_rate_hz=sampling_rate_hz,
        samples=rng.normal(0.0, sigma_mv, n),
        lead_label="I",
        source_tag=SourceTag.SYNTHETIC,
    )


@dataclass(frozen=True)
class CohortSpec:
    """Two planted interval distributions for one condition.

    ``normal_ms`` / ``abnormal_ms`` are uniform ranges of the condition's
    score parameter: PR for AVBI, QTc for LQT. Heart-rate ranges keep the
    abnormal waveforms inside the delineation search windows.
    """

    condition: Condition
    normal_ms: tuple[float, float]
    abnormal_ms: tuple[float, float]
    heart_rate_bpm: tuple[float, float]
    duration_s: float = 12.0
    positive_fraction: float = 0.5
    noise: NoiseSpec = NoiseSpec()


AVBI_COHORT = CohortSpec(
    condition=Condition.AVBI,
    normal_ms=(120.0, 180.0),
    abnormal_ms=(210.0, 320.0),
    heart_rate_bpm=(50.0, 68.0),
)

LQT_COHORT = CohortSpec(
    condition=Condition.LQT,
    normal_ms=(380.0, 430.0),
    abnormal_ms=(470.0, 510.0),
    heart_rate_bpm=(55.0, 65.0),
)


@dataclass(frozen=True)
class CohortRecord:
    record: EcgRecord
    truth: GroundTruth
    condition: Condition
    label: bool


def generate_cohort(n: int, spec: CohortSpec, seed: int) -> list[CohortRecord]:
    """n records with planted class labels; deterministic and order-independent.

    Record i is positive iff i < round(n * positive_fraction); its RNG stream
    derives from (seed, i) so parallel generation cannot reorder draws.
    """
    n_positive = int(round(n * spec.positive_fraction))
    out = []
    for i in range(n):
        label = i < n_positive
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        lo, hi = spec.abnormal_ms if label else spec.normal_ms
        planted = float(rng.uniform(lo, hi))
        hr = float(rng.uniform(*spec.heart_rate_bpm))
        rr_s = 60.0 / hr
        if spec.condition is Condition.AVBI:
            pr = planted
            qt = 410.0 * math.sqrt(rr_s)  # mid-normal QTc scaled to the heart rate
        else:
            pr = 160.0
            qt = planted * math.sqrt(rr_s)
        params = SynthParams(
            duration_s=spec.duration_s,
            heart_rate_bpm=hr,
            target_pr_ms=pr,
            target_qt_ms=qt,
            noise=spec.noise,
            seed=int(rng.integers(0, 2**63 - 1)),
            record_id=f"{spec.condition.value.lower()}-{i:04d}",
        )
        record, truth = generate(params)
        out.append(CohortRecord(record=record, truth=truth, condition=spec.condition, label=label))
    return out
