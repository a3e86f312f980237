"""Wavelet-based waveform delineation: R peaks, then P/QRS/T boundaries.

The transform is the undecimated (a-trous) dyadic wavelet built from the
quadratic-spline smoothing kernel [1,3,3,1]/8 and the derivative kernel
[2,-2]: each band approximates the derivative of a smoothed copy of the
signal, so a waveform extremum appears as a zero crossing bracketed by a
pair of opposite-sign modulus maxima, and wave onsets/offsets appear where
the modulus decays below a fraction of the bracketing maximum.

R detection runs separately on a squared-derivative energy envelope with an
adaptive threshold (a fraction of the running envelope peak) followed by
refinement to the local signal extremum. All thresholds are relative, so
fiducial locations are invariant to amplitude scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d
from scipy.signal import find_peaks

from .errors import ConfigError, EmptyBeats, SignalTooShort
from .preprocess import qrs_band_emphasis
from .records import BeatFiducials, EcgRecord, FiducialSet

SMOOTHING_KERNEL = np.array([1.0, 3.0, 3.0, 1.0]) / 8.0
DERIVATIVE_KERNEL = np.array([2.0, -2.0])

# Modulus-maxima significance gates, all relative so delineation is
# amplitude-invariant. Presence gates compare a search window against the
# record's QRS response at the same scale, which keeps pure-noise windows
# from fabricating waves.
QRS_MM_FRACTION = 0.10
WAVE_MM_FRACTION = 0.25
T_PRESENCE_FRACTION = 0.20
P_PRESENCE_FRACTION = 0.05
_ENVELOPE_WINDOW_S = 2.5


@dataclass(frozen=True)
class DelineatorConfig:
    internal_rate_hz: float = 500.0
    scales: tuple[int, ...] = (1, 2, 3, 4)
    qrs_search_ms: float = 100.0
    p_search_ms: float = 400.0
    t_search_ms: float = 400.0
    modulus_threshold_fraction: float = 0.25
    refractory_ms: float = 200.0

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(self.scales))
        if not self.scales or any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ConfigError(f"scales must be nonempty and strictly increasing: {self.scales}")
        if min(self.scales) < 1:
            raise ConfigError("scale exponents start at 1")
        if _scale_support(max(self.scales)) >= self.internal_rate_hz:
            raise ConfigError(
                f"largest scale 2^{max(self.scales)} has support >= 1 s at "
                f"{self.internal_rate_hz} Hz"
            )
        for name in ("qrs_search_ms", "p_search_ms", "t_search_ms", "refractory_ms"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.modulus_threshold_fraction < 1:
            raise ConfigError("modulus_threshold_fraction must be in (0, 1)")


@dataclass(frozen=True)
class WaveletBands:
    scale_exponents: tuple[int, ...]
    bands: tuple[np.ndarray, ...]

    def band(self, exponent: int) -> np.ndarray:
        return self.bands[self.scale_exponents.index(exponent)]


def _upsample(taps: np.ndarray, factor: int) -> np.ndarray:
    if factor == 1:
        return taps
    out = np.zeros((taps.size - 1) * factor + 1)
    out[::factor] = taps
    return out


def _scale_filter(exponent: int) -> np.ndarray:
    """Equivalent time-domain filter for the band at scale 2**exponent."""
    taps = _upsample(DERIVATIVE_KERNEL, 2 ** (exponent - 1))
    for level in range(exponent - 2, -1, -1):
        taps = np.convolve(taps, _upsample(SMOOTHING_KERNEL, 2**level))
    return taps


def _scale_support(exponent: int) -> int:
    return 2 ** (exponent + 1) - 2


def wavelet_bands(signal, fs: float, cfg: DelineatorConfig = DelineatorConfig()) -> WaveletBands:
    """Same-length coefficient band per configured scale; linear in the input."""
    x = np.asarray(signal, dtype=np.float64)
    support = _scale_support(max(cfg.scales))
    if x.size <= support:  # reflection padding needs size > pad width
        raise SignalTooShort(f"{x.size} samples <= support {support} of scale 2^{max(cfg.scales)}")
    bands = []
    for exponent in cfg.scales:
        taps = _scale_filter(exponent)
        pad = taps.size
        padded = np.pad(x, pad, mode="reflect")
        full = np.convolve(padded, taps)
        delay = 2**exponent - 2  # composite filters center at (len-1)/2, a half-integer
        start = pad + delay
        bands.append(full[start : start + x.size])
    return WaveletBands(scale_exponents=tuple(cfg.scales), bands=tuple(bands))


def _ms_to_samples(ms: float, fs: float) -> int:
    return max(1, int(round(ms * fs / 1000.0)))


def detect_r_peaks(record: EcgRecord, cfg: DelineatorConfig = DelineatorConfig()) -> list[int]:
    """R-peak indices, strictly increasing, gaps >= refractory_ms.

    Works on a squared-derivative energy envelope with an adaptive threshold
    (modulus_threshold_fraction of the running envelope peak), then refines
    each detection to the local signal extremum within +-qrs_search_ms/2.
    """
    record.require_duration(2.0)
    x = record.samples
    fs = record.sampling_rate_hz
    refractory = _ms_to_samples(cfg.refractory_ms, fs)
    half_search = _ms_to_samples(cfg.qrs_search_ms / 2.0, fs)

    emphasized = qrs_band_emphasis(x, fs)
    envelope = np.convolve(
        np.diff(emphasized) ** 2, np.ones(_ms_to_samples(cfg.qrs_search_ms, fs)), mode="same"
    )
    if not envelope.any():
        return []
    running_peak = maximum_filter1d(envelope, size=int(_ENVELOPE_WINDOW_S * fs), mode="nearest")
    candidates, _ = find_peaks(envelope, distance=refractory)
    candidates = candidates[envelope[candidates] >= cfg.modulus_threshold_fraction * running_peak[candidates]]

    refined = []
    for c in candidates:
        lo = max(0, c - half_search)
        hi = min(x.size, c + half_search + 1)
        refined.append(lo + int(np.argmax(np.abs(x[lo:hi]))))
    if not refined:
        return []

    # Collapse refinements that collide inside the refractory window,
    # keeping the larger |x| (earlier index on ties).
    magnitude = np.abs(x)
    order = sorted(set(refined), key=lambda i: (-magnitude[i], i))
    accepted: list[int] = []
    for i in order:
        if all(abs(i - j) >= refractory for j in accepted):
            accepted.append(i)
    return sorted(accepted)


def _local_modulus_maxima(w: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Indices of local maxima of |w| inside [lo, hi]."""
    if hi - lo < 3:
        return np.array([], dtype=int)
    peaks, _ = find_peaks(np.abs(w[lo : hi + 1]))
    return peaks + lo


def _decay_edge(w: np.ndarray, anchor: int, fraction: float, bound: int, step: int) -> int:
    """Walk from a modulus maximum until |w| falls below fraction * |w[anchor]|.

    Stops early at the search bound or when the modulus grows past the anchor
    (the walk has entered a different wave).
    """
    anchor_mag = abs(w[anchor])
    threshold = fraction * anchor_mag
    i = anchor
    while True:
        j = i + step
        if (step < 0 and j < bound) or (step > 0 and j > bound):
            return bound
        mag = abs(w[j])
        if mag < threshold:
            return j
        if mag > anchor_mag:
            return i
        i = j


def _dominant_opposite_pair(w: np.ndarray, maxima: np.ndarray) -> tuple[int, int] | None:
    """The consecutive opposite-sign modulus-maxima pair with largest combined
    modulus; earlier pair on exact ties."""
    best = None
    best_score = -np.inf
    for m1, m2 in zip(maxima, maxima[1:]):
        if w[m1] * w[m2] >= 0:
            continue
        score = abs(w[m1]) + abs(w[m2])
        if score > best_score:
            best_score = score
            best = (int(m1), int(m2))
    return best


def _zero_crossing(w: np.ndarray, m1: int, m2: int) -> int:
    return m1 + int(np.argmin(np.abs(w[m1 : m2 + 1])))


def _build_beat(fields: dict) -> BeatFiducials:
    """Construct a beat, dropping P then T then QRS groups if ordering breaks."""
    groups = (("p_onset", "p_peak", "p_offset"), ("t_peak", "t_offset"), ("qrs_onset", "qrs_offset"))
    attempt = dict(fields)
    for group in (None,) + groups:
        if group is not None:
            for name in group:
                attempt[name] = None
        try:
            return BeatFiducials(**attempt)
        except Exception:
            continue
    return BeatFiducials(r_peak=fields["r_peak"])


def delineate(record: EcgRecord, r_peaks, cfg: DelineatorConfig = DelineatorConfig()) -> FiducialSet:
    """Locate P/QRS/T boundaries around each R peak via modulus-maxima pairs.

    Search windows are clipped at RR midpoints; beats whose windows do not
    fit inside the record are dropped. Absent waves yield absent fields.
    """
    r_peaks = sorted(int(r) for r in r_peaks)
    if not r_peaks:
        raise EmptyBeats("delineate requires at least one R peak")
    x = record.samples
    fs = record.sampling_rate_hz
    n = x.size
    bands = wavelet_bands(x, fs, cfg)
    w_qrs = bands.band(cfg.scales[1] if len(cfg.scales) > 1 else cfg.scales[0])
    w_pt = bands.band(cfg.scales[-1])
    frac = cfg.modulus_threshold_fraction

    qrs_win = _ms_to_samples(cfg.qrs_search_ms, fs)
    p_win = _ms_to_samples(cfg.p_search_ms, fs)
    t_win = _ms_to_samples(cfg.t_search_ms, fs)

    qrs_reference = float(
        np.median(
            [
                np.max(np.abs(w_pt[max(0, r - qrs_win) : min(n, r + qrs_win + 1)]))
                for r in r_peaks
            ]
        )
    )

    beats = []
    for i, r in enumerate(r_peaks):
        if r - (qrs_win + p_win) < 0 or r + (qrs_win + t_win) >= n:
            continue  # edge beat: search windows do not fit
        mid_prev = (r_peaks[i - 1] + r) // 2 if i > 0 else 0
        mid_next = (r + r_peaks[i + 1]) // 2 if i + 1 < len(r_peaks) else n - 1

        fields: dict = {name: None for name in (
            "p_onset", "p_peak", "p_offset", "qrs_onset", "qrs_offset", "t_peak", "t_offset")}
        fields["r_peak"] = r

        # QRS: bracketing pairs in the small-scale band, extended outward.
        lo = max(r - qrs_win, mid_prev)
        hi = min(r + qrs_win, mid_next)
        maxima = _local_modulus_maxima(w_qrs, lo, hi)
        if maxima.size:
            window_peak = np.max(np.abs(w_qrs[lo : hi + 1]))
            maxima = maxima[np.abs(w_qrs[maxima]) >= QRS_MM_FRACTION * window_peak]
        pre = maxima[maxima < r]
        post = maxima[maxima > r]
        if pre.size and post.size:
            fields["qrs_onset"] = _decay_edge(w_qrs, int(pre[0]), frac, lo, -1)
            fields["qrs_offset"] = _decay_edge(w_qrs, int(post[-1]), frac, hi, +1)

        # T: dominant opposite pair in the large-scale band after QRS offset.
        qrs_offset = fields["qrs_offset"]
        if qrs_offset is not None:
            t_lo = qrs_offset + 1
            t_hi = min(qrs_offset + t_win, mid_next, n - 1)
            if t_hi - t_lo > 2:
                window = np.abs(w_pt[t_lo : t_hi + 1])
                if window.max() >= T_PRESENCE_FRACTION * qrs_reference:
                    maxima = _local_modulus_maxima(w_pt, t_lo, t_hi)
                    maxima = maxima[np.abs(w_pt[maxima]) >= WAVE_MM_FRACTION * window.max()]
                    pair = _dominant_opposite_pair(w_pt, maxima)
                    if pair is not None:
                        fields["t_peak"] = _zero_crossing(w_pt, *pair)
                        fields["t_offset"] = _decay_edge(w_pt, pair[1], frac, t_hi, +1)

        # P: same construction in the window before QRS onset.
        qrs_onset = fields["qrs_onset"]
        if qrs_onset is not None:
            p_hi = qrs_onset - 1
            p_lo = max(qrs_onset - p_win, mid_prev, 0)
            if p_hi - p_lo > 2:
                window = np.abs(w_pt[p_lo : p_hi + 1])
                if window.max() >= P_PRESENCE_FRACTION * qrs_reference:
                    maxima = _local_modulus_maxima(w_pt, p_lo, p_hi)
                    maxima = maxima[np.abs(w_pt[maxima]) >= WAVE_MM_FRACTION * window.max()]
                    pair = _dominant_opposite_pair(w_pt, maxima)
                    if pair is not None:
                        fields["p_peak"] = _zero_crossing(w_pt, *pair)
                        fields["p_onset"] = _decay_edge(w_pt, pair[0], frac, p_lo, -1)
                        fields["p_offset"] = _decay_edge(w_pt, pair[1], frac, p_hi, +1)

        beats.append(_build_beat(fields))

    return FiducialSet(beats=tuple(beats), n_samples=n, sampling_rate_hz=fs)


def resample_internal(record: EcgRecord, cfg: DelineatorConfig = DelineatorConfig()) -> EcgRecord:
    """Linear-interpolation resample to the delineator's internal rate.

    Endpoint samples are preserved exactly; a record already at the internal
    rate is returned unchanged.
    """
    if record.sampling_rate_hz == cfg.internal_rate_hz:
        return record
    n = record.n_samples
    ratio = cfg.internal_rate_hz / record.sampling_rate_hz
    m = int(np.floor((n - 1) * ratio)) + 1
    t_new = np.arange(m) / cfg.internal_rate_hz
    t_old = np.arange(n) / record.sampling_rate_hz
    resampled = np.interp(t_new, t_old, record.samples)
    return EcgRecord(
        record_id=record.record_id,
        sampling_rate_hz=cfg.internal_rate_hz,
        samples=resampled,
        lead_label=record.lead_label,
        source_tag=record.source_tag,
    )


def map_index(index: int, from_hz: float, to_hz: float) -> int:
    """Nearest-sample index mapping between sampling rates."""
    return int(round(index * to_hz / from_hz))


def map_fiducials(fiducials: FiducialSet, to_hz: float, n_samples: int) -> FiducialSet:
    """Map a FiducialSet to another sampling rate by nearest-sample indices.

    Rounding can shrink an RR gap below the representable minimum at coarse
    target rates; such beats are dropped rather than violating the invariant.
    """
    if to_hz == fiducials.sampling_rate_hz:
        return fiducials
    min_gap = 0.2 * to_hz - 0.5
    beats = []
    prev_r = None
    for beat in fiducials.beats:
        fields = {name: None for name in (
            "p_onset", "p_peak", "p_offset", "qrs_onset", "qrs_offset", "t_peak", "t_offset")}
        for name, idx in beat.present().items():
            fields[name] = min(n_samples - 1, max(0, map_index(idx, fiducials.sampling_rate_hz, to_hz)))
        mapped = _build_beat(fields)
        if prev_r is not None and mapped.r_peak - prev_r < min_gap:
            continue
        beats.append(mapped)
        prev_r = mapped.r_peak
    return FiducialSet(beats=tuple(beats), n_samples=n_samples, sampling_rate_hz=to_hz)
