"""Domain types for ECG records, expert annotations, and paired measurements.

File formats (both UTF-8, LF line endings, ``.`` decimal separator):

* record CSV -- ``# key=value`` metadata lines for record_id,
  sampling_rate_hz, lead_label and source_tag, followed by a
  ``sample_index,mv`` header and one row per sample.
* annotation CSV -- header ``record_id,annotator_id,pr_ms,qrs_ms,qt_ms,qtc_ms``
  with empty cells meaning "value absent".

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    DataError,
    EmptyJoin,
    IntervalOutOfRange,
    IoFailure,
    MissingMetadata,
    NegativeInterval,
    NonContiguousIndex,
    NonFiniteSample,
    TooShort,
)

RECORD_HEADER = "sample_index,mv"
ANNOTATION_HEADER = "record_id,annotator_id,pr_ms,qrs_ms,qt_ms,qtc_ms"
_REQUIRED_METADATA = ("record_id", "sampling_rate_hz", "lead_label", "source_tag")

MIN_SAMPLING_RATE_HZ = 100.0
MIN_RECORD_SECONDS = 2.0
MAX_INTERVAL_MS = 2000.0
MIN_RR_GAP_S = 0.2


class SourceTag(Enum):
    WEARABLE = "wearable"
    MACHINE = "machine"
    SYNTHETIC = "synthetic"


class Parameter(Enum):
    PR = "PR"
    QRS = "QRS"
    QT = "QT"
    QTC = "QTc"

    @property
    def column(self) -> str:
        """Column/attribute name carrying this parameter in milliseconds."""
        return {"PR": "pr_ms", "QRS": "qrs_ms", "QT": "qt_ms", "QTc": "qtc_ms"}[self.value]


@dataclass(frozen=True)
class EcgRecord:
    """Uniformly sampled single-lead voltage series in millivolts."""

    record_id: str
    sampling_rate_hz: float
    samples: np.ndarray
    lead_label: str = "I"
    source_tag: SourceTag = SourceTag.SYNTHETIC

    def __post_init__(self):
        if not math.isfinite(self.sampling_rate_hz) or self.sampling_rate_hz < MIN_SAMPLING_RATE_HZ:
            raise DataError(
                f"sampling_rate_hz must be finite and >= {MIN_SAMPLING_RATE_HZ}, "
                f"got {self.sampling_rate_hz!r}"
            )
        samples = np.array(self.samples, dtype=np.float64, copy=True)
        if samples.ndim != 1 or samples.size == 0:
            raise DataError("samples must be a nonempty 1-D sequence")
        if not np.isfinite(samples).all():
            raise NonFiniteSample(f"record {self.record_id!r} contains NaN/Inf samples")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sampling_rate_hz

    def require_duration(self, seconds: float) -> None:
        """Raise TooShort unless the record spans at least ``seconds``."""
        if self.duration_s < seconds:
            raise TooShort(
                f"record {self.record_id!r} is {self.duration_s:.3f} s, needs >= {seconds} s"
            )

    def with_samples(self, samples: np.ndarray) -> "EcgRecord":
        """Same identity/rate with replaced voltage data."""
        return EcgRecord(
            record_id=self.record_id,
            sampling_rate_hz=self.sampling_rate_hz,
            samples=samples,
            lead_label=self.lead_label,
            source_tag=self.source_tag,
        )


_FIDUCIAL_ORDER = (
    "p_onset",
    "p_peak",
    "p_offset",
    "qrs_onset",
    "r_peak",
    "qrs_offset",
    "t_peak",
    "t_offset",
)


@dataclass(frozen=True)
class BeatFiducials:
    """Per-beat onset/peak/offset sample indices; r_peak is always present."""

    r_peak: int
    p_onset: int | None = None
    p_peak: int | None = None
    p_offset: int | None = None
    qrs_onset: int | None = None
    qrs_offset: int | None = None
    t_peak: int | None = None
    t_offset: int | None = None

    def present(self) -> dict[str, int]:
        """Present fields in canonical waveform order."""
        out: dict[str, int] = {}
        for name in _FIDUCIAL_ORDER:
            value = getattr(self, name)
            if value is not None:
                out[name] = int(value)
        return out

    def __post_init__(self):
        ordered = self.present()
        if min(ordered.values()) < 0:
            raise DataError(f"negative fiducial index in beat r_peak={self.r_peak}")
        values = list(ordered.values())
        for earlier, later in zip(values, values[1:]):
            if later <= earlier:
                raise DataError(
                    f"fiducials out of order around r_peak={self.r_peak}: {ordered}"
                )


@dataclass(frozen=True)
class FiducialSet:
    """Ordered beats of fiducial indices, validated against the source record."""

    beats: tuple[BeatFiducials, ...]
    n_samples: int
    sampling_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "beats", tuple(self.beats))
        min_gap = MIN_RR_GAP_S * self.sampling_rate_hz - 0.5  # half-sample rounding slack
        prev_r = None
        for beat in self.beats:
            for name, idx in beat.present().items():
                if not 0 <= idx < self.n_samples:
                    raise DataError(f"fiducial {name}={idx} outside [0, {self.n_samples})")
            if prev_r is not None and beat.r_peak - prev_r < min_gap:
                raise DataError(
                    f"consecutive r_peaks {prev_r}, {beat.r_peak} closer than "
                    f"{MIN_RR_GAP_S * 1000:.0f} ms"
                )
            prev_r = beat.r_peak

    def r_peaks(self) -> list[int]:
        return [b.r_peak for b in self.beats]


@dataclass(frozen=True)
class AnnotationSet:
    """One annotator's record-level interval measurements in milliseconds."""

    record_id: str
    annotator_id: str
    pr_ms: float | None = None
    qrs_ms: float | None = None
    qt_ms: float | None = None
    qtc_ms: float | None = None

    def __post_init__(self):
        for param in Parameter:
            value = getattr(self, param.column)
            if value is None:
                continue
            if not math.isfinite(value) or value <= 0:
                raise NegativeInterval(
                    f"{self.record_id}/{self.annotator_id}: {param.column}={value!r}"
                )
            if value >= MAX_INTERVAL_MS:
                raise IntervalOutOfRange(
                    f"{self.record_id}/{self.annotator_id}: {param.column}={value!r}"
                )

    def value(self, parameter: Parameter) -> float | None:
        return getattr(self, parameter.column)


@dataclass(frozen=True)
class MeasurementPair:
    record_id: str
    a_value_ms: float
    b_value_ms: float


@dataclass(frozen=True)
class PairedMeasurements:
    """Matched per-record values for one parameter from two sources."""

    parameter: Parameter
    pairs: tuple[MeasurementPair, ...]
    source_a: str = "A"
    source_b: str = "B"
    skipped_record_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        object.__setattr__(self, "skipped_record_ids", tuple(self.skipped_record_ids))
        if not self.pairs:
            raise EmptyJoin(f"no pairs for parameter {self.parameter.value}")
        for p in self.pairs:
            for v in (p.a_value_ms, p.b_value_ms):
                if not math.isfinite(v) or v <= 0:
                    raise DataError(f"pair {p.record_id}: non-finite or non-positive value {v!r}")

    @property
    def n(self) -> int:
        return len(self.pairs)

    def a_values(self) -> np.ndarray:
        return np.array([p.a_value_ms for p in self.pairs], dtype=np.float64)

    def b_values(self) -> np.ndarray:
        return np.array([p.b_value_ms for p in self.pairs], dtype=np.float64)

    @classmethod
    def from_arrays(cls, parameter, a, b, source_a="A", source_b="B"):
        """Build from two aligned value arrays (ids are positional)."""
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise DataError("a and b must have identical shapes")
        pairs = tuple(
            MeasurementPair(f"idx-{i:05d}", float(x), float(y)) for i, (x, y) in enumerate(zip(a, b))
        )
        return cls(parameter=parameter, pairs=pairs, source_a=source_a, source_b=source_b)


# --- file ingestion / serialization ----------------------------------------


def _parse_float(text: str, context: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise DataError(f"{context}: cannot parse {text!r} as a number") from exc
    return value


def read_record_csv(path) -> EcgRecord:
    """Read one ECG record from the commented-metadata CSV format.

    Raises MissingMetadata, NonContiguousIndex, NonFiniteSample, TooShort,
    BadHeader or IoFailure.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    metadata: dict[str, str] = {}
    lines = text.splitlines()
    row_start = None
    for lineno, line in enumerate(lines):
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise MissingMetadata(f"{path}:{lineno + 1}: malformed metadata line {line!r}")
            key, _, value = body.partition("=")
            metadata[key.strip()] = value.strip()
        elif line.strip() == "":
            continue
        else:
            if line.strip() != RECORD_HEADER:
                raise BadHeader(f"{path}:{lineno + 1}: expected {RECORD_HEADER!r}, got {line!r}")
            row_start = lineno + 1
            break
    if row_start is None:
        raise BadHeader(f"{path}: no {RECORD_HEADER!r} header found")

    for key in _REQUIRED_METADATA:
        if key not in metadata:
            raise MissingMetadata(f"{path}: missing required metadata key {key!r}")
    rate = _parse_float(metadata["sampling_rate_hz"], f"{path}: sampling_rate_hz")
    try:
        source = SourceTag(metadata["source_tag"])
    except ValueError as exc:
        raise MissingMetadata(f"{path}: unknown source_tag {metadata['source_tag']!r}") from exc

    values = []
    expected = 0
    for lineno in range(row_start, len(lines)):
        line = lines[lineno].strip()
        if not line:
            continue
        idx_text, _, mv_text = line.partition(",")
        idx = int(_parse_float(idx_text, f"{path}:{lineno + 1}: sample_index"))
        if idx != expected:
            raise NonContiguousIndex(f"{path}:{lineno + 1}: sample_index {idx}, expected {expected}")
        mv = _parse_float(mv_text, f"{path}:{lineno + 1}: mv")
        if not math.isfinite(mv):
            raise NonFiniteSample(f"{path}:{lineno + 1}: non-finite sample {mv_text!r}")
        values.append(mv)
        expected += 1

    if not values or len(values) < MIN_RECORD_SECONDS * rate:
        raise TooShort(
            f"{path}: {len(values)} samples at {rate} Hz is shorter than "
            f"{MIN_RECORD_SECONDS} s"
        )
    return EcgRecord(
        record_id=metadata["record_id"],
        sampling_rate_hz=rate,
        samples=np.array(values, dtype=np.float64),
        lead_label=metadata["lead_label"],
        source_tag=source,
    )


def write_record_csv(record: EcgRecord, path) -> None:
    """Write the format read_record_csv accepts; byte-deterministic."""
    path = Path(path)
    lines = [
        f"# record_id={record.record_id}",
        f"# sampling_rate_hz={record.sampling_rate_hz!r}",
        f"# lead_label={record.lead_label}",
        f"# source_tag={record.source_tag.value}",
        RECORD_HEADER,
    ]
    lines.extend(f"{i},{v!r}" for i, v in enumerate(record.samples.tolist()))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines))
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_annotations_csv(path) -> list[AnnotationSet]:
    """Read record-level annotations; empty cells mean absent values."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != ANNOTATION_HEADER:
        raise BadHeader(f"{path}: expected header {ANNOTATION_HEADER!r}")

    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 6:
            raise BadHeader(f"{path}:{lineno}: expected 6 cells, got {len(cells)}")
        record_id, annotator_id = cells[0].strip(), cells[1].strip()
        numbers = [
            _parse_float(c.strip(), f"{path}:{lineno}") if c.strip() else None for c in cells[2:]
        ]
        out.append(
            AnnotationSet(
                record_id=record_id,
                annotator_id=annotator_id,
                pr_ms=numbers[0],
                qrs_ms=numbers[1],
                qt_ms=numbers[2],
                qtc_ms=numbers[3],
            )
        )
    return out


def write_annotations_csv(annotations, path) -> None:
    """Inverse of read_annotations_csv; byte-deterministic."""
    path = Path(path)

    def cell(v):
        return "" if v is None else repr(float(v))

    lines = [ANNOTATION_HEADER]
    for a in annotations:
        lines.append(
            f"{a.record_id},{a.annotator_id},{cell(a.pr_ms)},{cell(a.qrs_ms)},"
            f"{cell(a.qt_ms)},{cell(a.qtc_ms)}"
        )
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines))
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def pair_by_record(a, b, parameter: Parameter, source_a=None, source_b=None) -> PairedMeasurements:
    """Inner-join two annotation lists on record_id for one parameter.

    Records missing on either side, or lacking the parameter, land in
    ``skipped_record_ids`` rather than raising; an empty join raises EmptyJoin.
    """

    def index(annotations):
        by_id = {}
        for ann in annotations:
            by_id.setdefault(ann.record_id, ann)
        return by_id

    a_by_id, b_by_id = index(a), index(b)
    pairs, skipped = [], []
    for record_id in sorted(set(a_by_id) | set(b_by_id)):
        left, right = a_by_id.get(record_id), b_by_id.get(record_id)
        va = left.value(parameter) if left is not None else None
        vb = right.value(parameter) if right is not None else None
        if va is None or vb is None:
            skipped.append(record_id)
        else:
            pairs.append(MeasurementPair(record_id, va, vb))
    if not pairs:
        raise EmptyJoin(f"no overlapping records carry {parameter.value} on both sides")

    def label(annotations, fallback):
        ids = {ann.annotator_id for ann in annotations}
        return ids.pop() if len(ids) == 1 else fallback

    return PairedMeasurements(
        parameter=parameter,
        pairs=tuple(pairs),
        source_a=source_a if source_a is not None else label(a, "A"),
        source_b=source_b if source_b is not None else label(b, "B"),
        skipped_record_ids=tuple(skipped),
    )
