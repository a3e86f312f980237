"""Run manifests and deterministic report serialization (JSON/CSV).

Identical inputs + config + seed produce byte-identical outputs: floats are
serialized with Python's shortest round-trip repr, dict key order is fixed,
and files are written with LF line endings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .agreement import AgreementReport, StratifiedRow, SummaryKind, SummaryStats
from .diagnostics import Condition, DiagnosticReport
from .errors import BadHeader, ConfigError, DataError, IoFailure
from .intervals import IntervalReport
from .records import FiducialSet, SourceTag

FIDUCIAL_HEADER = (
    "beat_index,p_onset,p_peak,p_offset,qrs_onset,r_peak,qrs_offset,t_peak,t_offset"
)
LABELS_HEADER = "record_id,condition,truth"


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(65536), b""):
                digest.update(chunk)
    except OSError as exc:
        raise IoFailure(f"cannot hash {path}: {exc}") from exc
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    command: str
    seed: int | None
    config: dict
    inputs: dict[str, str]

    @classmethod
    def build(cls, command: str, config: dict, input_paths, seed: int | None = None):
        inputs = {str(p): sha256_file(p) for p in sorted(str(p) for p in input_paths)}
        return cls(command=command, seed=seed, config=config, inputs=inputs)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "tool_version": __version__,
            "seed": self.seed,
            "config": self.config,
            "inputs": self.inputs,
        }


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_json(path, payload: dict) -> None:
    write_text(path, json.dumps(payload, indent=2) + "\n")


def interval_report_dict(report: IntervalReport, source_tag: SourceTag | None = None) -> dict:
    """External JSON shape; absent fields are omitted, never null-as-zero."""
    out: dict = {
        "record_id": report.record_id,
        "quality": float(report.quality_score),
        "n_beats_used": report.n_beats_used,
    }
    for name in ("pr_ms", "qrs_ms", "qt_ms", "qtc_ms"):
        value = getattr(report.record_level, name)
        if value is not None:
            out[name] = float(value)
    if source_tag is not None:
        out["source_tag"] = source_tag.value
    per_beat = []
    for beat in report.per_beat:
        entry = {}
        for name in ("pr_ms", "qrs_ms", "qt_ms", "rr_ms", "qtc_ms"):
            value = getattr(beat, name)
            if value is not None:
                entry[name] = float(value)
        per_beat.append(entry)
    out["per_beat"] = per_beat
    return out


def summary_dict(summary: SummaryStats) -> dict:
    if summary.kind is SummaryKind.MEAN_SD:
        return {"kind": summary.kind.value, "center": summary.center, "sd": summary.sd}
    return {
        "kind": summary.kind.value,
        "center": summary.center,
        "iqr": [summary.spread_low, summary.spread_high],
    }


def format_summary(summary: SummaryStats) -> str:
    """Table-cell rendering: 'median (q25, q75)' or 'mean (sd)'."""
    if summary.kind is SummaryKind.MEAN_SD:
        return f"{summary.center:.1f} ({summary.sd:.1f})"
    return f"{summary.center:.1f} ({summary.spread_low:.1f}, {summary.spread_high:.1f})"


def agreement_report_dict(report: AgreementReport) -> dict:
    ba = report.bland_altman
    return {
        "parameter": report.parameter.value,
        "source_a": report.source_a,
        "source_b": report.source_b,
        "n": report.correlation.n,
        "method": report.correlation.method.value,
        "r": report.correlation.r,
        "p": report.correlation.p_value,
        "stars": report.correlation.stars,
        "bland_altman": {
            "mean_diff": ba.mean_diff,
            "sd": ba.sd_diff,
            "loa": [ba.loa_low, ba.loa_high],
            "pct_within": ba.pct_within,
        },
        "summary_a": summary_dict(report.summary_a),
        "summary_b": summary_dict(report.summary_b),
    }


def diagnostic_report_dict(report: DiagnosticReport, source: str | None = None) -> dict:
    out: dict = {
        "condition": report.condition.value,
        "threshold_ms": report.threshold_ms,
        "confusion": {
            "tp": report.confusion.tp,
            "fp": report.confusion.fp,
            "tn": report.confusion.tn,
            "fn": report.confusion.fn,
        },
    }
    for name in ("accuracy", "sensitivity", "specificity"):
        value = getattr(report, name)
        if value is not None:
            out[name] = float(value)
    out["auc"] = float(report.auc)
    out["roc"] = [[float(x), float(y)] for x, y in report.roc_points]
    out["skipped"] = report.skipped
    if source is not None:
        out["source"] = source
    return out


def stratified_rows_csv(rows: list[StratifiedRow]) -> str:
    lines = ["group,parameter,n,method,r,p,stars,reason"]
    for row in rows:
        if row.result is not None:
            c = row.result
            lines.append(
                f"{row.group},{row.parameter.value},{c.n},{c.method.value},"
                f"{c.r!r},{c.p_value!r},{c.stars},"
            )
        else:
            lines.append(f"{row.group},{row.parameter.value},,,,,ns,{row.reason}")
    return "\n".join(lines) + "\n"


def write_fiducials_csv(fiducials: FiducialSet, path) -> None:
    """Debug dump: one row per beat, empty cell = absent fiducial."""
    lines = [FIDUCIAL_HEADER]
    for i, beat in enumerate(fiducials.beats):
        cells = [str(i)]
        for name in ("p_onset", "p_peak", "p_offset", "qrs_onset", "r_peak",
                     "qrs_offset", "t_peak", "t_offset"):
            value = getattr(beat, name)
            cells.append("" if value is None else str(int(value)))
        lines.append(",".join(cells))
    write_text(path, "\n".join(lines) + "\n")


def write_labels_csv(rows, path) -> None:
    """rows: iterable of (record_id, Condition, truth_bool)."""
    lines = [LABELS_HEADER]
    for record_id, condition, truth in rows:
        lines.append(f"{record_id},{condition.value},{int(bool(truth))}")
    write_text(path, "\n".join(lines) + "\n")


def read_labels_csv(path) -> list[tuple[str, Condition, bool]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != LABELS_HEADER:
        raise BadHeader(f"{path}: expected header {LABELS_HEADER!r}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 3:
            raise BadHeader(f"{path}:{lineno}: expected 3 cells")
        try:
            condition = Condition(cells[1].strip().upper())
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: unknown condition {cells[1]!r}") from exc
        truth_text = cells[2].strip().lower()
        if truth_text not in {"0", "1", "true", "false"}:
            raise DataError(f"{path}:{lineno}: truth must be 0/1/true/false")
        out.append((cells[0].strip(), condition, truth_text in {"1", "true"}))
    return out


def parse_config_file(path) -> dict[str, str]:
    """key = value lines; '#' starts a comment; whitespace is ignored."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip().strip('"')
    return out
