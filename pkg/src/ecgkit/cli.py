"""Command-line surface: analyze, validate, diagnose, synth.

Exit codes: 0 = ran to completion (exclusions allowed), 2 = usage/config
error, 3 = data error. All outputs are byte-deterministic for identical
inputs, flags and seed, including under different --jobs values.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import agreement as ag
from . import diagnostics as dx
from . import synth as sy
from .delineator import DelineatorConfig
from .errors import ConfigError, DataError, EcgKitError, EmptyJoin, UnknownSource
from .pipeline import AnalysisResult, PipelineConfig, analyze_record
from .preprocess import PreprocessConfig
from .records import (
    AnnotationSet,
    Parameter,
    SourceTag,
    pair_by_record,
    read_annotations_csv,
    read_record_csv,
    write_record_csv,
)
from .reportio import (
    RunManifest,
    agreement_report_dict,
    diagnostic_report_dict,
    format_summary,
    interval_report_dict,
    parse_config_file,
    read_labels_csv,
    stratified_rows_csv,
    write_fiducials_csv,
    write_json,
    write_labels_csv,
    write_text,
)
from .svgplot import bland_altman_svg, roc_svg

QUALITY_BIN_EDGES = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
COMPUTED_SOURCE = "computed"

_PREPROCESS_KEYS = {f.name for f in dataclasses.fields(PreprocessConfig)}
_DELINEATOR_KEYS = {f.name for f in dataclasses.fields(DelineatorConfig)}


def _apply_config_file(cfg: PipelineConfig, path) -> PipelineConfig:
    raw = parse_config_file(path)
    pre_kwargs, delin_kwargs = {}, {}
    lqt = cfg.lqt_threshold_ms
    avbi = dict(cfg.avbi_thresholds_ms)
    for key, value in raw.items():
        try:
            if key in _PREPROCESS_KEYS:
                pre_kwargs[key] = float(value)
            elif key == "scales":
                delin_kwargs["scales"] = tuple(int(v) for v in value.split(","))
            elif key in _DELINEATOR_KEYS:
                delin_kwargs[key] = float(value)
            elif key == "lqt_threshold_ms":
                lqt = float(value)
            elif key.startswith("avbi_threshold_ms."):
                avbi[SourceTag(key.split(".", 1)[1])] = float(value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    return PipelineConfig(
        preprocess=dataclasses.replace(cfg.preprocess, **pre_kwargs),
        delineator=dataclasses.replace(cfg.delineator, **delin_kwargs),
        lqt_threshold_ms=lqt,
        avbi_thresholds_ms=avbi,
    )


def _pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        cfg = _apply_config_file(cfg, args.config)
    pre_overrides = {}
    if getattr(args, "bp_low", None) is not None:
        pre_overrides["bandpass_low_hz"] = args.bp_low
    if getattr(args, "bp_high", None) is not None:
        pre_overrides["bandpass_high_hz"] = args.bp_high
    if getattr(args, "quality_threshold", None) is not None:
        pre_overrides["quality_threshold"] = args.quality_threshold
    if pre_overrides:
        cfg = dataclasses.replace(cfg, preprocess=dataclasses.replace(cfg.preprocess, **pre_overrides))
    return cfg


def _config_snapshot(cfg: PipelineConfig) -> dict:
    return {
        "preprocess": dataclasses.asdict(cfg.preprocess),
        "delineator": {**dataclasses.asdict(cfg.delineator), "scales": list(cfg.delineator.scales)},
        "lqt_threshold_ms": cfg.lqt_threshold_ms,
        "avbi_thresholds_ms": {tag.value: ms for tag, ms in sorted(
            cfg.avbi_thresholds_ms.items(), key=lambda kv: kv[0].value)},
    }


# --- analyze -----------------------------------------------------------------


def cmd_analyze(args) -> int:
    cfg = _pipeline_config(args)
    out_dir = Path(args.out)

    readable, errors = [], []
    for path in args.records:
        try:
            readable.append((str(path), read_record_csv(path)))
        except EcgKitError as exc:
            errors.append({"path": str(path), "error": f"{type(exc).__name__}: {exc}"})

    def run(item) -> AnalysisResult:
        _, record = item
        return analyze_record(record, cfg)

    if args.jobs > 1 and len(readable) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run, readable))
    else:
        results = [run(item) for item in readable]
    results.sort(key=lambda r: r.record_id)

    manifest = RunManifest.build(
        "analyze", _config_snapshot(cfg), [p for p, _ in readable], seed=args.seed
    )
    payload = {
        "manifest": manifest.to_dict(),
        "results": [
            interval_report_dict(r.report, r.source_tag) for r in results if not r.excluded
        ],
        "excluded": [
            {"record_id": r.record_id, "quality": float(r.quality)}
            for r in results
            if r.excluded
        ],
        "errors": errors,
    }
    write_json(out_dir / "analysis.json", payload)
    if args.dump_fiducials:
        for r in results:
            if r.fiducials is not None:
                write_fiducials_csv(r.fiducials, Path(args.dump_fiducials) / f"{r.record_id}.csv")
    if errors:
        print(f"analyze: {len(errors)} input file(s) failed", file=sys.stderr)
        return 3
    return 0


# --- validate ----------------------------------------------------------------


def _load_analysis(path) -> tuple[list[AnnotationSet], dict[str, float]]:
    """Computed record-level intervals as AnnotationSets, plus quality by id."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load analysis report {path}: {exc}") from exc
    computed, quality = [], {}
    for row in payload.get("results", []):
        computed.append(
            AnnotationSet(
                record_id=row["record_id"],
                annotator_id=COMPUTED_SOURCE,
                pr_ms=row.get("pr_ms"),
                qrs_ms=row.get("qrs_ms"),
                qt_ms=row.get("qt_ms"),
                qtc_ms=row.get("qtc_ms"),
            )
        )
        quality[row["record_id"]] = float(row["quality"])
    return computed, quality


def _compare(computed, annotations, parameter):
    """AgreementReport plus its pairs, or None when the comparison is degenerate."""
    try:
        pairs = pair_by_record(computed, annotations, parameter, source_a=COMPUTED_SOURCE)
        correlation = ag.auto_correlation(pairs)
        summary_a = ag.summarize(pairs.a_values())
        summary_b = ag.summarize(pairs.b_values())
    except EcgKitError:
        return None
    report = ag.AgreementReport(
        parameter=parameter,
        source_a=COMPUTED_SOURCE,
        source_b=pairs.source_b,
        correlation=correlation,
        bland_altman=ag.bland_altman(pairs),
        summary_a=summary_a,
        summary_b=summary_b,
    )
    return report, pairs


def cmd_validate(args) -> int:
    out_dir = Path(args.out)
    computed, quality_by_id = _load_analysis(args.reports)
    annotations = read_annotations_csv(args.annotations)

    by_annotator: dict[str, list[AnnotationSet]] = {}
    for ann in annotations:
        by_annotator.setdefault(ann.annotator_id, []).append(ann)

    comparisons, warnings = [], []
    for annotator in sorted(by_annotator):
        rows = by_annotator[annotator]
        table_lines = ["parameter,a_summary,b_summary,r,p"]
        for parameter in Parameter:
            compared = _compare(computed, rows, parameter)
            if compared is None:
                warnings.append({"parameter": parameter.value, "annotator": annotator,
                                 "warning": "empty join or degenerate data"})
                continue
            report, pairs = compared
            comparisons.append(agreement_report_dict(report))
            table_lines.append(
                f"{parameter.value},\"{format_summary(report.summary_a)}\","
                f"\"{format_summary(report.summary_b)}\",{report.correlation.r:.3f},"
                f"{report.correlation.p_value:.3g}"
            )
            means = (pairs.a_values() + pairs.b_values()) / 2.0
            diffs = pairs.a_values() - pairs.b_values()
            svg = bland_altman_svg(
                report.bland_altman, means.tolist(), diffs.tolist(),
                f"{parameter.value}: {COMPUTED_SOURCE} vs {annotator}",
            )
            write_text(out_dir / "plots" / f"bland_altman_{parameter.value}_{annotator}.svg", svg)
        write_text(out_dir / "tables" / f"parameters_{annotator}.csv",
                   "\n".join(table_lines) + "\n")

    inputs = [args.reports, args.annotations]
    stratified_payload = {}
    if args.stratify_by:
        inputs.append(args.stratify_by)
        groups = _read_group_labels(args.stratify_by)
        rows = _stratify(computed, annotations, lambda rid: groups.get(rid))
        write_text(out_dir / "tables" / "stratified.csv", stratified_rows_csv(rows))
        stratified_payload["by_label"] = len(rows)
    if args.stratify_by_quality:
        def quality_bin(rid):
            q = quality_by_id.get(rid)
            if q is None:
                return None
            for lo, hi in zip(QUALITY_BIN_EDGES, QUALITY_BIN_EDGES[1:]):
                if lo <= q < hi or (hi == QUALITY_BIN_EDGES[-1] and q == hi):
                    return f"q{lo:.1f}-{hi:.1f}"
            return None

        rows = _stratify(computed, annotations, quality_bin)
        write_text(out_dir / "tables" / "stratified_quality.csv", stratified_rows_csv(rows))
        stratified_payload["by_quality"] = len(rows)

    manifest = RunManifest.build("validate", {"loa_z": ag.DEFAULT_LOA_Z}, inputs, seed=args.seed)
    write_json(out_dir / "agreement.json", {
        "manifest": manifest.to_dict(),
        "comparisons": comparisons,
        "warnings": warnings,
        **({"stratified": stratified_payload} if stratified_payload else {}),
    })
    return 0


def _read_group_labels(path) -> dict[str, str]:
    try:
        lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != "record_id,group":
        raise DataError(f"{path}: expected header 'record_id,group'")
    return {rid.strip(): grp.strip() for rid, _, grp in (ln.partition(",") for ln in lines[1:])}


def _stratify(computed, annotations, group_of) -> list[ag.StratifiedRow]:
    rows: list[ag.StratifiedRow] = []
    for parameter in Parameter:
        grouped: dict[str, list[AnnotationSet]] = {}
        for ann in annotations:
            group = group_of(ann.record_id)
            if group is not None:
                grouped.setdefault(group, []).append(ann)
        pairs_by_group = {}
        empty_rows = []
        for group, rows_in_group in grouped.items():
            try:
                pairs_by_group[group] = pair_by_record(
                    computed, rows_in_group, parameter, source_a=COMPUTED_SOURCE
                )
            except EmptyJoin:
                empty_rows.append(ag.StratifiedRow(group=group, parameter=parameter,
                                                   result=None, reason="EmptyJoin"))
        rows.extend(sorted(ag.stratified_correlation(pairs_by_group) + empty_rows,
                           key=lambda row: row.group))
    return rows


# --- diagnose ------------------------------------------------------------


def cmd_diagnose(args) -> int:
    out_dir = Path(args.out)
    try:
        payload = json.loads(Path(args.reports).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load analysis report {args.reports}: {exc}") from exc
    rows = {row["record_id"]: row for row in payload.get("results", [])}
    labels = read_labels_csv(args.labels)

    selected = {
        "lqt": [dx.Condition.LQT],
        "avbi": [dx.Condition.AVBI],
        "both": [dx.Condition.LQT, dx.Condition.AVBI],
    }[args.condition]

    reports = []
    for condition in selected:
        truth_by_id = {rid: truth for rid, cond, truth in labels if cond is condition}
        if not truth_by_id:
            continue
        if condition is dx.Condition.LQT:
            groups = {None: ("qtc_ms", float(args.lqt_threshold))}
        elif args.avbi_threshold is not None:
            groups = {None: ("pr_ms", float(args.avbi_threshold))}
        else:
            by_source: dict[str, None] = {}
            for rid in truth_by_id:
                row = rows.get(rid)
                if row is not None:
                    by_source[row.get("source_tag", SourceTag.SYNTHETIC.value)] = None
            groups = {}
            for source in sorted(by_source):
                tag = SourceTag(source)
                if tag not in dx.DEFAULT_AVBI_THRESHOLDS_MS:
                    raise UnknownSource(
                        f"source {source!r} needs --avbi-threshold (no configured PR cutoff)"
                    )
                groups[source] = ("pr_ms", dx.DEFAULT_AVBI_THRESHOLDS_MS[tag])

        for source, (column, threshold) in groups.items():
            scores, truths, skipped = [], [], 0
            for rid, truth in sorted(truth_by_id.items()):
                row = rows.get(rid)
                if source is not None and row is not None:
                    if row.get("source_tag", SourceTag.SYNTHETIC.value) != source:
                        continue
                if row is None or column not in row:
                    skipped += 1
                    continue
                scores.append(float(row[column]))
                truths.append(truth)
            report = dx.evaluate_detector(scores, truths, condition,
                                          threshold_ms=threshold, skipped=skipped)
            reports.append((report, source))
            suffix = f"_{source}" if source is not None else ""
            write_text(
                out_dir / "plots" / f"roc_{condition.value}{suffix}.svg",
                roc_svg(report, f"{condition.value} detection{suffix.replace('_', ' ')}"),
            )

    manifest = RunManifest.build(
        "diagnose",
        {"condition": args.condition, "lqt_threshold_ms": float(args.lqt_threshold),
         "avbi_threshold_ms": args.avbi_threshold},
        [args.reports, args.labels],
        seed=args.seed,
    )
    write_json(out_dir / "diagnostics.json", {
        "manifest": manifest.to_dict(),
        "reports": [diagnostic_report_dict(rep, src) for rep, src in reports],
    })
    return 0


# --- synth ---------------------------------------------------------------


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    noise = {
        "none": sy.NoiseSpec(),
        "white": sy.NoiseSpec(kind=sy.NoiseKind.WHITE, snr_db=args.snr_db),
        "drift": sy.NoiseSpec(kind=sy.NoiseKind.BASELINE_DRIFT),
        "mains": sy.NoiseSpec(kind=sy.NoiseKind.MAINS),
    }[args.noise]

    entries = []
    if args.condition == "none":
        for i in range(args.n):
            params = sy.SynthParams(
                duration_s=args.duration,
                heart_rate_bpm=args.hr,
                sampling_rate_hz=args.fs,
                noise=noise,
                seed=int(np_seed(args.seed, i)),
                record_id=f"synth-{i:04d}",
            )
            record, truth = sy.generate(params)
            entries.append((record, truth, None, None))
    else:
        condition = dx.Condition(args.condition.upper())
        base = sy.AVBI_COHORT if condition is dx.Condition.AVBI else sy.LQT_COHORT
        spec = dataclasses.replace(base, duration_s=args.duration, noise=noise)
        for item in sy.generate_cohort(args.n, spec, args.seed):
            entries.append((item.record, item.truth, item.condition, item.label))

    labels = []
    for record, truth, condition, label in entries:
        write_record_csv(record, _ensure_dir(out_dir / "records") / f"{record.record_id}.csv")
        write_fiducials_csv(truth.fiducials, out_dir / "fiducials" / f"{record.record_id}.csv")
        if condition is not None:
            labels.append((record.record_id, condition, label))
    if labels:
        write_labels_csv(labels, out_dir / "labels.csv")
    return 0


def np_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence((seed, index)).generate_state(1)[0])


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


# --- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecgkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("analyze", help="measure intervals from record CSVs")
    p.add_argument("records", nargs="+", help="record CSV files")
    shared(p)
    p.add_argument("--bp-low", type=float, default=None)
    p.add_argument("--bp-high", type=float, default=None)
    p.add_argument("--quality-threshold", type=float, default=None)
    p.add_argument("--dump-fiducials", default=None, help="directory for fiducial CSVs")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate", help="compare analysis output against annotations")
    p.add_argument("--reports", required=True, help="analysis.json from the analyze command")
    p.add_argument("--annotations", required=True, help="annotation CSV")
    shared(p)
    p.add_argument("--stratify-by", default=None, help="record_id,group CSV")
    p.add_argument("--stratify-by-quality", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("diagnose", help="LQT/AVBI detection metrics against truth labels")
    p.add_argument("--reports", required=True)
    p.add_argument("--labels", required=True, help="record_id,condition,truth CSV")
    shared(p)
    p.add_argument("--condition", choices=["lqt", "avbi", "both"], default="both")
    p.add_argument("--lqt-threshold", type=float, default=dx.DEFAULT_LQT_THRESHOLD_MS)
    p.add_argument("--avbi-threshold", type=float, default=None,
                   help="uniform PR cutoff overriding per-source defaults")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("synth", help="generate synthetic records with ground truth")
    shared(p)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--condition", choices=["none", "avbi", "lqt"], default="none")
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--hr", type=float, default=60.0)
    p.add_argument("--fs", type=float, default=500.0)
    p.add_argument("--noise", choices=["none", "white", "drift", "mains"], default="none")
    p.add_argument("--snr-db", type=float, default=10.0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None and args.command == "synth":
        args.seed = 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ecgkit {args.command}: {exc}", file=sys.stderr)
        return 2
    except EcgKitError as exc:
        print(f"ecgkit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
