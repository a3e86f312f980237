import numpy as np
import pytest

from ecgkit import errors
from ecgkit.records import (
    AnnotationSet,
    EcgRecord,
    MeasurementPair,
    PairedMeasurements,
    Parameter,
    SourceTag,
    pair_by_record,
    read_annotations_csv,
    read_record_csv,
    write_annotations_csv,
    write_record_csv,
)


def make_record(n=1000, rate=500.0, rid="r1", seed=0):
    rng = np.random.default_rng(seed)
    return EcgRecord(record_id=rid, sampling_rate_hz=rate, samples=rng.normal(0, 1, n))


class TestEcgRecord:
    def test_rejects_nan(self):
        samples = np.zeros(1000)
        samples[3] = np.nan
        with pytest.raises(errors.NonFiniteSample):
            EcgRecord(record_id="x", sampling_rate_hz=500.0, samples=samples)

    def test_rejects_low_rate(self):
        with pytest.raises(errors.DataError):
            EcgRecord(record_id="x", sampling_rate_hz=50.0, samples=np.zeros(1000))

    def test_samples_read_only(self):
        record = make_record()
        with pytest.raises(ValueError):
            record.samples[0] = 1.0

    def test_duration(self):
        assert make_record(n=1000, rate=500.0).duration_s == 2.0


class TestRecordCsv:
    def test_two_second_record(self, tmp_path):
        path = tmp_path / "r.csv"
        lines = ["# record_id=r9", "# sampling_rate_hz=500", "# lead_label=I",
                 "# source_tag=wearable", "sample_index,mv"]
        lines += [f"{i},{0.001 * i}" for i in range(1000)]
        path.write_text("\n".join(lines) + "\n")
        record = read_record_csv(path)
        assert record.n_samples == 1000
        assert record.duration_s == 2.0
        assert record.source_tag is SourceTag.WEARABLE

    def test_gap_in_index(self, tmp_path):
        path = tmp_path / "r.csv"
        lines = ["# record_id=r9", "# sampling_rate_hz=500", "# lead_label=I",
                 "# source_tag=machine", "sample_index,mv"]
        lines += [f"{i},{0.0}" for i in range(500)]
        lines += [f"{i},{0.0}" for i in range(501, 1002)]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(errors.NonContiguousIndex):
            read_record_csv(path)

    def test_missing_metadata(self, tmp_path):
        path = tmp_path / "r.csv"
        lines = ["# record_id=r9", "# lead_label=I", "# source_tag=machine", "sample_index,mv"]
        lines += [f"{i},0.0" for i in range(1000)]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(errors.MissingMetadata):
            read_record_csv(path)

    def test_non_finite_cell(self, tmp_path):
        path = tmp_path / "r.csv"
        lines = ["# record_id=r9", "# sampling_rate_hz=500", "# lead_label=I",
                 "# source_tag=machine", "sample_index,mv"]
        lines += [f"{i},0.0" for i in range(999)] + ["999,nan"]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(errors.NonFiniteSample):
            read_record_csv(path)

    def test_too_short(self, tmp_path):
        path = tmp_path / "r.csv"
        lines = ["# record_id=r9", "# sampling_rate_hz=500", "# lead_label=I",
                 "# source_tag=machine", "sample_index,mv"]
        lines += [f"{i},0.0" for i in range(100)]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(errors.TooShort):
            read_record_csv(path)

    def test_round_trip_100_random_records(self, tmp_path):
        rng = np.random.default_rng(42)
        for i in range(100):
            n = int(rng.integers(1000, 3000))
            rate = float(rng.choice([128.0, 250.0, 360.0, 500.0, 1000.0]))
            if n < 2 * rate:
                n = int(2 * rate) + 1
            record = EcgRecord(
                record_id=f"rt-{i:03d}",
                sampling_rate_hz=rate,
                samples=rng.normal(0, 1, n),
                lead_label=str(rng.choice(["I", "II", "V5"])),
                source_tag=SourceTag(str(rng.choice(["wearable", "machine", "synthetic"]))),
            )
            path = tmp_path / f"{i}.csv"
            write_record_csv(record, path)
            loaded = read_record_csv(path)
            assert loaded.record_id == record.record_id
            assert loaded.sampling_rate_hz == record.sampling_rate_hz
            assert loaded.lead_label == record.lead_label
            assert loaded.source_tag == record.source_tag
            assert np.array_equal(loaded.samples, record.samples)

    def test_write_is_deterministic(self, tmp_path):
        record = make_record(seed=7)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_record_csv(record, a)
        write_record_csv(record, b)
        assert a.read_bytes() == b.read_bytes()

    def test_own_output_has_all_metadata(self, tmp_path):
        path = tmp_path / "a.csv"
        write_record_csv(make_record(), path)
        read_record_csv(path)  # MissingMetadata never raised on own output


class TestAnnotationsCsv:
    HEADER = "record_id,annotator_id,pr_ms,qrs_ms,qt_ms,qtc_ms"

    def test_doctor_row(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text(self.HEADER + "\nr1,doctor_A,148,106,378,426.8\n")
        (ann,) = read_annotations_csv(path)
        assert (ann.pr_ms, ann.qrs_ms, ann.qt_ms, ann.qtc_ms) == (148.0, 106.0, 378.0, 426.8)

    def test_empty_cell_absent(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text(self.HEADER + "\nr1,machine,148,106,378,\n")
        (ann,) = read_annotations_csv(path)
        assert ann.qtc_ms is None

    def test_negative_interval(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text(self.HEADER + "\nr1,machine,-5,106,378,430\n")
        with pytest.raises(errors.NegativeInterval):
            read_annotations_csv(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("record,annotator,pr\nr1,m,100\n")
        with pytest.raises(errors.BadHeader):
            read_annotations_csv(path)

    def test_round_trip(self, tmp_path):
        rows = [
            AnnotationSet("r1", "doctor_A", pr_ms=148.0, qrs_ms=106.0, qt_ms=378.0, qtc_ms=426.8),
            AnnotationSet("r2", "doctor_A", pr_ms=120.5, qt_ms=390.0),
        ]
        path = tmp_path / "a.csv"
        write_annotations_csv(rows, path)
        assert read_annotations_csv(path) == rows


class TestPairByRecord:
    @staticmethod
    def ann(rid, annotator, pr=None, qt=None):
        return AnnotationSet(rid, annotator, pr_ms=pr, qt_ms=qt)

    def test_inner_join(self):
        a = [self.ann("r1", "m", pr=150.0), self.ann("r2", "m", pr=160.0)]
        b = [self.ann("r2", "d", pr=155.0), self.ann("r3", "d", pr=140.0)]
        pairs = pair_by_record(a, b, Parameter.PR)
        assert [p.record_id for p in pairs.pairs] == ["r2"]
        assert set(pairs.skipped_record_ids) == {"r1", "r3"}

    def test_parameter_absent_one_side_empty_join(self):
        a = [self.ann("r2", "m", pr=150.0)]
        b = [self.ann("r2", "d", qt=380.0)]
        with pytest.raises(errors.EmptyJoin):
            pair_by_record(a, b, Parameter.PR)

    def test_369_matched_rows(self):
        a = [self.ann(f"r{i:04d}", "m", pr=140.0 + i % 30) for i in range(369)]
        b = [self.ann(f"r{i:04d}", "d", pr=145.0 + i % 28) for i in range(369)]
        pairs = pair_by_record(a, b, Parameter.PR)
        assert pairs.n == 369

    def test_output_subset_of_both(self):
        rng = np.random.default_rng(3)
        a = [self.ann(f"r{i}", "m", pr=float(rng.uniform(100, 200))) for i in rng.choice(50, 30, replace=False)]
        b = [self.ann(f"r{i}", "d", pr=float(rng.uniform(100, 200))) for i in rng.choice(50, 30, replace=False)]
        pairs = pair_by_record(a, b, Parameter.PR)
        ids_a = {x.record_id for x in a}
        ids_b = {x.record_id for x in b}
        assert pairs.n <= min(len(a), len(b))
        assert all(p.record_id in ids_a and p.record_id in ids_b for p in pairs.pairs)
        assert [p.record_id for p in pairs.pairs] == sorted(p.record_id for p in pairs.pairs)


class TestPairedMeasurements:
    def test_rejects_empty(self):
        with pytest.raises(errors.EmptyJoin):
            PairedMeasurements(parameter=Parameter.QT, pairs=())

    def test_rejects_nonpositive(self):
        with pytest.raises(errors.DataError):
            PairedMeasurements(
                parameter=Parameter.QT,
                pairs=(MeasurementPair("r1", 100.0, -3.0),),
            )
