"""Report serialization: round trips, stable bytes, and sweep tables."""

import json
import math

import pytest

from sp4cert import figures
from sp4cert.decay import Setting, SettingKind, decay_profile
from sp4cert.errors import DomainError
from sp4cert.reports import (
    SCHEMA,
    CheckRecord,
    SuiteReport,
    emit_report,
    merge_reports,
    parse_report,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def gauss_record(i: int, j: int, max_abs: float, passed: bool = True) -> CheckRecord:
    return CheckRecord(
        suite="gauss",
        instance=(3, i, j),
        instance_names=("p", "i", "j"),
        measured_name="max_abs",
        measured=max_abs,
        bound=2.0 * 3 ** (-(i - j) / 2.0),
        passed=passed,
        detail={"route": "character sweep"},
    )


def sample_report() -> SuiteReport:
    return SuiteReport(
        suite="gauss",
        records=[gauss_record(2, 1, 1.0), gauss_record(3, 1, 0.5773502691896258)],
        seed=0,
        config={"p": 3, "imax": 3},
        elapsed_seconds=1.25,
    )


class TestRecords:
    def test_margin(self):
        rec = gauss_record(3, 1, 0.5)
        assert rec.margin == pytest.approx(2.0 / 3.0 - 0.5)
        rec.bound = None
        assert rec.margin is None

    def test_instance_names_must_align(self):
        with pytest.raises(DomainError):
            CheckRecord(
                suite="x",
                instance=(1, 2),
                instance_names=("a",),
                measured_name="v",
                measured=0.0,
                bound=None,
                passed=True,
            )

    def test_detail_is_json_shaped(self):
        rec = CheckRecord(
            suite="x",
            instance=(1,),
            instance_names=("k",),
            measured_name="v",
            measured=0.0,
            bound=None,
            passed=True,
            detail={"pair": (1, 2)},
        )
        assert rec.detail == {"pair": [1, 2]}


class TestJsonEmission:
    def test_round_trip_identity(self):
        report = sample_report()
        again = parse_report(emit_report(report, "json"))
        assert again == report

    def test_bytes_stable_modulo_timing(self):
        a, b = sample_report(), sample_report()
        b.elapsed_seconds = 99.0
        assert a.to_json() != b.to_json()
        assert a.to_json(include_timing=False) == b.to_json(include_timing=False)

    def test_schema_header_and_environment(self):
        doc = json.loads(sample_report().to_json())
        assert doc["schema"] == SCHEMA
        assert doc["passed"] is True
        assert set(doc["environment"]) == {"python", "numpy", "platform"}

    def test_unknown_schema_rejected(self):
        with pytest.raises(DomainError):
            parse_report(json.dumps({"schema": "bogus/9", "records": []}))

    def test_empty_report_is_valid(self):
        empty = SuiteReport(suite="gauss", records=[])
        assert empty.passed
        doc = json.loads(emit_report(empty, "json"))
        assert doc["schema"] == SCHEMA and doc["records"] == []

    def test_emit_writes_the_file(self, tmp_path):
        path = tmp_path / "report.json"
        text = emit_report(sample_report(), "json", str(path))
        assert path.read_text() == text

    def test_unknown_format(self):
        with pytest.raises(DomainError):
            emit_report(sample_report(), "yaml")


class TestCsvEmission:
    def test_gauss_sweep_columns(self):
        lines = sample_report().to_csv().splitlines()
        assert lines[0] == "p,i,j,max_abs,bound,margin"
        assert len(lines) == 3
        assert lines[1].startswith("3,2,1,1.0,")

    def test_empty_document_keeps_schema_header(self):
        text = SuiteReport(suite="gauss", records=[]).to_csv()
        assert text == f"# schema: {SCHEMA}\n"

    def test_missing_bound_leaves_empty_cells(self):
        rec = gauss_record(2, 1, 1.0)
        rec.bound = None
        text = SuiteReport(suite="gauss", records=[rec]).to_csv()
        assert text.splitlines()[1].endswith(",,")

    def test_multi_suite_sections(self):
        other = CheckRecord(
            suite="h2norm",
            instance=(3, 1, 1),
            instance_names=("p", "i", "j"),
            measured_name="norm",
            measured=1.7,
            bound=6.0,
            passed=True,
        )
        merged = merge_reports(
            [sample_report(), SuiteReport(suite="h2norm", records=[other])]
        )
        text = merged.to_csv()
        assert "# suite: gauss" in text
        assert "# suite: h2norm" in text
        assert "p,i,j,norm,bound,margin" in text


class TestTextEmission:
    def test_summary_and_failures(self):
        report = sample_report()
        report.records.append(gauss_record(4, 1, 9.0, passed=False))
        text = report.to_text()
        assert "status=FAIL" in text
        assert "FAIL gauss[p=3, i=4, j=1]" in text

    def test_empty(self):
        assert "(no records)" in SuiteReport(suite="gauss", records=[]).to_text()


class TestMerge:
    def test_sorts_by_instance_key(self):
        a = SuiteReport(suite="gauss", records=[gauss_record(4, 1, 0.3)])
        b = SuiteReport(suite="gauss", records=[gauss_record(2, 1, 1.0)])
        merged = merge_reports([a, b])
        assert [r.instance for r in merged.records] == [(3, 2, 1), (3, 4, 1)]
        assert merged.suite == "gauss"

    def test_associative(self):
        parts = [
            SuiteReport(suite="gauss", records=[gauss_record(i, 1, 0.5)], seed=0)
            for i in (4, 2, 3)
        ]
        left = merge_reports([merge_reports(parts[:2]), parts[2]])
        right = merge_reports([parts[0], merge_reports(parts[1:])])
        assert left.records == right.records
        assert left.seed == right.seed == 0

    def test_seed_conflict_clears_seed(self):
        a = SuiteReport(suite="gauss", records=[], seed=0)
        b = SuiteReport(suite="gauss", records=[], seed=1)
        assert merge_reports([a, b]).seed is None

    def test_nothing_to_merge(self):
        with pytest.raises(DomainError):
            merge_reports([])


class TestFigures:
    def test_margin_chart(self, tmp_path):
        path = tmp_path / "margins.png"
        records = sample_report().records + [gauss_record(4, 1, 9.0, passed=False)]
        figures.render_margin_chart(records, str(path))
        assert path.read_bytes()[:8] == PNG_MAGIC

    def test_decay_figures(self, tmp_path):
        profile = decay_profile(Setting(SettingKind.GROUP_SCHATTEN, 3, 8.0), 1, 8)
        heat = tmp_path / "heat.png"
        figures.render_decay_heatmap(profile, str(heat))
        assert heat.read_bytes()[:8] == PNG_MAGIC
        curves = tmp_path / "curves.png"
        figures.render_decay_curves([profile], str(curves))
        assert curves.read_bytes()[:8] == PNG_MAGIC
