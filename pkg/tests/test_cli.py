"""Command-line flows: config plumbing, suite runs, artifact drops."""

import json
import math
import os
import subprocess
import sys

import pytest

from sp4cert.cli import RunConfig, _load_config, build_parser, main, run_suite
from sp4cert.reports import parse_report


def call(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestConfig:
    def test_init_prints_defaults(self, capsys):
        code, out, _ = call(capsys, "init")
        assert code == 0
        assert json.loads(out) == RunConfig().to_json()

    def test_init_writes_file(self, tmp_path, capsys):
        path = tmp_path / "run.json"
        code, out, _ = call(capsys, "init", "--out", str(path))
        assert code == 0 and out == ""
        assert json.loads(path.read_text())["p"] == 3

    def test_nonprime_p_is_a_config_error(self, capsys):
        code, _, err = call(capsys, "verify-gauss", "--p", "4")
        assert code == 2
        assert "config error" in err

    def test_inverted_ranges_rejected(self, capsys):
        code, _, err = call(capsys, "verify-gauss", "--imax", "1", "--jmax", "3")
        assert code == 2

    def test_config_file_and_flag_precedence(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"imax": 5, "seed": 7}))
        args = build_parser().parse_args(
            ["verify-gauss", "--config", str(path), "--imax", "8"]
        )
        config = _load_config(args)
        assert config.imax == 8
        assert config.seed == 7

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"imaxx": 5}))
        code, _, err = call(capsys, "verify-gauss", "--config", str(path))
        assert code == 2
        assert "imaxx" in err

    def test_bad_format_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify-gauss", "--format", "yaml"])
        assert exc.value.code == 2


class TestGaussSuite:
    def test_small_sweep_passes(self, capsys):
        code, out, _ = call(
            capsys, "verify-gauss", "--imax", "3", "--jmax", "1", "--format", "json"
        )
        assert code == 0
        report = parse_report(out)
        assert report.passed and report.suite == "gauss"
        assert [r.instance for r in report.records] == [(3, 1, 1), (3, 2, 1), (3, 3, 1)]

    def test_deterministic_bytes(self):
        config = RunConfig(imax=3, jmax=1).validate()
        a = run_suite(config, "gauss").to_json(include_timing=False)
        b = run_suite(config, "gauss").to_json(include_timing=False)
        assert a == b

    def test_corrupt_offset_fails_the_run(self, capsys):
        code, out, _ = call(
            capsys,
            "verify-gauss",
            "--imax", "4", "--jmax", "1",
            "--corrupt",
            "--format", "json",
        )
        assert code == 1
        report = parse_report(out)
        assert not report.passed
        assert any(r.measured > r.bound for r in report.records if not r.passed)

    def test_csv_file_with_figure_alongside(self, tmp_path, capsys):
        out = tmp_path / "gauss.csv"
        code, _, _ = call(
            capsys,
            "verify-gauss",
            "--imax", "2", "--jmax", "1",
            "--format", "csv",
            "--out", str(out),
        )
        assert code == 0
        assert out.read_text().splitlines()[0] == "p,i,j,max_abs,bound,margin"
        assert (tmp_path / "gauss.png").exists()


class TestCosetSuite:
    def test_small_exhaustive_run(self, capsys):
        code, out, _ = call(
            capsys, "verify-cosets", "--imax", "1", "--jmax", "1", "--format", "json"
        )
        assert code == 0
        report = parse_report(out)
        assert report.passed
        (rec,) = report.records
        assert rec.instance == ("LatticeMove1", 3, 1, 0)
        assert rec.detail["mode"] == "exhaustive"
        assert rec.detail["all_in_lattice"] is True

    def test_budget_forces_sampling(self, capsys):
        code, out, _ = call(
            capsys,
            "verify-cosets",
            "--imax", "1", "--jmax", "1",
            "--budget", "100",
            "--samples", "40",
            "--format", "json",
        )
        assert code == 0
        (rec,) = parse_report(out).records
        assert rec.detail["mode"].startswith("sampled(seed=0")

    def test_corrupted_fixture_reports_counterexample(self, capsys):
        code, out, _ = call(
            capsys,
            "verify-cosets",
            "--imax", "1", "--jmax", "1",
            "--corrupt",
            "--format", "json",
        )
        assert code == 1
        (rec,) = parse_report(out).records
        assert rec.measured > 0
        witness = rec.detail["violations"][0]
        assert witness["matrix"]
        assert witness["computed"] != witness["expected"]


class TestNormSuites:
    def test_h2_small_range(self, capsys):
        code, out, _ = call(
            capsys, "verify-h2", "--imax", "2", "--jmax", "2", "--format", "json"
        )
        assert code == 0
        report = parse_report(out)
        assert [r.instance for r in report.records] == [(3, 1, 1), (3, 2, 1), (3, 2, 2)]
        assert all(r.measured <= r.bound + 1e-6 for r in report.records)

    def test_lp_randomized_block(self, capsys):
        code, out, _ = call(
            capsys, "verify-lp", "--samples", "6", "--format", "json"
        )
        assert code == 0
        report = parse_report(out)
        assert len(report.records) == 6
        assert {r.instance[0] for r in report.records} == {"box", "pair11", "pair21"}


class TestDecaySuite:
    def test_profiles_with_artifact_directory(self, tmp_path, capsys):
        out = tmp_path / "profiles"
        code, _, _ = call(
            capsys,
            "decay-profile",
            "--imax", "8",
            "--format", "json",
            "--out", str(out),
        )
        assert code == 0
        report = parse_report((out / "report.json").read_text())
        assert len(report.records) == 12
        assert report.passed
        # every profile drops a table, a JSON document, and a heatmap
        stem = "decay_group-schatten_pinf"
        for ext in (".csv", ".json", ".png"):
            assert (out / (stem + ext)).exists()
        table = (out / (stem + ".csv")).read_text().splitlines()
        assert table[0] == "i,j,phi"
        assert (out / "decay_lattice-lp_curves.png").exists()
        assert (out / "report.png").exists()

    def test_slopes_follow_the_exponent(self):
        config = RunConfig(imax=6).validate()
        report = run_suite(config, "decay")
        slopes = {
            rec.instance: rec.detail["n"]
            for rec in report.records
            if rec.instance[0] == "lattice-lp"
        }
        assert slopes == {
            ("lattice-lp", "4.5"): 5,
            ("lattice-lp", "5.0"): 3,
            ("lattice-lp", "8.0"): 1,
            ("lattice-lp", "inf"): 1,
        }

    def test_group_wall_points_are_recorded(self):
        config = RunConfig(imax=5).validate()
        report = run_suite(config, "decay")
        rec = next(
            r
            for r in report.records
            if r.instance == ("group-schatten", "inf")
        )
        assert [0, 0] in rec.detail["skipped"]


class TestEverything:
    def test_merged_run(self, capsys):
        code, out, _ = call(
            capsys,
            "all",
            "--imax", "1", "--jmax", "1",
            "--samples", "3",
            "--format", "json",
        )
        assert code == 0
        report = parse_report(out)
        assert report.suite == "all"
        assert {r.suite for r in report.records} == {
            "cosets", "gauss", "h2norm", "lp", "decay",
        }
        suites = [r.suite for r in report.records]
        assert suites == sorted(suites)

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "sp4cert.cli", "init"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["backend"] == "equal-char"
