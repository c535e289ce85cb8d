"""Report model shared by the command-line suites.

A report is a flat list of check records (suite id, instance key,
measured value, bound, margin, pass flag, detail payload) plus a global
pass flag, an environment stamp, and timing.  Emission formats: a
schema-versioned JSON document that parses back losslessly, CSV sweep
tables with per-suite column sets, and a plain-text summary table.
Merging is associative and sorts by instance key, so partial reports
can land in any order.
"""

import csv
import io
import json
import platform
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

SCHEMA = "sp4cert-report/1"

Instance = tuple


def environment_stamp() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": sys.platform,
    }


@dataclass
class CheckRecord:
    """One certified instance: what was measured against which bound."""

    suite: str
    instance: Instance
    instance_names: tuple[str, ...]
    measured_name: str
    measured: float
    bound: float | None
    passed: bool
    detail: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.instance) != len(self.instance_names):
            raise DomainError("instance key and its names disagree in length")
        self.instance = tuple(self.instance)
        self.instance_names = tuple(self.instance_names)
        # keep the payload JSON-shaped so round trips are identities
        self.detail = json.loads(json.dumps(self.detail))

    @property
    def margin(self) -> float | None:
        if self.bound is None:
            return None
        return self.bound - self.measured

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "instance": dict(zip(self.instance_names, self.instance)),
            "measured": {self.measured_name: self.measured},
            "bound": self.bound,
            "margin": self.margin,
            "passed": self.passed,
            "detail": self.detail,
        }

    @staticmethod
    def from_json(payload: dict) -> "CheckRecord":
        inst = payload["instance"]
        ((mname, mval),) = payload["measured"].items()
        return CheckRecord(
            suite=payload["suite"],
            instance=tuple(inst.values()),
            instance_names=tuple(inst.keys()),
            measured_name=mname,
            measured=mval,
            bound=payload["bound"],
            passed=payload["passed"],
            detail=payload.get("detail", {}),
        )


@dataclass
class SuiteReport:
    suite: str
    records: list[CheckRecord]
    seed: int | None = None
    config: dict = field(default_factory=dict)
    environment: dict = field(default_factory=environment_stamp)
    elapsed_seconds: float = 0.0
    schema: str = SCHEMA

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_json_dict(self, *, include_timing: bool = True) -> dict:
        out = {
            "schema": self.schema,
            "suite": self.suite,
            "passed": self.passed,
            "seed": self.seed,
            "config": self.config,
            "environment": self.environment,
            "records": [r.to_json() for r in self.records],
        }
        if include_timing:
            out["elapsed_seconds"] = self.elapsed_seconds
        return out

    def to_json(self, *, include_timing: bool = True) -> str:
        return json.dumps(self.to_json_dict(include_timing=include_timing), indent=2)

    def to_csv(self) -> str:
        # one table per suite present; a single-suite report is a bare
        # header plus rows, exactly the sweep-table shape
        if not self.records:
            return f"# schema: {self.schema}\n"
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        suites = []
        for rec in self.records:
            if rec.suite not in suites:
                suites.append(rec.suite)
        for pos, suite in enumerate(suites):
            rows = [r for r in self.records if r.suite == suite]
            if len(suites) > 1:
                if pos:
                    out.write("\n")
                out.write(f"# suite: {suite}\n")
            head = rows[0]
            writer.writerow(
                list(head.instance_names) + [head.measured_name, "bound", "margin"]
            )
            for rec in rows:
                writer.writerow(
                    list(rec.instance)
                    + [
                        _csv_cell(rec.measured),
                        _csv_cell(rec.bound),
                        _csv_cell(rec.margin),
                    ]
                )
        return out.getvalue()

    def to_text(self) -> str:
        lines = [
            f"report {self.schema}  suite={self.suite}  "
            f"status={'pass' if self.passed else 'FAIL'}"
        ]
        bysuite: dict[str, list[CheckRecord]] = {}
        for rec in self.records:
            bysuite.setdefault(rec.suite, []).append(rec)
        lines.append(f"{'suite':<10} {'records':>8} {'failed':>8} {'worst margin':>14}")
        for suite, rows in bysuite.items():
            failed = sum(not r.passed for r in rows)
            margins = [r.margin for r in rows if r.margin is not None]
            worst = f"{min(margins):.6g}" if margins else "-"
            lines.append(f"{suite:<10} {len(rows):>8} {failed:>8} {worst:>14}")
        if not self.records:
            lines.append("(no records)")
        for rec in self.records:
            if not rec.passed:
                inst = ", ".join(
                    f"{k}={v}" for k, v in zip(rec.instance_names, rec.instance)
                )
                lines.append(
                    f"FAIL {rec.suite}[{inst}] {rec.measured_name}="
                    f"{rec.measured:.9g} bound={rec.bound}"
                )
        return "\n".join(lines) + "\n"


def _csv_cell(value: float | None) -> str:
    if value is None:
        return ""
    return repr(float(value))


def merge_reports(reports: list[SuiteReport], suite: str | None = None) -> SuiteReport:
    """Associative, order-stable merge: records sorted by instance key."""
    if not reports:
        raise DomainError("nothing to merge")
    records = [r for rep in reports for r in rep.records]
    records.sort(key=lambda r: (r.suite, r.instance))
    seeds = {rep.seed for rep in reports}
    config: dict = {}
    for rep in reports:
        config.update(rep.config)
    if suite is None:
        names = {rep.suite for rep in reports}
        suite = names.pop() if len(names) == 1 else "all"
    return SuiteReport(
        suite=suite,
        records=records,
        seed=seeds.pop() if len(seeds) == 1 else None,
        config=config,
        environment=reports[0].environment,
        elapsed_seconds=round(sum(rep.elapsed_seconds for rep in reports), 6),
    )


def emit_report(report: SuiteReport, fmt: str = "json", path: str | None = None) -> str:
    """Render the report; when a path is given, also write it there."""
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        text = report.to_csv()
    elif fmt == "text":
        text = report.to_text()
    else:
        raise DomainError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def parse_report(text: str) -> SuiteReport:
    """Inverse of the JSON emission, timing and stamp included."""
    payload = json.loads(text)
    if payload.get("schema") != SCHEMA:
        raise DomainError(f"unknown report schema {payload.get('schema')!r}")
    return SuiteReport(
        suite=payload["suite"],
        records=[CheckRecord.from_json(r) for r in payload["records"]],
        seed=payload["seed"],
        config=payload["config"],
        environment=payload["environment"],
        elapsed_seconds=payload.get("elapsed_seconds", 0.0),
        schema=payload["schema"],
    )
