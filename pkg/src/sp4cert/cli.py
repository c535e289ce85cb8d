"""Command-line surface: run verification suites and emit reports.

One flat config document drives everything; `init` prints it with its
defaults filled in, flags override single fields.  Suites reuse the
library checks unchanged and aggregate their records into a report
(JSON, CSV, or text); with an output path the delimited report gets
rendered figures dropped alongside it.

Exit codes: 0 every check passed, 1 at least one violation, 2 the
configuration or usage was invalid.
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass

from . import figures
from .constructions import (
    MoveFamily,
    build_lattice_move1,
    build_move1_char2,
    build_move1_charneq2,
    build_move2,
    corrupted_family,
    verify_family,
)
from .decay import SettingKind, Setting, decay_profile, minimal_slope_parameter, phi, phi_bruteforce
from .errors import BudgetError, DomainError, Sp4CertError, WrongCharacteristic
from .finitegroups import (
    build_h1_pair,
    build_heisenberg_box,
    check_fg_integral,
    check_gauss_bound,
    check_h2_bound,
    check_lp_limit,
    nc_lp_norm,
    random_element,
)
from .localfield import Backend, FieldConfig
from .reports import CheckRecord, SuiteReport, emit_report, merge_reports

_BACKENDS = {b.value: b for b in Backend}
_FORMATS = ("json", "csv", "text")
_DECAY_EXPONENTS = (4.5, 5.0, 8.0, math.inf)


@dataclass
class RunConfig:
    """Flat run configuration; `init` prints exactly these fields."""

    p: int = 3
    backend: str = Backend.EQUAL_CHAR.value
    precision: int = 128
    imax: int = 6
    jmax: int = 4
    budget: int = 10_000_000
    samples: int | None = None
    seed: int = 0
    tolerance: float = 1e-9
    out: str | None = None
    format: str = "text"
    corrupt: bool = False

    def validate(self) -> "RunConfig":
        if self.backend not in _BACKENDS:
            raise DomainError(f"unknown backend {self.backend!r}")
        if self.format not in _FORMATS:
            raise DomainError(f"unknown format {self.format!r}")
        if self.imax < 0 or self.jmax < 0:
            raise DomainError("imax and jmax must be nonnegative")
        if self.imax < self.jmax:
            raise DomainError("imax must be >= jmax")
        if self.budget < 1 or (self.samples is not None and self.samples < 1):
            raise DomainError("budget and samples must be positive")
        if self.samples is not None and self.seed is None:
            raise DomainError("sampled modes need an explicit seed")
        if self.tolerance <= 0:
            raise DomainError("tolerance must be positive")
        self.field_config()
        return self

    def field_config(self) -> FieldConfig:
        return FieldConfig(self.p, _BACKENDS[self.backend], self.precision)

    def to_json(self) -> dict:
        return asdict(self)


# ----------------------------------------------------------------------
# suites


def _coset_families(config: RunConfig) -> list[MoveFamily]:
    cfg = config.field_config()
    fams: list[MoveFamily] = []
    for i in range(1, config.imax + 1):
        for j in range(0, i):
            if cfg.p == 2:
                try:
                    fams.append(build_move1_char2(cfg, i, j))
                except (DomainError, WrongCharacteristic):
                    continue
            else:
                try:
                    fams.append(build_move1_charneq2(cfg, i, j))
                except (DomainError, WrongCharacteristic):
                    pass
                try:
                    fams.append(build_lattice_move1(cfg, i, j))
                except (DomainError, WrongCharacteristic):
                    pass
    for j in range(1, config.jmax + 1):
        for i in range(j, config.imax + 1):
            try:
                fams.append(build_move2(cfg, i, j))
            except DomainError:
                continue
    return fams


def _suite_cosets(config: RunConfig, artifacts: list) -> list[CheckRecord]:
    records = []
    for fam in _coset_families(config):
        if config.corrupt:
            if fam.target_off is None:
                continue
            fam = corrupted_family(fam)
        rep = verify_family(
            fam,
            mode="auto",
            budget=config.budget,
            samples=config.samples or 1_000_000,
            seed=config.seed,
        )
        detail = json.loads(rep.to_json())
        # timing stays out of the record so equal runs emit equal bytes
        detail.pop("elapsed_seconds", None)
        detail["violations_truncated"] = len(rep.violations) > 10
        detail["violations"] = detail["violations"][:10]
        records.append(
            CheckRecord(
                suite="cosets",
                instance=(fam.kind.value, fam.cfg.p, fam.base[0], fam.base[1]),
                instance_names=("kind", "p", "i", "j"),
                measured_name="violations",
                measured=float(rep.violation_count),
                bound=0.0,
                passed=rep.passed,
                detail=detail,
            )
        )
    return records


def _suite_gauss(config: RunConfig, artifacts: list) -> list[CheckRecord]:
    cfg = config.field_config()
    records = []
    for j in range(1, config.jmax + 1):
        for i in range(j, config.imax + 1):
            if cfg.p ** (2 * (i - j) + 3) > config.budget:
                continue
            rec = check_gauss_bound(cfg, i, j, corrupt_offset=config.corrupt)
            records.append(
                CheckRecord(
                    suite="gauss",
                    instance=(rec.p, rec.i, rec.j),
                    instance_names=("p", "i", "j"),
                    measured_name="max_abs",
                    measured=rec.max_abs,
                    bound=rec.bound,
                    passed=rec.passed,
                    detail=rec.to_json(),
                )
            )
    return records


def _suite_h2(config: RunConfig, artifacts: list) -> list[CheckRecord]:
    cfg = config.field_config()
    records = []
    for j in range(1, config.jmax + 1):
        for i in range(j, config.imax + 1):
            try:
                rec = check_h2_bound(cfg, i, j, budget=config.budget)
            except BudgetError:
                continue
            records.append(
                CheckRecord(
                    suite="h2norm",
                    instance=(rec.p, rec.i, rec.j),
                    instance_names=("p", "i", "j"),
                    measured_name="norm",
                    measured=rec.norm,
                    bound=rec.bound,
                    passed=rec.passed,
                    detail=rec.to_json(),
                )
            )
    return records


def _lp_fixtures(config: RunConfig):
    cfg = config.field_config()
    groups = [("box", build_heisenberg_box(cfg, 0, 1))]
    for i, j in ((1, 1), (2, 1)):
        group, _, _ = build_h1_pair(cfg, i, j)
        if group.size <= 729:
            groups.append((f"pair{i}{j}", group))
    return groups


def _suite_lp(config: RunConfig, artifacts: list) -> list[CheckRecord]:
    count = config.samples if config.samples is not None else 500
    groups = _lp_fixtures(config)
    grid = [1.0, 1.5, 2.0, 4.0, 10.0, math.inf]
    records = []
    for idx in range(count):
        label, group = groups[idx % len(groups)]
        f = random_element(group, config.seed + idx)
        worst = 0.0
        vals = [nc_lp_norm(f, group, p_exp) for p_exp in grid]
        for lo, hi in zip(vals, vals[1:]):
            worst = max(worst, lo - hi)
        plancherel = math.sqrt(sum(abs(v) ** 2 for v in f.coeffs.values()))
        worst = max(worst, abs(vals[2] - plancherel))
        for p_exp in grid[:-1]:
            gap = check_fg_integral(f, group, p_exp)
            worst = max(worst, gap.lhs - gap.rhs)
        limit = check_lp_limit(f, group)
        if not limit.passed:
            worst = max(worst, config.tolerance * 2)
        records.append(
            CheckRecord(
                suite="lp",
                instance=(label, config.seed + idx),
                instance_names=("group", "seed"),
                measured_name="worst_gap",
                measured=worst,
                bound=config.tolerance,
                passed=worst <= config.tolerance,
                detail={"group_size": group.size, "support": f.support_size()},
            )
        )
    return records


def _decay_settings(config: RunConfig):
    for kind in SettingKind:
        char2 = config.p == 2 and kind is SettingKind.GROUP_SCHATTEN
        for p_exp in _DECAY_EXPONENTS:
            yield Setting(kind, config.p, p_exp, char2=char2)


def _suite_decay(config: RunConfig, artifacts: list) -> list[CheckRecord]:
    records = []
    for setting in _decay_settings(config):
        n = minimal_slope_parameter(setting.p_exp)
        profile = decay_profile(setting, n, config.imax)
        ratios = profile.ratios
        finite = all(math.isfinite(v) for v in profile.table.values())
        # closed-form tails against the literal thousand-step walk at
        # the deepest certified points
        probes = sorted(profile.table)[-3:]
        gap = 0.0
        for at in probes:
            closed = phi(setting, at, n, horizon=1000)
            gap = max(gap, abs(closed - phi_bruteforce(setting, at, n, 1000)))
        contracting = all(r < 1.0 for r in ratios.values())
        p_label = "inf" if setting.p_exp == math.inf else str(setting.p_exp)
        records.append(
            CheckRecord(
                suite="decay",
                instance=(setting.kind.value, p_label),
                instance_names=("setting", "p_exp"),
                measured_name="tail_gap",
                measured=gap,
                bound=config.tolerance,
                passed=gap <= config.tolerance and finite and contracting,
                detail={
                    "n": n,
                    "ratios": ratios,
                    "points": len(profile.table),
                    "skipped": [list(x) for x in profile.skipped],
                },
            )
        )
        artifacts.append(("decay", profile))
    return records


_SUITES = {
    "cosets": _suite_cosets,
    "gauss": _suite_gauss,
    "h2norm": _suite_h2,
    "lp": _suite_lp,
    "decay": _suite_decay,
}


def run_suite(config: RunConfig, suite: str, artifacts: list | None = None) -> SuiteReport:
    """Execute one suite (or `all`) over the configured ranges."""
    if artifacts is None:
        artifacts = []
    if suite == "all":
        parts = [run_suite(config, name, artifacts) for name in _SUITES]
        return merge_reports(parts, suite="all")
    if suite not in _SUITES:
        raise DomainError(f"unknown suite {suite!r}")
    start = time.perf_counter()
    records = _SUITES[suite](config, artifacts)
    return SuiteReport(
        suite=suite,
        records=records,
        seed=config.seed,
        config=config.to_json(),
        elapsed_seconds=round(time.perf_counter() - start, 6),
    )


# ----------------------------------------------------------------------
# artifact emission


_EXT = {"json": "json", "csv": "csv", "text": "txt"}


def _slug(value: str) -> str:
    return value.replace(".", "_").replace("/", "-")


def _write_artifacts(directory: str, artifacts: list) -> list[str]:
    written = []
    profiles = [p for kind, p in artifacts if kind == "decay"]
    for profile in profiles:
        p_exp = profile.setting.p_exp
        stem = (
            f"decay_{_slug(profile.setting.kind.value)}_"
            f"p{_slug('inf' if p_exp == math.inf else str(p_exp))}"
        )
        table = os.path.join(directory, stem + ".csv")
        with open(table, "w", encoding="utf-8") as fh:
            fh.write("i,j,phi\n")
            for (i, j), value in sorted(profile.table.items()):
                fh.write(f"{i},{j},{value!r}\n")
        written.append(table)
        doc = os.path.join(directory, stem + ".json")
        with open(doc, "w", encoding="utf-8") as fh:
            json.dump(profile.to_json(), fh, indent=2)
        written.append(doc)
        written.append(figures.render_decay_heatmap(profile, os.path.join(directory, stem + ".png")))
    kinds = {p.setting.kind for p in profiles}
    for kind in sorted(kinds, key=lambda k: k.value):
        group = [p for p in profiles if p.setting.kind is kind]
        path = os.path.join(directory, f"decay_{_slug(kind.value)}_curves.png")
        written.append(figures.render_decay_curves(group, path))
    return written


def _emit(config: RunConfig, report: SuiteReport, artifacts: list) -> None:
    text = emit_report(report, config.format)
    if config.out is None:
        sys.stdout.write(text)
        return
    out = config.out
    treat_as_dir = (
        report.suite in ("decay", "all")
        or os.path.isdir(out)
        or out.endswith(os.sep)
    )
    if treat_as_dir:
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "report." + _EXT[config.format])
    else:
        parent = os.path.dirname(out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        path = out
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    stem = os.path.splitext(path)[0]
    bounded = [r for r in report.records if r.bound is not None]
    if bounded:
        figures.render_margin_chart(bounded, stem + ".png")
    if treat_as_dir:
        _write_artifacts(out, artifacts)


# ----------------------------------------------------------------------
# argument surface


_COMMANDS = {
    "verify-cosets": "cosets",
    "verify-gauss": "gauss",
    "verify-h2": "h2norm",
    "verify-lp": "lp",
    "decay-profile": "decay",
    "all": "all",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sp4cert",
        description="certify coset moves, character bounds, and decay profiles",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("init", help="print the flat config with defaults filled in")
    for name in _COMMANDS:
        sub.add_parser(name, help=f"run the {_COMMANDS[name]} suite")
    for _, sp in sub.choices.items():
        sp.add_argument("--config", help="flat JSON config file (flags override it)")
        sp.add_argument("--p", type=int, help="residue characteristic")
        sp.add_argument("--backend", choices=sorted(_BACKENDS))
        sp.add_argument("--precision", type=int)
        sp.add_argument("--imax", type=int)
        sp.add_argument("--jmax", type=int)
        sp.add_argument("--budget", type=int, help="exhaustive tuple budget")
        sp.add_argument("--samples", type=int, help="sample count past the budget")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--tolerance", type=float)
        sp.add_argument("--out", help="report file, or directory for profile runs")
        sp.add_argument("--format", choices=_FORMATS)
        sp.add_argument(
            "--corrupt",
            action="store_true",
            default=None,
            help="run the negative-control fixtures instead",
        )
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    fields = RunConfig().to_json()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(fields)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        fields.update(loaded)
    for key in fields:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            fields[key] = value
    return RunConfig(**fields).validate()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
    except (Sp4CertError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "init":
        text = json.dumps(config.to_json(), indent=2) + "\n"
        if config.out:
            with open(config.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    artifacts: list = []
    try:
        report = run_suite(config, _COMMANDS[args.command], artifacts)
    except Sp4CertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(config, report, artifacts)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
