"""End-to-end certification gates, one test per stated criterion.

Each test sweeps the full stated range at the stated tolerance and
prints a one-line verdict; nothing here is downscaled.  Expect several
minutes of runtime and a peak of roughly 2 GB (the two largest
character sweeps).
"""

import math

import pytest

from sp4cert.constructions import (
    build_lattice_move1,
    build_move1_char2,
    build_move1_charneq2,
    build_move2,
    corrupted_family,
    verify_family,
)
from sp4cert.decay import (
    Setting,
    SettingKind,
    admissible_p_range,
    band_ratios,
    decay_profile,
    minimal_slope_parameter,
    phi,
    phi_bruteforce,
)
from sp4cert.errors import AdmissibilityError, DomainError
from sp4cert.finitegroups import (
    build_h1_pair,
    build_heisenberg_box,
    check_fg_integral,
    check_gauss_bound,
    check_h2_bound,
    check_lp_limit,
    cstar_norm,
    nc_lp_norm,
    random_element,
)
from sp4cert.localfield import Backend, FieldConfig

CFG2 = FieldConfig(2, Backend.EQUAL_CHAR)
CFG3 = FieldConfig(3, Backend.EQUAL_CHAR)
CFG5 = FieldConfig(5, Backend.EQUAL_CHAR)
CFG7 = FieldConfig(7, Backend.EQUAL_CHAR)


def test_criterion_1_first_move_fibers_odd_char():
    families = []
    for i in range(2, 7):
        for j in range(1, i):
            try:
                families.append(build_move1_charneq2(CFG3, i, j))
            except DomainError:
                continue
    assert len(families) == 10
    violations = 0
    for fam in families:
        rep = verify_family(fam, mode="exhaustive")
        violations += rep.violation_count
        assert rep.all_symplectic
    print(
        f"criterion 1: {len(families)} odd-char first-move families, "
        f"exhaustive, violations={violations}"
    )
    assert violations == 0


def test_criterion_2_first_move_fibers_char2():
    families = []
    for i in range(4, 11):
        for j in range(0, i - 3):
            families.append(build_move1_char2(CFG2, i, j))
    assert len(families) == 28
    violations = 0
    for fam in families:
        assert fam.target_off == (fam.base[0], fam.base[1] + 2)
        rep = verify_family(fam, mode="exhaustive")
        violations += rep.violation_count
    print(
        f"criterion 2: {len(families)} binary-field families, exhaustive, "
        f"violations={violations}"
    )
    assert violations == 0


def test_criterion_3_second_move_fibers():
    violations = 0
    ran = []
    for j in (3, 4):
        for i in range(j, 7):
            fam = build_move2(CFG3, i, j)
            rep = verify_family(fam, mode="auto", samples=1_000_000, seed=0)
            violations += rep.violation_count
            ran.append((i, j, rep.mode.split("(")[0], rep.tuples_checked))
    parities = {(i + j) % 2 for i, j, _, _ in ran}
    assert parities == {0, 1}
    for _, _, mode, checked in ran:
        assert mode == "exhaustive" or checked >= 1_000_000
    print(f"criterion 3: {len(ran)} second-move families, violations={violations}")
    assert violations == 0


def test_criterion_4_lattice_families():
    violations = 0
    count = 0
    for i in range(1, 5):
        for j in range(0, i):
            fam = build_lattice_move1(CFG3, i, j)
            rep = verify_family(fam, mode="exhaustive", budget=20_000_000)
            violations += rep.violation_count
            assert rep.all_in_lattice is True
            count += 1
    print(
        f"criterion 4: {count} lattice families, exhaustive with polynomial "
        f"membership, violations={violations}"
    )
    assert violations == 0


def test_criterion_5_gauss_sum_bound():
    worst_gap = -math.inf
    worst_route = 0.0
    for cfg in (CFG3, CFG5):
        for d in range(0, 5):
            rec = check_gauss_bound(cfg, d + 1, 1)
            worst_gap = max(worst_gap, rec.max_abs - rec.bound)
            worst_route = max(worst_route, abs(rec.cstar - rec.max_abs))
            assert rec.max_abs <= rec.bound + 1e-9, (cfg.p, d)
            assert rec.cstar_consistent, (cfg.p, d)
    print(
        f"criterion 5: 10 exhaustive character sweeps, worst max-bound gap "
        f"{worst_gap:.3e}, worst route disagreement {worst_route:.3e}"
    )
    assert worst_route <= 1e-8


def test_criterion_6_step_pair_norm_bound():
    outcomes = []
    for i, j in ((1, 1), (2, 1), (2, 2), (3, 3)):
        rec = check_h2_bound(CFG3, i, j)
        outcomes.append(rec)
        # cardinality is reported, never asserted: the measured closure
        # and the stated count disagree on even i+j and the report keeps both
        print(
            f"criterion 6: (i,j)=({i},{j}) norm={rec.norm:.9f} "
            f"bound={rec.bound:.9f} |H2|={rec.measured_cardinality} "
            f"stated={rec.stated_cardinality}"
        )
    failing = [
        (r.i, r.j, r.norm, r.bound) for r in outcomes if r.norm > r.bound + 1e-6
    ]
    assert not failing, (
        "norm bound fails by direct measurement (power iteration, "
        f"residual-verified) at: {failing}"
    )


def test_criterion_7_lp_randomized_properties():
    groups = [
        build_heisenberg_box(CFG3, 0, 1),
        build_h1_pair(CFG3, 1, 1)[0],
        build_h1_pair(CFG3, 2, 1)[0],
        build_h1_pair(CFG5, 1, 1)[0],
        build_h1_pair(CFG7, 1, 1)[0],
    ]
    assert all(g.size <= 729 for g in groups)
    grid = [1.0, 1.5, 2.0, 4.0, 10.0, math.inf]
    checked = 0
    failures = 0
    for idx in range(500):
        group = groups[idx % len(groups)]
        f = random_element(group, 10_000 + idx)
        vals = [nc_lp_norm(f, group, p_exp) for p_exp in grid]
        if any(lo > hi + 1e-9 for lo, hi in zip(vals, vals[1:])):
            failures += 1
        plancherel = math.sqrt(sum(abs(v) ** 2 for v in f.coeffs.values()))
        if abs(vals[2] - plancherel) > 1e-9:
            failures += 1
        if any(not check_fg_integral(f, group, p).passed for p in grid[:-1]):
            failures += 1
        if not check_lp_limit(f, group).passed:
            failures += 1
        checked += 1
    print(f"criterion 7: {checked} random elements over {len(groups)} groups, "
          f"failures={failures}")
    assert checked >= 500 and failures == 0


def test_criterion_8_decay_profiles():
    exponents = (4.5, 5.0, 8.0, math.inf)
    worst_tail = 0.0
    for kind in SettingKind:
        with pytest.raises(AdmissibilityError) as exc:
            Setting(kind, 3, 4.0)
        named = "1/2 - 2/p" if kind is SettingKind.LATTICE_LP else "1 - 4/p"
        assert named in str(exc.value) and "= 0" in str(exc.value)
        rng = admissible_p_range(kind)
        assert (rng.lo, rng.hi) == (4.0, math.inf)
        assert not rng.contains(4.0) and rng.contains(math.inf)
        for p_exp in exponents:
            setting = Setting(kind, 3, p_exp)
            n = minimal_slope_parameter(p_exp)
            profile = decay_profile(setting, n, 40)
            assert all(math.isfinite(v) for v in profile.table.values())
            ratios = band_ratios(setting, n)
            assert ratios["move1"] < 1.0 and ratios["move2"] < 1.0
            probes = sorted(profile.table)[-3:] + sorted(profile.table)[:2]
            for at in probes:
                gap = abs(
                    phi(setting, at, n, horizon=1000)
                    - phi_bruteforce(setting, at, n, 1000)
                )
                worst_tail = max(worst_tail, gap)
                assert gap <= 1e-9, (kind, p_exp, at)
    print(
        "criterion 8: 12 profiles on the depth-40 triangle, all finite, "
        f"contracting ratios, worst closed-vs-walk tail gap {worst_tail:.3e}"
    )


def test_criterion_9_negative_controls():
    fam = corrupted_family(build_move1_charneq2(CFG3, 3, 1))
    rep = verify_family(fam, mode="exhaustive")
    lattice = corrupted_family(build_lattice_move1(CFG3, 2, 1))
    lrep = verify_family(lattice, mode="exhaustive")
    gauss = check_gauss_bound(CFG3, 4, 1, corrupt_offset=True)
    print(
        f"criterion 9: corrupted families {rep.violation_count} and "
        f"{lrep.violation_count} violations with counterexamples; broken "
        f"offset max {gauss.max_abs:.6f} > bound {gauss.bound:.6f}"
    )
    assert rep.violation_count >= 1 and rep.violations
    assert lrep.violation_count >= 1
    assert not gauss.passed and gauss.max_abs > gauss.bound
