"""The vectorized engine must be indistinguishable from the exact lane."""

import random

import pytest

from sp4cert import bulk
from sp4cert.constructions import (
    build_lattice_move1,
    build_move1_char2,
    build_move1_charneq2,
    build_move2,
    corrupted_family,
    crosscheck_exact,
    verify_family,
)
from sp4cert.errors import InternalError, UnsupportedBackend
from sp4cert.localfield import Backend, FieldConfig, make_random_section

CFG3 = FieldConfig(p=3, backend=Backend.EQUAL_CHAR)
CFG2 = FieldConfig(p=2, backend=Backend.EQUAL_CHAR)
CFGP3 = FieldConfig(p=3, backend=Backend.MIXED_CHAR, precision=64)


def _comparable(entry: dict) -> dict:
    return {k: v for k, v in entry.items() if k != "matrix"}


class TestEngineAgreement:
    @pytest.mark.parametrize(
        "build, cfg, base",
        [
            (build_move1_charneq2, CFG3, (4, 1)),
            (build_move1_char2, CFG2, (8, 2)),
            (build_lattice_move1, CFG3, (2, 1)),
        ],
    )
    def test_exhaustive_reports_match(self, build, cfg, base):
        fam = build(cfg, *base)
        exact = verify_family(fam, mode="exhaustive", engine="exact")
        fast = verify_family(fam, mode="exhaustive", engine="bulk")
        assert exact.engine == "exact"
        assert fast.engine == "bulk"
        assert fast.tuples_checked == exact.tuples_checked
        assert fast.violation_count == exact.violation_count == 0
        assert fast.all_symplectic is exact.all_symplectic is True
        assert fast.all_in_lattice == exact.all_in_lattice
        assert fast.passed and exact.passed

    def test_lattice_membership_flag_survives_vectorization(self):
        fam = build_lattice_move1(CFG3, 2, 1)
        rep = verify_family(fam, mode="exhaustive", engine="bulk")
        assert rep.all_in_lattice is True

    def test_crosscheck_replays_through_the_scalar_path(self):
        # two fibers, 32 seeded tuples each
        fam = build_move1_charneq2(CFG3, 4, 1)
        rep = verify_family(fam, mode="exhaustive", engine="bulk", crosscheck=32)
        assert rep.crosschecked == 64
        rep = verify_family(fam, mode="exhaustive", engine="bulk", crosscheck=0)
        assert rep.crosschecked == 0

    def test_corrupted_family_violations_agree_entry_for_entry(self):
        bad = corrupted_family(build_move1_charneq2(CFG3, 4, 1))
        exact = verify_family(bad, mode="exhaustive", engine="exact", crosscheck=0)
        fast = verify_family(bad, mode="exhaustive", engine="bulk", crosscheck=0)
        assert exact.violation_count == fast.violation_count == 729
        assert len(exact.violations) == len(fast.violations) == 32
        for lhs, rhs in zip(exact.violations, fast.violations):
            assert _comparable(lhs) == _comparable(rhs)


class TestSampledBulk:
    def test_move2_sampled_is_clean(self):
        fam = build_move2(CFG3, 5, 3)
        rep = verify_family(
            fam, mode="sampled", samples=2_000, seed=3, engine="bulk"
        )
        assert rep.violation_count == 0
        assert rep.tuples_checked == 4_000
        assert rep.mode.startswith("sampled(seed=3")

    def test_strata_collection_matches_frozen_map(self):
        fam = build_lattice_move1(CFG3, 3, 1)
        rep = verify_family(
            fam,
            mode="sampled",
            samples=200,
            seed=3,
            engine="bulk",
            collect_strata=True,
        )
        assert rep.strata == {
            "0": [(3, 3)],
            "1": [(3, 2)],
            "2": [(3, 1)],
            "3": [(3, 0)],
            "exact": [(3, 0)],
        }


class TestEngineSelection:
    def test_auto_routes_large_vectorizable_work_to_bulk(self, monkeypatch):
        called = {}

        def marker(fam, mode, **kwargs):
            called["mode"] = mode
            raise InternalError("stop here")

        monkeypatch.setattr(bulk, "verify_family_bulk", marker)
        fam = build_move1_charneq2(CFG3, 5, 1)  # 3^12 tuples per fiber
        with pytest.raises(InternalError):
            verify_family(fam, mode="exhaustive")
        assert called["mode"] == "exhaustive"

    def test_auto_keeps_small_work_on_the_exact_lane(self, monkeypatch):
        def marker(fam, mode, **kwargs):
            raise AssertionError("bulk engine must not be selected")

        monkeypatch.setattr(bulk, "verify_family_bulk", marker)
        fam = build_move1_charneq2(CFG3, 4, 1)  # 729 tuples per fiber
        rep = verify_family(fam, mode="exhaustive")
        assert rep.engine == "exact"
        assert rep.passed


class TestUnsupportedConfigurations:
    def test_bulk_rejects_the_padic_backend(self):
        fam = build_move1_charneq2(CFGP3, 4, 1)
        with pytest.raises(UnsupportedBackend):
            verify_family(fam, mode="sampled", samples=10, engine="bulk")

    def test_bulk_rejects_noncanonical_sections(self):
        fam = build_move1_charneq2(CFG3, 4, 1, section=make_random_section(5))
        with pytest.raises(UnsupportedBackend):
            verify_family(fam, mode="sampled", samples=10, engine="bulk")


class TestCrosscheckGuard:
    def test_planted_disagreement_is_an_internal_error(self):
        fam = build_move1_charneq2(CFG3, 4, 1)
        seed = 9
        rng = random.Random(seed ^ 0xC0DE)
        size = fam.ring.size
        key = tuple(rng.randrange(size) for _ in range(3))
        verdicts = {("on", key): (99, 99)}
        with pytest.raises(InternalError):
            crosscheck_exact(fam, verdicts, 1, seed)

    def test_consistent_verdicts_pass_quietly(self):
        fam = build_move1_charneq2(CFG3, 4, 1)
        assert crosscheck_exact(fam, {}, 4, seed=9) == 8
