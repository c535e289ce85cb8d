"""Finite group algebras: laws, character sweeps, and frozen norm data.

Numeric expectations below were produced by independent oracles
(explicit DFT loops, Plancherel sums, a dense per-character operator
rebuild) and frozen; the suite holds the production engines against
them and against each other.
"""

import math

import numpy as np
import pytest

from sp4cert.errors import (
    BudgetError,
    DomainError,
    UnsupportedBackend,
    WrongCharacteristic,
)
from sp4cert.finitegroups import (
    AlgebraElement,
    build_h1_pair,
    build_h1_sparse_pair,
    build_h2_pair,
    build_heisenberg_box,
    character_values,
    check_fg_integral,
    check_gauss_bound,
    check_h1_sparse,
    check_h2_bound,
    check_lp_limit,
    cstar_norm,
    nc_lp_norm,
    random_element,
    support_classes,
)
from sp4cert.localfield import Backend, FieldConfig
from sp4cert.symplectic import cartan_invariants

CFG3 = FieldConfig(3, Backend.EQUAL_CHAR)
CFG5 = FieldConfig(5, Backend.EQUAL_CHAR)
CFGP3 = FieldConfig(3, Backend.MIXED_CHAR)


def heis27():
    return build_heisenberg_box(CFG3, 0, 1)


class TestGroupModel:
    def test_index_digit_roundtrip(self):
        group, _, _ = build_h1_pair(CFG3, 3, 1)
        for idx in (0, 1, 500, group.size - 1):
            assert group.index(group.digits(idx)) == idx

    def test_abelian_law_matches_matrices(self):
        group, _, _ = build_h1_pair(CFG3, 2, 1)
        rng = np.random.default_rng(5)
        for g, h in rng.integers(0, group.size, size=(25, 2)):
            prod = group.mul(int(g), int(h))
            assert group.matrix(prod) == group.matrix(int(g)) * group.matrix(int(h))

    def test_heisenberg_law_matches_matrices(self):
        group, _, _ = build_h2_pair(CFG3, 2, 1)
        rng = np.random.default_rng(6)
        for g, h in rng.integers(0, group.size, size=(25, 2)):
            prod = group.mul(int(g), int(h))
            assert group.matrix(prod) == group.matrix(int(g)) * group.matrix(int(h))

    def test_inverse_and_identity(self):
        group, _, _ = build_h2_pair(CFG3, 1, 1)
        rng = np.random.default_rng(7)
        for g in rng.integers(1, group.size, size=12):
            assert group.mul(int(g), group.inv(int(g))) == group.identity

    def test_noncommutative_witness_in_corner_slot(self):
        # generators with only r resp. s set fail to commute, and the
        # discrepancy shows up in the (1,4) matrix entry
        group, _, _ = build_h2_pair(CFG3, 1, 1)
        g = group.index([1, 0, 0, 0, 0, 0, 0])
        h = group.index([0, 0, 1, 0, 0, 0, 0])
        gh, hg = group.mul(g, h), group.mul(h, g)
        assert gh != hg
        mg, mh = group.matrix(gh), group.matrix(hg)
        assert mg.rows[0][3] != mh.rows[0][3]

    def test_matrixless_box_refuses_matrix(self):
        with pytest.raises(UnsupportedBackend):
            heis27().matrix(1)

    def test_wrong_characteristic_and_backend(self):
        with pytest.raises(WrongCharacteristic):
            build_h1_pair(FieldConfig(2, Backend.EQUAL_CHAR), 2, 1)
        with pytest.raises(UnsupportedBackend):
            build_h1_pair(CFGP3, 2, 1)
        with pytest.raises(DomainError):
            build_h2_pair(CFG3, 1, 0)

    def test_h2_budget(self):
        with pytest.raises(BudgetError):
            build_h2_pair(CFG3, 4, 4)


class TestH1Pair:
    def test_cardinality(self):
        group, _, _ = build_h1_pair(CFG3, 3, 1)
        assert group.size == 3 ** (2 * 2 + 3)

    def test_supports_classify_to_the_two_cosets(self):
        _, first, second = build_h1_pair(CFG3, 3, 1)
        assert support_classes(first) == {(3, 1)}
        assert support_classes(second) == {(3, 2)}

    def test_masses_are_normalized(self):
        _, first, second = build_h1_pair(CFG3, 4, 2)
        assert abs(first.total() - 1.0) < 1e-12
        assert abs(second.total() - 1.0) < 1e-12
        assert first.support_size() == 27

    def test_degenerate_floor_drops_pair_offset(self):
        # at i = j the shallower offset exponent leaves the digit box
        group, first, second = build_h1_pair(CFG3, 2, 2)
        assert first.support_size() == second.support_size() == 3
        rec = check_gauss_bound(CFG3, 2, 2)
        assert rec.bound == 2.0
        assert rec.passed and rec.cstar_consistent


GAUSS_MAX = {
    # (p, i, j) -> frozen exhaustive character maximum
    (3, 1, 1): 1.0,
    (3, 2, 1): 1.0,
    (3, 3, 1): 0.5773502691896258,
    (3, 4, 1): 0.3333333333333333,
    (3, 5, 1): 0.1924500897298753,
    (5, 1, 1): 0.8506508083520400,
    (5, 2, 1): 0.8506508083520400,
    (5, 3, 1): 0.3804226065180614,
    (5, 4, 1): 0.1701301616704080,
}


class TestGaussBound:
    @pytest.mark.parametrize("p,i,j", sorted(GAUSS_MAX))
    def test_frozen_maxima_and_dual_route(self, p, i, j):
        cfg = CFG3 if p == 3 else CFG5
        rec = check_gauss_bound(cfg, i, j)
        assert rec.passed
        assert rec.cstar_consistent
        assert rec.max_abs == pytest.approx(GAUSS_MAX[(p, i, j)], abs=1e-9)
        assert rec.bound == pytest.approx(2.0 * p ** (-(i - j) / 2.0))
        assert rec.group_size == p ** (2 * (i - j) + 3)

    def test_broken_offset_violates(self):
        rec = check_gauss_bound(CFG3, 4, 1, corrupt_offset=True)
        assert not rec.passed
        assert rec.max_abs == pytest.approx(1.1706281947614, abs=1e-9)
        assert rec.max_abs > rec.bound


class TestH2Pair:
    def test_supports_classify(self):
        _, first, second = build_h2_pair(CFG3, 1, 1)
        assert support_classes(first) == {(1, 1)}
        assert support_classes(second) == {(2, 0)}

    def test_odd_parity_support_shift(self):
        # at (2,1) no 2x2 minor reaches exponent -(i+j): the measured
        # classes sit one band lower than the even-parity pattern
        _, first, second = build_h2_pair(CFG3, 2, 1)
        assert support_classes(first) == {(2, 0)}
        assert support_classes(second) == {(3, 0)}

    def test_closure_measurements(self):
        group, _, _ = build_h2_pair(CFG3, 1, 1)
        assert group.cardinality == 3**7 and group.box_saturated
        group, _, _ = build_h2_pair(CFG3, 2, 1)
        assert group.cardinality == 3**8 and group.box_saturated

    def test_norm_1_1(self):
        rec = check_h2_bound(CFG3, 1, 1)
        assert rec.passed
        assert rec.norm == pytest.approx(math.sqrt(3.0), abs=1e-9)
        assert rec.bound == pytest.approx(6.0)
        assert rec.measured_cardinality == 3**7
        assert rec.stated_cardinality == 3**6
        assert rec.relevant_characters == 9

    def test_norm_2_1(self):
        rec = check_h2_bound(CFG3, 2, 1)
        assert rec.passed
        assert rec.norm == pytest.approx(math.sqrt(3.0), abs=1e-9)
        assert rec.measured_cardinality == rec.stated_cardinality == 3**8

    def test_norm_2_2_hits_the_projector_floor(self):
        # nested s-boxes at i = j make the trivial-character block a
        # difference of averaging projectors, so the norm is exactly 1
        rec = check_h2_bound(CFG3, 2, 2)
        assert rec.passed
        assert rec.norm == pytest.approx(1.0, abs=1e-9)
        assert rec.bound == pytest.approx(2.0)
        assert rec.relevant_characters == 27

    def test_star_symmetry(self):
        _, first, second = build_h2_pair(CFG3, 1, 1)
        delta = first - second
        assert cstar_norm(delta) == pytest.approx(cstar_norm(delta.star()), abs=1e-9)

    def test_central_route_matches_dense(self):
        group, first, second = build_h2_pair(CFG3, 1, 1)
        delta = first - second
        assert cstar_norm(delta) == pytest.approx(
            cstar_norm(delta, engine="dense"), abs=1e-8
        )


class TestAbelianSweep:
    def test_character_values_match_explicit_dft(self):
        group, first, second = build_h1_pair(CFG3, 1, 1)
        delta = first - second
        values = np.sort(character_values(delta))
        omega = np.exp(2j * np.pi / 3)
        brute = []
        for chi in range(group.size):
            cd = group.digits(chi)
            acc = 0.0 + 0.0j
            for idx, v in delta.coeffs.items():
                e = sum(a * b for a, b in zip(group.digits(idx), cd))
                acc += v * omega**e
            brute.append(abs(acc))
        assert np.allclose(values, np.sort(brute), atol=1e-12)

    def test_abelian_vs_dense_route(self):
        group, first, second = build_h1_pair(CFG3, 2, 1)
        delta = first - second
        sweep = cstar_norm(delta)
        dense = cstar_norm(delta, engine="dense")
        assert sweep == pytest.approx(dense, abs=1e-8)

    def test_zero_element(self):
        group, _, _ = build_h1_pair(CFG3, 1, 1)
        zero = AlgebraElement(group, {})
        assert cstar_norm(zero) == 0.0
        assert nc_lp_norm(zero, group, 4.0) == 0.0


class TestLpNorms:
    def test_identity_point_mass(self):
        group = heis27()
        e = AlgebraElement.point(group, group.identity)
        for p_exp in (1.0, 2.0, 7.5, math.inf):
            assert nc_lp_norm(e, group, p_exp) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_average_has_norm_one(self):
        group, _, _ = build_h1_pair(CFG3, 1, 1)
        avg = AlgebraElement(
            group, {idx: 1.0 / group.size for idx in range(group.size)}
        )
        assert cstar_norm(avg) == pytest.approx(1.0, abs=1e-12)

    def test_plancherel_on_both_kinds(self):
        for group in (build_h1_pair(CFG3, 2, 1)[0], heis27()):
            for seed in range(6):
                f = random_element(group, seed)
                direct = math.sqrt(sum(abs(v) ** 2 for v in f.coeffs.values()))
                assert nc_lp_norm(f, group, 2.0) == pytest.approx(direct, abs=1e-9)

    def test_monotone_in_p(self):
        group = heis27()
        grid = [1.0, 1.5, 2.0, 4.0, 10.0, math.inf]
        for seed in range(8):
            f = random_element(group, 100 + seed)
            vals = [nc_lp_norm(f, group, p_exp) for p_exp in grid]
            for lo, hi in zip(vals, vals[1:]):
                assert lo <= hi + 1e-9

    def test_integral_bound_and_limit(self):
        group, _, _ = build_h1_pair(CFG3, 1, 1)
        for seed in range(6):
            f = random_element(group, 200 + seed)
            for p_exp in (1.0, 1.5, 2.0, 4.0, 10.0):
                assert check_fg_integral(f, group, p_exp).passed
            assert check_lp_limit(f, group).passed

    def test_limit_on_noncommutative_fixture(self):
        group = heis27()
        f = random_element(group, 11)
        rec = check_lp_limit(f, group)
        assert rec.passed
        assert rec.limit == pytest.approx(cstar_norm(f), abs=1e-12)

    def test_exponent_domain(self):
        group = heis27()
        f = random_element(group, 3)
        with pytest.raises(DomainError):
            nc_lp_norm(f, group, 0.5)
        with pytest.raises(DomainError):
            check_fg_integral(f, group, 0.25)

    def test_element_group_mismatch(self):
        f = random_element(heis27(), 1)
        other, _, _ = build_h1_pair(CFG3, 1, 1)
        with pytest.raises(DomainError):
            cstar_norm(f, other)


SPARSE_CASES = {
    # (i, j) -> (measured spectrum support, stated count, frozen max)
    (2, 1): (180, 9, 1.0),
    (3, 1): (1620, 81, 0.5773502691896258),
    (3, 2): (180, 9, 1.0),
}


class TestSparseVariant:
    @pytest.mark.parametrize("i,j", sorted(SPARSE_CASES))
    def test_norm_holds_support_reported(self, i, j):
        support, stated, max_abs = SPARSE_CASES[(i, j)]
        rec = check_h1_sparse(CFG3, i, j)
        assert rec.passed
        assert rec.max_abs == pytest.approx(max_abs, abs=1e-9)
        assert rec.spectrum_support == support
        assert rec.stated_support == stated

    def test_supports_classify(self):
        _, first, second = build_h1_sparse_pair(CFG3, 2, 1)
        assert support_classes(first) == {(2, 1)}
        assert support_classes(second) == {(2, 2)}

    def test_needs_strict_chamber(self):
        with pytest.raises(DomainError):
            build_h1_sparse_pair(CFG3, 2, 2)
