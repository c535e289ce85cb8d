"""Explicit two-sided matrix families and their coset fiber certification.

Each family is a pair of parameterized maps alpha, beta into the
symplectic group such that the double coset of alpha(.)beta(.) depends
on the parameters only through the residue w = y - (sum_i a_i x_i + b).
The certified dichotomy is:

* w = t^k  (the on-fiber)  -> cartan class ``target_on``;
* w = t^(k-1) (the off-fiber) -> cartan class ``target_off``.

Parameters range over the finite ring O/t^M.  For the two Move1 kinds
M = k, so the on-fiber condition collapses to y = ax + b; for Move2 and
the lattice kind M > k and the on-fiber offset is genuinely nonzero.
When k = 0 the off-fiber does not exist (``target_off`` is None) and
only the on-fiber statement is certified.

Verification is exhaustive when the tuple count fits the budget and
seeded-random otherwise; a vectorized engine handles the large sweeps
with the exact scalar path cross-checking seeded subsamples, so the two
routes are never collapsed into one.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .errors import BudgetError, DomainError, InternalError, WrongCharacteristic
from .localfield import (
    Backend,
    FieldConfig,
    ResidueElement,
    ResidueRing,
    Scalar,
    Section,
    canonical_section,
    format_scalar,
    integral_part,
)
from .symplectic import (
    Matrix4,
    cartan_invariants,
    in_polynomial_lattice,
    is_symplectic,
)


class MoveKind(str, Enum):
    MOVE1_CHAR_NEQ2 = "Move1CharNeq2"
    MOVE1_CHAR2 = "Move1Char2"
    MOVE2 = "Move2"
    LATTICE_MOVE1 = "LatticeMove1"


@dataclass(frozen=True)
class MoveFamily:
    """One instantiated family: base coset, fiber scale, matrix maps."""

    kind: MoveKind
    cfg: FieldConfig
    base: tuple[int, int]
    k: int
    n: int
    modulus: int
    target_on: tuple[int, int]
    target_off: tuple[int, int] | None
    lattice_required: bool
    section: Section = field(default=canonical_section, repr=False)
    claimed_k_floor: Fraction | None = None
    within_stated_range: bool = True
    # negative-control hook: when set, the off-fiber uses this offset
    # exponent instead of k - 1 while still claiming target_off
    off_offset_override: int | None = None

    @property
    def ring(self) -> ResidueRing:
        return ResidueRing(self.cfg, self.modulus)

    @property
    def tuple_count(self) -> int:
        # free parameters: a_1..a_n, b, x_1..x_n (y is fiber-determined)
        return self.ring.size ** (2 * self.n + 1)

    def alpha(self, a_vec: Sequence[ResidueElement], b: ResidueElement) -> Matrix4:
        return _ALPHA[self.kind](self, a_vec, b)

    def beta(self, x_vec: Sequence[ResidueElement], y: ResidueElement) -> Matrix4:
        return _BETA[self.kind](self, x_vec, y)

    def fiber_y(
        self,
        a_vec: Sequence[ResidueElement],
        b: ResidueElement,
        x_vec: Sequence[ResidueElement],
        offset_exp: int | None,
    ) -> ResidueElement:
        """y = sum a_i x_i + b + t^offset_exp (no offset when None)."""
        y = b
        for a, x in zip(a_vec, x_vec):
            y = y + a * x
        if offset_exp is not None:
            y = y + self.ring.monomial(offset_exp)
        return y

    def product(
        self,
        a_vec: Sequence[ResidueElement],
        b: ResidueElement,
        x_vec: Sequence[ResidueElement],
        y: ResidueElement,
    ) -> Matrix4:
        return self.alpha(a_vec, b) * self.beta(x_vec, y)

    def descriptor(self) -> dict:
        return {
            "kind": self.kind.value,
            "p": self.cfg.p,
            "backend": self.cfg.backend.value,
            "base": list(self.base),
            "k": self.k,
            "n": self.n,
            "modulus": self.modulus,
            "target_on": list(self.target_on),
            "target_off": list(self.target_off) if self.target_off else None,
            "lattice_required": self.lattice_required,
            "tuple_count": self.tuple_count,
            "claimed_k_floor": (
                str(self.claimed_k_floor) if self.claimed_k_floor is not None else None
            ),
            "k_floor_satisfied": (
                self.claimed_k_floor is None or self.k >= self.claimed_k_floor
            ),
            "within_stated_range": self.within_stated_range,
        }


# ----------------------------------------------------------------------
# matrix building blocks


def _diag(cfg: FieldConfig, exps: tuple[int, int, int, int]) -> Matrix4:
    return Matrix4.diagonal(cfg, [Scalar.monomial(cfg, e) for e in exps])


def _lower_unipotent(cfg: FieldConfig, u: Scalar, v: Scalar, w: Scalar) -> Matrix4:
    # symplectic for every (u, v, w): the (4,2) entry repeats u
    z = Scalar.zero(cfg)
    o = Scalar.one(cfg)
    return Matrix4(cfg, [[o, z, z, z], [z, o, z, z], [u, v, o, z], [w, u, z, o]])


def _upper_pair(cfg: FieldConfig, r: Scalar, s: Scalar, t: Scalar) -> Matrix4:
    # symplectic for every (r, s, t); (2,4) repeats s, (3,4) negates r
    z = Scalar.zero(cfg)
    o = Scalar.one(cfg)
    return Matrix4(cfg, [[o, r, s, t], [z, o, z, s], [z, z, o, z - r], [z, z, z, o]])


def _upper_abelian(cfg: FieldConfig, s: Scalar, t: Scalar, u: Scalar) -> Matrix4:
    z = Scalar.zero(cfg)
    o = Scalar.one(cfg)
    return Matrix4(cfg, [[o, z, s, t], [z, o, u, s], [z, z, o, z], [z, z, z, o]])


# ----------------------------------------------------------------------
# family builders


def build_move1_charneq2(
    cfg: FieldConfig, i: int, j: int, section: Section = canonical_section
) -> MoveFamily:
    """Single-parameter step (i,j) -> (i,j+1), residue characteristic odd.

    Fiber scale k = 2m - 2j - v0 with m = floor((i+j)/2) and v0 the
    valuation of 2; parameters range over O/t^k, so the on-fiber is the
    exact relation y = ax + b.
    """
    if cfg.backend is Backend.EQUAL_CHAR and cfg.p == 2:
        raise WrongCharacteristic(
            "this family divides by the residue of 2; use the char-2 variant"
        )
    v0 = cfg.two_valuation
    if not i >= j >= 0:
        raise DomainError(f"base pair must satisfy i >= j >= 0, got ({i}, {j})")
    if i < 1 or i - j < v0 + 1:
        raise DomainError(f"need i >= 1 and i - j >= {v0 + 1}")
    m = (i + j) // 2
    k = 2 * m - 2 * j - v0
    if k <= 1:
        raise DomainError(f"fiber scale k = {k} <= 1; gap i - j too small")
    return MoveFamily(
        kind=MoveKind.MOVE1_CHAR_NEQ2,
        cfg=cfg,
        base=(i, j),
        k=k,
        n=1,
        modulus=k,
        target_on=(i, j),
        target_off=(i, j + 1),
        lattice_required=False,
        section=section,
        claimed_k_floor=Fraction(i - j - v0 - 1),
    )


def _alpha_move1_charneq2(
    fam: MoveFamily, a_vec: Sequence[ResidueElement], b: ResidueElement
) -> Matrix4:
    cfg = fam.cfg
    i, j = fam.base
    m = (i + j) // 2
    sa = fam.section(a_vec[0])
    sb = fam.section(b)
    w = sa * sa - sb.scale(2)
    lower = _lower_unipotent(cfg, sa, Scalar.one(cfg), w)
    return _diag(cfg, (m, i + j - m, -(i + j - m), -m)) * lower


def _beta_move1_charneq2(
    fam: MoveFamily, x_vec: Sequence[ResidueElement], y: ResidueElement
) -> Matrix4:
    cfg = fam.cfg
    i, j = fam.base
    m = (i + j) // 2
    sx = fam.section(x_vec[0])
    sy = fam.section(y)
    w = sx * sx + sy.scale(2)
    lower = _lower_unipotent(cfg, sx, Scalar.zero(cfg), w)
    return lower * _diag(cfg, (j - m, j - m, m - j, m - j))


def build_move1_char2(
    cfg: FieldConfig, i: int, j: int, section: Section = canonical_section
) -> MoveFamily:
    """Double step (i,j) -> (i,j+2) for the binary series field.

    k = m - j - 1 with m = floor((i+j)/2); parameters in O/t^k.  The
    stated floor (i-j-2)/2 is recorded and checked, not assumed: for odd
    i+j the achieved k sits half a step below it.
    """
    if cfg.backend is not Backend.EQUAL_CHAR or cfg.p != 2:
        raise WrongCharacteristic("this variant is specific to the binary series field")
    if not i >= j >= 0:
        raise DomainError(f"base pair must satisfy i >= j >= 0, got ({i}, {j})")
    m = (i + j) // 2
    k = m - j - 1
    if i < j + 2 or k < 1:
        raise DomainError(f"need i >= j + 2 and k = {k} >= 1 (i - j >= 4)")
    return MoveFamily(
        kind=MoveKind.MOVE1_CHAR2,
        cfg=cfg,
        base=(i, j),
        k=k,
        n=1,
        modulus=k,
        target_on=(i, j),
        target_off=(i, j + 2),
        lattice_required=False,
        section=section,
        claimed_k_floor=Fraction(i - j - 2, 2),
    )


def _alpha_move1_char2(
    fam: MoveFamily, a_vec: Sequence[ResidueElement], b: ResidueElement
) -> Matrix4:
    cfg = fam.cfg
    i, j = fam.base
    m = (i + j) // 2
    sa = fam.section(a_vec[0])
    sb = fam.section(b)
    one = Scalar.one(cfg)
    unit = one + sa.shift(1)
    lower = _lower_unipotent(cfg, sb.shift(1), unit * unit, Scalar.zero(cfg))
    return _diag(cfg, (m, i + j - m, -(i + j - m), -m)) * lower


def _beta_move1_char2(
    fam: MoveFamily, x_vec: Sequence[ResidueElement], y: ResidueElement
) -> Matrix4:
    cfg = fam.cfg
    i, j = fam.base
    m = (i + j) // 2
    sx = fam.section(x_vec[0])
    sy = fam.section(y)
    u = sx + sy.shift(1)
    lower = _lower_unipotent(cfg, u, Scalar.zero(cfg), sx * sx)
    return lower * _diag(cfg, (j - m, j - m, m - j, m - j))


def build_move2(
    cfg: FieldConfig, i: int, j: int, section: Section = canonical_section
) -> MoveFamily:
    """Two-parameter diagonal step (i,j) -> (i+1,j-1), any characteristic.

    Parameters live in O/t^(m+1) with m = floor((i+j)/2) - 1; the fiber
    scale is k = 2m - i (j-2 or j-3 by parity), so unlike the Move1
    kinds the on-fiber offset t^k is a nonzero ring element.  k = 0
    still certifies the on-fiber; the off-fiber then does not exist.
    """
    if not i >= j >= 0:
        raise DomainError(f"base pair must satisfy i >= j >= 0, got ({i}, {j})")
    m = (i + j) // 2 - 1
    k = 2 * m - i
    if m < 0 or k < 0:
        raise DomainError(
            f"fiber scale k = 2*floor((i+j)/2) - 2 - i = {k} is negative; "
            f"the offset t^k leaves the parameter ring"
        )
    return MoveFamily(
        kind=MoveKind.MOVE2,
        cfg=cfg,
        base=(i, j),
        k=k,
        n=2,
        modulus=m + 1,
        target_on=(i, j),
        target_off=(i + 1, j - 1) if k >= 1 else None,
        lattice_required=False,
        section=section,
        claimed_k_floor=Fraction(j - 2),
        within_stated_range=j >= 3,
    )


def _alpha_move2(
    fam: MoveFamily, a_vec: Sequence[ResidueElement], b: ResidueElement
) -> Matrix4:
    cfg = fam.cfg
    i, j = fam.base
    m = fam.modulus - 1
    one = Scalar.one(cfg)
    a1 = (one + fam.section(a_vec[0]).shift(1)).shift(-m - 1)
    a2 = (one + fam.section(a_vec[1]).shift(1)).shift(-m - 1)
    bb = fam.section(b).shift(-2 * m)
    g = _upper_pair(cfg, Scalar.zero(cfg) - a1, a2, Scalar.zero(cfg) - bb)
    if (i + j) % 2 == 1:
        z = Scalar.zero(cfg)
        o = Scalar.one(cfg)
        shear = Matrix4(
            cfg,
            [[o, z, z, z], [z, o, Scalar.monomial(cfg, -1), z], [z, z, o, z], [z, z, z, o]],
        )
        g = shear * g
    return g


def _beta_move2(
    fam: MoveFamily, x_vec: Sequence[ResidueElement], y: ResidueElement
) -> Matrix4:
    cfg = fam.cfg
    m = fam.modulus - 1
    x1 = fam.section(x_vec[0]).shift(-m)
    x2 = fam.section(x_vec[1]).shift(-m)
    t = (x1 + x2).shift(-m - 1) + fam.section(y).shift(-2 * m)
    return _upper_pair(cfg, x2, x1, t)


def build_lattice_move1(
    cfg: FieldConfig, i: int, j: int, section: Section = canonical_section
) -> MoveFamily:
    """Step (i,j) -> (i,j+1) through matrices with polynomial entries.

    Parameters range over O/t^(i+1) and the fiber scale is k = i - j;
    every entry passes through the integral part, which pins it inside
    the polynomial subring whatever the section does.
    """
    if cfg.backend is not Backend.EQUAL_CHAR:
        raise WrongCharacteristic("polynomial entries need the series backend")
    if cfg.p == 2:
        raise WrongCharacteristic("this family divides by 2 and 4")
    if not i > j >= 0:
        raise DomainError(f"need i > j >= 0, got ({i}, {j})")
    return MoveFamily(
        kind=MoveKind.LATTICE_MOVE1,
        cfg=cfg,
        base=(i, j),
        k=i - j,
        n=1,
        modulus=i + 1,
        target_on=(i, j),
        target_off=(i, j + 1),
        lattice_required=True,
        section=section,
    )


def _alpha_lattice_move1(
    fam: MoveFamily, a_vec: Sequence[ResidueElement], b: ResidueElement
) -> Matrix4:
    cfg = fam.cfg
    i, _ = fam.base
    a = a_vec[0]
    s = integral_part(fam.section(a).shift(-i))
    t = integral_part(fam.section(a * a - b).shift(-i))
    return _upper_abelian(cfg, s, t, Scalar.monomial(cfg, -i))


def _beta_lattice_move1(
    fam: MoveFamily, x_vec: Sequence[ResidueElement], y: ResidueElement
) -> Matrix4:
    cfg = fam.cfg
    i, _ = fam.base
    x = x_vec[0]
    half = x.halve()
    s = integral_part(fam.section(half).shift(-i))
    t = integral_part(fam.section(half * half + y).shift(-i))
    return _upper_abelian(cfg, s, t, Scalar.zero(cfg))


_ALPHA: dict[MoveKind, Callable] = {
    MoveKind.MOVE1_CHAR_NEQ2: _alpha_move1_charneq2,
    MoveKind.MOVE1_CHAR2: _alpha_move1_char2,
    MoveKind.MOVE2: _alpha_move2,
    MoveKind.LATTICE_MOVE1: _alpha_lattice_move1,
}

_BETA: dict[MoveKind, Callable] = {
    MoveKind.MOVE1_CHAR_NEQ2: _beta_move1_charneq2,
    MoveKind.MOVE1_CHAR2: _beta_move1_char2,
    MoveKind.MOVE2: _beta_move2,
    MoveKind.LATTICE_MOVE1: _beta_lattice_move1,
}


def corrupted_family(fam: MoveFamily) -> MoveFamily:
    """Negative control: off-fiber offset replaced by t^k, targets kept.

    The corrupted off-fiber coincides with the on-fiber, so the off
    target can no longer be reached and the verifier must report it.
    """
    if fam.target_off is None:
        raise DomainError("family has no off-fiber to corrupt")
    return MoveFamily(
        kind=fam.kind,
        cfg=fam.cfg,
        base=fam.base,
        k=fam.k,
        n=fam.n,
        modulus=fam.modulus,
        target_on=fam.target_on,
        target_off=fam.target_off,
        lattice_required=fam.lattice_required,
        section=fam.section,
        claimed_k_floor=fam.claimed_k_floor,
        within_stated_range=fam.within_stated_range,
        off_offset_override=fam.k,
    )


# ----------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    family: dict
    mode: str
    engine: str
    tuples_checked: int
    violations: list[dict]
    violation_count: int
    all_symplectic: bool
    all_in_lattice: bool | None
    strata: dict | None
    crosschecked: int
    elapsed_seconds: float

    @property
    def passed(self) -> bool:
        return self.violation_count == 0 and self.all_symplectic and (
            self.all_in_lattice is not False
        )

    def to_json(self) -> str:
        payload = dict(self.__dict__)
        payload["passed"] = self.passed
        return json.dumps(payload, indent=2, sort_keys=True)

    SUMMARY_HEADER = "kind,p,backend,i,j,k,mode,engine,tuples_checked,violations,status"

    def summary_row(self) -> str:
        fam = self.family
        status = "pass" if self.passed else "FAIL"
        mode = self.mode.split("(")[0]
        return (
            f"{fam['kind']},{fam['p']},{fam['backend']},{fam['base'][0]},"
            f"{fam['base'][1]},{fam['k']},{mode},{self.engine},"
            f"{self.tuples_checked},{self.violation_count},{status}"
        )


def _index_to_elements(ring: ResidueRing, idx: int, count: int) -> list[ResidueElement]:
    out = []
    size = ring.size
    for _ in range(count):
        out.append(ring.element(idx % size))
        idx //= size
    return out


def _iter_tuples(
    fam: MoveFamily, mode: str, samples: int, seed: int
) -> Iterator[tuple[list[ResidueElement], ResidueElement, list[ResidueElement]]]:
    ring = fam.ring
    width = 2 * fam.n + 1
    if mode == "exhaustive":
        for idx in range(fam.tuple_count):
            parts = _index_to_elements(ring, idx, width)
            yield parts[: fam.n], parts[fam.n], parts[fam.n + 1 :]
    else:
        rng = random.Random(seed)
        size = ring.size
        yield from (
            (
                [ring.element(rng.randrange(size)) for _ in range(fam.n)],
                ring.element(rng.randrange(size)),
                [ring.element(rng.randrange(size)) for _ in range(fam.n)],
            )
            for _ in range(samples)
        )


def _fiber_plan(fam: MoveFamily) -> list[tuple[str, int, tuple[int, int]]]:
    plan = [("on", fam.k, fam.target_on)]
    if fam.target_off is not None:
        off_exp = fam.k - 1 if fam.off_offset_override is None else fam.off_offset_override
        plan.append(("off", off_exp, fam.target_off))
    return plan


def _record_violation(
    violations: list[dict],
    fiber: str,
    a_vec,
    b,
    x_vec,
    y,
    computed,
    expected,
    matrix: Matrix4 | None,
    cap: int = 32,
) -> None:
    if len(violations) >= cap:
        return
    entry = {
        "fiber": fiber,
        "a": [r.n for r in a_vec],
        "b": b.n,
        "x": [r.n for r in x_vec],
        "y": y.n,
        "computed": list(computed) if computed else None,
        "expected": list(expected),
    }
    if matrix is not None:
        entry["matrix"] = [
            [format_scalar(v) for v in row] for row in matrix.rows
        ]
    violations.append(entry)


def verify_family(
    fam: MoveFamily,
    mode: str = "auto",
    *,
    budget: int = 10_000_000,
    samples: int = 1_000_000,
    seed: int = 0,
    engine: str = "auto",
    collect_strata: bool = False,
    crosscheck: int = 32,
) -> VerificationReport:
    """Certify the fiber dichotomy over the whole parameter space.

    mode: "exhaustive" | "sampled" | "auto" (exhaustive iff it fits the
    budget).  engine: "exact" | "bulk" | "auto".  When the bulk engine
    runs, ``crosscheck`` seeded tuples per fiber are re-verified through
    the exact scalar path; disagreement raises InternalError.  The exact
    engine ignores the parameter (it is its own reference).
    """
    if mode == "auto":
        mode = "exhaustive" if fam.tuple_count <= budget else "sampled"
    elif mode == "exhaustive" and fam.tuple_count > budget:
        raise BudgetError(
            f"{fam.tuple_count} tuples exceed budget {budget}; use sampled mode"
        )
    if engine == "auto":
        work = fam.tuple_count if mode == "exhaustive" else samples
        vectorizable = (
            fam.cfg.backend is Backend.EQUAL_CHAR
            and fam.section is canonical_section
        )
        engine = "bulk" if work > 20_000 and vectorizable else "exact"
    if engine == "bulk":
        from . import bulk

        return bulk.verify_family_bulk(
            fam,
            mode,
            samples=samples,
            seed=seed,
            collect_strata=collect_strata,
            crosscheck=crosscheck,
        )

    start = time.perf_counter()
    violations: list[dict] = []
    vcount = 0
    all_sympl = True
    all_latt: bool | None = True if fam.lattice_required else None
    checked = 0
    for fiber, off_exp, expected in _fiber_plan(fam):
        for a_vec, b, x_vec in _iter_tuples(fam, mode, samples, seed):
            y = fam.fiber_y(a_vec, b, x_vec, off_exp)
            g = fam.product(a_vec, b, x_vec, y)
            checked += 1
            if not is_symplectic(g):
                all_sympl = False
                vcount += 1
                _record_violation(
                    violations, fiber + ":not-symplectic", a_vec, b, x_vec, y,
                    None, expected, g,
                )
                continue
            if fam.lattice_required and not in_polynomial_lattice(g):
                all_latt = False
                vcount += 1
                _record_violation(
                    violations, fiber + ":not-in-lattice", a_vec, b, x_vec, y,
                    None, expected, g,
                )
                continue
            got = cartan_invariants(g, check=False)
            if got != expected:
                vcount += 1
                _record_violation(
                    violations, fiber, a_vec, b, x_vec, y, got, expected, g
                )

    strata = observe_strata(fam, seed=seed) if collect_strata else None
    mode_label = (
        "exhaustive" if mode == "exhaustive" else f"sampled(seed={seed}, count={samples})"
    )
    return VerificationReport(
        family=fam.descriptor(),
        mode=mode_label,
        engine="exact",
        tuples_checked=checked,
        violations=violations,
        violation_count=vcount,
        all_symplectic=all_sympl,
        all_in_lattice=all_latt,
        strata=strata,
        crosschecked=0,
        elapsed_seconds=round(time.perf_counter() - start, 6),
    )


def observe_strata(
    fam: MoveFamily, seed: int = 0, tuples_per_level: int = 24
) -> dict:
    """Empirical map: offset level l -> set of observed coset classes.

    Levels run over 0..M-1 plus "exact" (y with no offset at all); this
    is reported as data and asserted nowhere.
    """
    rng = random.Random(seed ^ 0x5117)
    ring = fam.ring
    size = ring.size
    out: dict = {}
    levels: list[tuple[str, int | None]] = [
        (str(l), l) for l in range(fam.modulus)
    ]
    levels.append(("exact", None))
    for label, l in levels:
        seen = set()
        for _ in range(tuples_per_level):
            a_vec = [ring.element(rng.randrange(size)) for _ in range(fam.n)]
            b = ring.element(rng.randrange(size))
            x_vec = [ring.element(rng.randrange(size)) for _ in range(fam.n)]
            y = fam.fiber_y(a_vec, b, x_vec, l)
            g = fam.product(a_vec, b, x_vec, y)
            seen.add(cartan_invariants(g, check=False))
        out[label] = sorted(seen)
    return out


def crosscheck_exact(
    fam: MoveFamily, verdicts: dict, count: int, seed: int
) -> int:
    """Recompute ``count`` seeded tuples through the exact path.

    ``verdicts`` maps (fiber, tuple-index-key) to the bulk engine's
    cartan pair; any disagreement is an internal error, not a violation.
    """
    rng = random.Random(seed ^ 0xC0DE)
    ring = fam.ring
    size = ring.size
    done = 0
    for fiber, off_exp, _ in _fiber_plan(fam):
        for _ in range(count):
            key_parts = [rng.randrange(size) for _ in range(2 * fam.n + 1)]
            a_vec = [ring.element(v) for v in key_parts[: fam.n]]
            b = ring.element(key_parts[fam.n])
            x_vec = [ring.element(v) for v in key_parts[fam.n + 1 :]]
            y = fam.fiber_y(a_vec, b, x_vec, off_exp)
            g = fam.product(a_vec, b, x_vec, y)
            got = cartan_invariants(g, check=False)
            expected = verdicts.get((fiber, tuple(key_parts)))
            if expected is not None and tuple(expected) != got:
                raise InternalError(
                    f"engines disagree on {fiber} tuple {key_parts}: "
                    f"exact {got} vs bulk {tuple(expected)}"
                )
            if not is_symplectic(g):
                raise InternalError(f"exact route: non-symplectic at {key_parts}")
            done += 1
    return done
