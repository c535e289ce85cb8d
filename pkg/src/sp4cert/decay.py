"""Zig-zag decay profiles on the Weyl chamber.

Each setting carries one step bound per move family; telescoping those
bounds along a deterministic path that hugs the band i = (1 + 1/n) j
produces a profile phi with geometric tails.  Everything here is closed
form: the path planner is exact (band offsets are rationals), the tail
sums are geometric series read off the step formulas, and a brute-force
walker exists purely as an oracle for the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import (
    AdmissibilityError,
    DomainError,
    HypothesisError,
    InternalError,
    PathError,
)

Pair = tuple[int, int]

_SIM_CAP = 200_000


class SettingKind(Enum):
    GROUP_SCHATTEN = "group-schatten"
    LATTICE_LP = "lattice-lp"
    LATTICE_SCHATTEN = "lattice-schatten"


class Move(Enum):
    MOVE1 = "move1"
    MOVE2 = "move2"


def _inv(p_exp: float) -> float:
    return 0.0 if p_exp == math.inf else 1.0 / p_exp


@dataclass(frozen=True)
class Setting:
    """One decay regime: which step bounds apply and at which exponent.

    char2 selects the even-residue group bounds (second move target
    steps j by 2); v0 is the valuation of 2 and enters only the odd
    residue group bound.  All settings degenerate at p_exp <= 4, so
    construction rejects those outright.
    """

    kind: SettingKind
    q: int
    p_exp: float
    char2: bool = False
    v0: int = 0

    def __post_init__(self) -> None:
        if self.q < 2:
            raise DomainError("residue size must be at least 2")
        if self.v0 < 0:
            raise DomainError("v0 must be nonnegative")
        if self.char2 and self.kind is not SettingKind.GROUP_SCHATTEN:
            raise DomainError("even-residue bounds exist only in the group setting")
        if not self.p_exp > 4:
            expr = (
                "1/2 - 2/p" if self.kind is SettingKind.LATTICE_LP else "1 - 4/p"
            )
            rel = "= 0" if self.p_exp == 4 else "< 0"
            raise AdmissibilityError(
                f"p = {self.p_exp} is inadmissible: every step exponent needs "
                f"p > 4, and the binding constraint {expr} {rel} there"
            )


@dataclass(frozen=True)
class StepBound:
    move: Move
    at: Pair
    value: float
    formula_id: str


@dataclass(frozen=True)
class PathStep:
    move: Move
    frm: Pair
    to: Pair
    value: float
    detour: bool


def _require_chamber(at: Pair) -> None:
    i, j = at
    if not (isinstance(i, int) and isinstance(j, int) and i >= j >= 0):
        raise DomainError(f"point {at} is not in the chamber i >= j >= 0")


def move_delta(setting: Setting, move: Move) -> Pair:
    if move is Move.MOVE1:
        return (0, 2) if setting.char2 else (0, 1)
    return (1, -1)


def step_record(setting: Setting, move: Move, at: Pair) -> StepBound:
    """Evaluate the closed-form step bound at the source point of the move."""
    _require_chamber(at)
    i, j = at
    q = setting.q
    ip = _inv(setting.p_exp)
    if move is Move.MOVE1:
        if setting.kind is SettingKind.GROUP_SCHATTEN and setting.char2:
            if i - j < 2:
                raise HypothesisError("needs i - j >= 2")
            value = 2.0 * q ** (-0.5 * (i - j - 2) * (1 - 4 * ip))
            fid = "group-move1-even-residue"
        elif setting.kind is SettingKind.GROUP_SCHATTEN:
            if i < 1:
                raise HypothesisError("needs i >= 1")
            if i - j < setting.v0 + 1:
                raise HypothesisError(f"needs i - j >= v0 + 1 = {setting.v0 + 1}")
            value = 2.0 * q ** (-0.5 * (i - j - setting.v0 - 1) * (1 - 4 * ip))
            fid = "group-move1"
        elif setting.kind is SettingKind.LATTICE_LP:
            if i - j < 1:
                raise HypothesisError("move target leaves the chamber (needs i > j)")
            # explicit chain product |H1|^(1/p) * C* bound, no opaque constant
            value = q ** ((2 * (i - j) + 3) * ip) * 2.0 * q ** (-(i - j) / 2.0)
            fid = "lattice-lp-move1"
        else:
            if i - j < 1:
                raise HypothesisError("move target leaves the chamber (needs i > j)")
            value = 2.0 * q ** (-0.5 * (i - j - 2) * (1 - 4 * ip))
            fid = "lattice-schatten-move1"
    else:
        if setting.kind is SettingKind.GROUP_SCHATTEN:
            if j < 3:
                raise HypothesisError("needs j >= 3")
            value = 2.0 * q**2 * q ** (-(j - 2) * (1 - 3 * ip))
            fid = "group-move2"
        elif setting.kind is SettingKind.LATTICE_LP:
            if j < 1:
                raise HypothesisError("move target leaves the chamber (needs j >= 1)")
            value = q ** ((2 * (i + j) + 2) * ip) * 2.0 * q**2 * q ** (-float(j))
            fid = "lattice-lp-move2"
        else:
            if j < 1:
                raise HypothesisError("move target leaves the chamber (needs j >= 1)")
            value = 2.0 * q ** (-(j - 2) * (1 - 3 * ip))
            fid = "lattice-schatten-move2"
    return StepBound(move=move, at=at, value=value, formula_id=fid)


def step_bound(setting: Setting, move: Move, at: Pair) -> float:
    return step_record(setting, move, at).value


# ----------------------------------------------------------------------
# path planning


def _band_offset(at: Pair, n: int) -> Fraction:
    i, j = at
    return Fraction(i) - Fraction(n + 1, n) * j


def _next_step(setting: Setting, cur: Pair, n: int) -> PathStep:
    # Move2 enumerated first so the stable sort prefers it on ties
    options = []
    blocked = []
    for move in (Move.MOVE2, Move.MOVE1):
        di, dj = move_delta(setting, move)
        to = (cur[0] + di, cur[1] + dj)
        if not to[0] >= to[1] >= 0:
            continue
        dist = abs(_band_offset(to, n))
        try:
            value = step_bound(setting, move, cur)
        except HypothesisError:
            blocked.append(dist)
            continue
        options.append((dist, move, to, value))
    if not options:
        raise PathError(f"no hypothesis-compatible move at {cur}")
    options.sort(key=lambda t: t[0])
    dist, move, to, value = options[0]
    # a detour is a step forced past a blocked strictly-better target
    detour = any(b < dist for b in blocked)
    return PathStep(move=move, frm=cur, to=to, value=value, detour=detour)


def zigzag_path(setting: Setting, start: Pair, n: int, horizon: int) -> list[PathStep]:
    """Deterministic band-hugging walk of `horizon` moves from `start`.

    Each step takes whichever admissible move lands closest to the band
    |i - (1 + 1/n) j| = 0, preferring the second move on ties; steps
    forced away from the greedy choice by a hypothesis are flagged as
    detours.  Runs out of moves only near the chamber wall, where the
    error names the stuck point.
    """
    _require_chamber(start)
    if n < 1:
        raise DomainError("slope parameter n must be a positive integer")
    if horizon < 0:
        raise DomainError("horizon must be nonnegative")
    steps = []
    cur = start
    for _ in range(horizon):
        step = _next_step(setting, cur, n)
        steps.append(step)
        cur = step.to
    return steps


def pair_bound(setting: Setting, a: Pair, b: Pair, n: int) -> float:
    """Telescoped bound along the canonical path from a to b.

    The path is the zig-zag walk from a; it must pass through b.  The
    sum is exactly additive under splitting at any intermediate point
    because the walk is memoryless.
    """
    _require_chamber(a)
    _require_chamber(b)
    if a == b:
        return 0.0
    cap = 8 * (abs(b[0] - a[0]) + abs(b[1] - a[1]) + n + 8) + 64
    total = 0.0
    cur = a
    for _ in range(cap):
        step = _next_step(setting, cur, n)
        total += step.value
        cur = step.to
        if cur == b:
            return total
    raise PathError(f"the canonical path from {a} does not reach {b}")


# ----------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class AdmissibleRange:
    """Open-left interval (lo, hi] of certified exponents."""

    lo: float
    hi: float
    constraints: tuple[str, ...]

    def contains(self, p_exp: float) -> bool:
        return self.lo < p_exp <= self.hi

    def to_json(self) -> dict:
        return {
            "lo": self.lo,
            "lo_open": True,
            "hi": "inf" if self.hi == math.inf else self.hi,
            "hi_open": False,
            "constraints": list(self.constraints),
        }


def admissible_p_range(kind: SettingKind) -> AdmissibleRange:
    """Exact intersection of the sign conditions on every step exponent."""
    if kind is SettingKind.LATTICE_LP:
        constraints = (
            "1/2 - 2/p > 0 (first move exponent)",
            "exists n >= 1 with 2(2 + 1/n)/p < 1 (second move tail)",
        )
    else:
        constraints = (
            "1 - 4/p > 0 (first move exponent)",
            "1 - 3/p > 0 (second move exponent)",
        )
    return AdmissibleRange(lo=4.0, hi=math.inf, constraints=constraints)


def minimal_slope_parameter(p_exp: float) -> int:
    """Smallest n with 2(2 + 1/n) < p, decided in exact rationals."""
    if p_exp == math.inf:
        return 1
    P = Fraction(p_exp)
    if P <= 4:
        raise AdmissibilityError(
            f"no slope parameter exists at p = {p_exp}: needs p > 4"
        )
    # 2(2 + 1/n) < p  <=>  n > 2 / (p - 4)
    return int(Fraction(2) / (P - 4)) + 1


def _require_profile_admissible(setting: Setting, n: int) -> None:
    if n < 1:
        raise DomainError("slope parameter n must be a positive integer")
    if setting.kind is not SettingKind.LATTICE_LP:
        return
    if setting.p_exp == math.inf:
        return
    P = Fraction(setting.p_exp)
    lhs = 2 * (2 + Fraction(1, n))
    if not lhs < P:
        raise AdmissibilityError(
            f"slope n = {n} is inadmissible at p = {setting.p_exp}: "
            f"needs 2(2 + 1/n)/p < 1, got {float(lhs / P):.6f} >= 1"
        )


def band_ratios(setting: Setting, n: int) -> dict[str, float]:
    """Per-superblock tail ratios along the band (one unit of i - j,
    n units of j, 2n + 1 units of i + j per block)."""
    q = setting.q
    ip = _inv(setting.p_exp)
    if setting.kind is SettingKind.LATTICE_LP:
        r1 = q ** (-(0.5 - 2 * ip))
        r2 = q ** (2 * (2 * n + 1) * ip - n)
    else:
        r1 = q ** (-0.5 * (1 - 4 * ip))
        r2 = q ** (-n * (1 - 3 * ip))
    return {Move.MOVE1.value: r1, Move.MOVE2.value: r2}


# ----------------------------------------------------------------------
# profiles


def _value_ratio(setting: Setting, move: Move, di: int, dj: int) -> float:
    """Exact factor a step bound picks up under translation by (di, dj)."""
    q = setting.q
    ip = _inv(setting.p_exp)
    if move is Move.MOVE1:
        if setting.kind is SettingKind.LATTICE_LP:
            return q ** ((2 * ip - 0.5) * (di - dj))
        return q ** (-0.5 * (di - dj) * (1 - 4 * ip))
    if setting.kind is SettingKind.LATTICE_LP:
        return q ** (2 * (di + dj) * ip - dj)
    return q ** (-(dj) * (1 - 3 * ip))


def _simulate_until_cycle(
    setting: Setting, start: Pair, n: int
) -> tuple[list[PathStep], int, int]:
    """Walk until the band offset repeats in the constraint-free regime.

    Once j and i - j clear margins larger than any dip a cycle can
    produce, move legality is constant and the planner is a function of
    the band offset alone, which ranges over finitely many rationals.
    The returned indices (s, t) delimit the first full period.
    """
    margin = 16 * n + 8 + setting.v0
    steps: list[PathStep] = []
    seen: dict[Fraction, int] = {}
    cur = start
    for _ in range(_SIM_CAP):
        i, j = cur
        if j >= margin and i - j >= margin:
            delta = _band_offset(cur, n)
            if delta in seen:
                s = seen[delta]
                t = len(steps)
                di = cur[0] - steps[s].frm[0]
                dj = cur[1] - steps[s].frm[1]
                if di == dj:
                    raise InternalError("degenerate cycle displacement")
                return steps, s, t
            seen[delta] = len(steps)
        step = _next_step(setting, cur, n)
        steps.append(step)
        cur = step.to
    raise InternalError(f"no cycle within {_SIM_CAP} steps from {start}")


def phi(setting: Setting, at: Pair, n: int, *, horizon: int | None = None) -> float:
    """Total zig-zag bound from `at`: finite prefix plus geometric tails.

    With horizon=None the full series is summed in closed form; a finite
    horizon evaluates the partial sum of exactly that many steps, still
    through the closed-form period sums (the brute-force oracle for this
    is phi_bruteforce).
    """
    _require_chamber(at)
    _require_profile_admissible(setting, n)
    steps, s, t = _simulate_until_cycle(setting, at, n)
    period = steps[s:t]
    di = period[-1].to[0] - period[0].frm[0]
    dj = period[-1].to[1] - period[0].frm[1]
    ratios = {
        move: _value_ratio(setting, move, di, dj) for move in (Move.MOVE1, Move.MOVE2)
    }
    sums = {Move.MOVE1: 0.0, Move.MOVE2: 0.0}
    for step in period:
        sums[step.move] += step.value
    if horizon is None:
        for move, r in ratios.items():
            if sums[move] > 0.0 and not r < 1.0:
                raise InternalError(f"non-contracting tail ratio {r} for {move}")
        total = sum(step.value for step in steps[:s])
        for move in sums:
            if sums[move] > 0.0:
                total += sums[move] / (1.0 - ratios[move])
        return total
    if horizon < 0:
        raise DomainError("horizon must be nonnegative")
    if horizon <= s:
        return sum(step.value for step in steps[:horizon])
    total = sum(step.value for step in steps[:s])
    length = t - s
    cycles, rest = divmod(horizon - s, length)
    for move in (Move.MOVE1, Move.MOVE2):
        r = ratios[move]
        if sums[move] == 0.0:
            continue
        if r == 1.0:
            total += sums[move] * cycles
        else:
            total += sums[move] * (1.0 - r**cycles) / (1.0 - r)
    for step in period[:rest]:
        total += step.value * ratios[step.move] ** cycles
    return total


def phi_bruteforce(setting: Setting, at: Pair, n: int, horizon: int) -> float:
    """Literal walk-and-sum oracle for the closed-form partial sums."""
    return sum(step.value for step in zigzag_path(setting, at, n, horizon))


@dataclass(frozen=True)
class DecayProfile:
    setting: Setting
    n: int
    table: dict[Pair, float]
    skipped: tuple[Pair, ...]
    ratios: dict[str, float]

    def to_json(self) -> dict:
        return {
            "setting": self.setting.kind.value,
            "q": self.setting.q,
            "p_exp": "inf" if self.setting.p_exp == math.inf else self.setting.p_exp,
            "char2": self.setting.char2,
            "v0": self.setting.v0,
            "n": self.n,
            "ratios": dict(self.ratios),
            "skipped": [list(x) for x in self.skipped],
            "table": [
                {"i": i, "j": j, "phi": v} for (i, j), v in sorted(self.table.items())
            ],
        }


def decay_profile(setting: Setting, n: int, imax: int) -> DecayProfile:
    """phi over the chamber triangle 0 <= j <= i <= imax.

    Wall points with no hypothesis-compatible path are skipped and
    recorded rather than invented.
    """
    _require_profile_admissible(setting, n)
    table: dict[Pair, float] = {}
    skipped: list[Pair] = []
    for i in range(imax + 1):
        for j in range(i + 1):
            try:
                table[(i, j)] = phi(setting, (i, j), n)
            except PathError:
                skipped.append((i, j))
    return DecayProfile(
        setting=setting,
        n=n,
        table=table,
        skipped=tuple(skipped),
        ratios=band_ratios(setting, n),
    )
