"""Vectorized sweep engine for the series backend.

Mirrors the exact scalar lane step by step: the same factor matrices
are built (as batched coefficient windows), multiplied generically, and
classified through the same entry/minor valuations.  Nothing here uses
closed-form knowledge of the products; structural zeros are skipped,
which is the whole speedup.

Entries are ``None`` (identically zero), ``Mono`` (a shared monomial),
or ``Win``: coefficients ``c[b, w]`` of t^(e0+w) reduced mod p, with a
leading axis of 1 for batch-constant values.  Only the carry-free
backend with the canonical section is supported; everything else stays
on the exact lane.

The symplectic condition is checked per tuple through the wedge square:
for column pair (a, b), summing the two J-paired row-pair minors must
reproduce the form's coefficient.  That identity is equivalent to
g^T J g = J and reuses minors the classifier needs anyway.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

import numpy as np

from .errors import InternalError, UnsupportedBackend
from .localfield import Backend, canonical_section
from .symplectic import WEDGE_PAIRS

_INF = np.int64(10**9)
_CHUNK = 1 << 17


@dataclass(frozen=True)
class Mono:
    e: int
    coeff: int


@dataclass
class Win:
    e0: int
    c: np.ndarray  # int16, shape (B, W) or (1, W)


Entry = Mono | Win | None


def _trim(w: Win) -> Entry:
    used = (w.c != 0).any(axis=0)
    if not used.any():
        return None
    first = int(used.argmax())
    last = len(used) - int(used[::-1].argmax())
    if first == 0 and last == w.c.shape[1]:
        return w
    return Win(w.e0 + first, w.c[:, first:last])


def _as_win(x: Mono, p: int) -> Win:
    return Win(x.e, np.full((1, 1), x.coeff % p, dtype=np.int16))


def _add(a: Entry, b: Entry, p: int, sign: int = 1) -> Entry:
    if a is None and b is None:
        return None
    if a is None:
        return _scale(b, sign, p)
    if b is None:
        return a
    if isinstance(a, Mono):
        if isinstance(b, Mono) and b.e == a.e:
            c = (a.coeff + sign * b.coeff) % p
            return Mono(a.e, c) if c else None
        a = _as_win(a, p)
    if isinstance(b, Mono):
        b = _as_win(b, p)
    e0 = min(a.e0, b.e0)
    end = max(a.e0 + a.c.shape[1], b.e0 + b.c.shape[1])
    rows = max(a.c.shape[0], b.c.shape[0])
    out = np.zeros((rows, end - e0), dtype=np.int16)
    out[:, a.e0 - e0 : a.e0 - e0 + a.c.shape[1]] += a.c
    sb = out[:, b.e0 - e0 : b.e0 - e0 + b.c.shape[1]]
    sb += b.c if sign == 1 else -b.c
    out %= p
    return _trim(Win(e0, out))


def _sub(a: Entry, b: Entry, p: int) -> Entry:
    return _add(a, b, p, sign=-1)


def _scale(x: Entry, n: int, p: int) -> Entry:
    n %= p
    if x is None or n == 0:
        return None
    if n == 1:
        return x
    if isinstance(x, Mono):
        return Mono(x.e, x.coeff * n % p)
    return Win(x.e0, x.c * n % p)


def _shift(x: Entry, e: int) -> Entry:
    if x is None or e == 0:
        return x
    if isinstance(x, Mono):
        return Mono(x.e + e, x.coeff)
    return Win(x.e0 + e, x.c)


def _mul(a: Entry, b: Entry, p: int) -> Entry:
    if a is None or b is None:
        return None
    if isinstance(a, Mono) and isinstance(b, Mono):
        return Mono(a.e + b.e, a.coeff * b.coeff % p)
    if isinstance(a, Mono):
        return Win(b.e0 + a.e, b.c * (a.coeff % p) % p)
    if isinstance(b, Mono):
        return Win(a.e0 + b.e, a.c * (b.coeff % p) % p)
    wa, wb = a.c.shape[1], b.c.shape[1]
    rows = max(a.c.shape[0], b.c.shape[0])
    out = np.zeros((rows, wa + wb - 1), dtype=np.int16)
    for w in range(wa):
        col = a.c[:, w : w + 1]
        if (col != 0).any():
            out[:, w : w + wb] += col * b.c
    out %= p
    return _trim(Win(a.e0 + b.e0, out))


def _drop_positive_exponents(x: Entry) -> Entry:
    """The integral-part bracket on a window."""
    if x is None:
        return None
    if isinstance(x, Mono):
        return x if x.e <= 0 else None
    width = x.c.shape[1]
    keep = min(width, max(0, 1 - x.e0))
    if keep == 0:
        return None
    return _trim(Win(x.e0, x.c[:, :keep]))


def _valuation(x: Entry, batch: int) -> np.ndarray:
    if x is None:
        return np.full(1, _INF)
    if isinstance(x, Mono):
        return np.full(1, x.e, dtype=np.int64)
    nz = x.c != 0
    hit = nz.any(axis=1)
    return np.where(hit, x.e0 + nz.argmax(axis=1), _INF)


def _is_zero_mask(x: Entry) -> np.ndarray | bool:
    if x is None:
        return True
    if isinstance(x, Mono):
        return False
    return ~(x.c != 0).any(axis=1)


def _has_positive_exponent(x: Entry) -> np.ndarray | bool:
    if x is None:
        return False
    if isinstance(x, Mono):
        return x.e > 0
    start = max(0, 1 - x.e0)
    if start >= x.c.shape[1]:
        return False
    return (x.c[:, start:] != 0).any(axis=1)


# ----------------------------------------------------------------------
# generic 4x4 algebra on entry grids


def _matmul(a: list, b: list, p: int) -> list:
    out = [[None] * 4 for _ in range(4)]
    for r in range(4):
        row = a[r]
        for c in range(4):
            acc = None
            for k in range(4):
                if row[k] is not None and b[k][c] is not None:
                    acc = _add(acc, _mul(row[k], b[k][c], p), p)
            out[r][c] = acc
    return out


def _one() -> Mono:
    return Mono(0, 1)


def _diag_grid(exps: tuple[int, int, int, int]) -> list:
    g = [[None] * 4 for _ in range(4)]
    for r, e in enumerate(exps):
        g[r][r] = Mono(e, 1)
    return g


def _lower_grid(u: Entry, v: Entry, w: Entry) -> list:
    return [
        [_one(), None, None, None],
        [None, _one(), None, None],
        [u, v, _one(), None],
        [w, u, None, _one()],
    ]


def _upper_pair_grid(r: Entry, s: Entry, t: Entry, p: int) -> list:
    return [
        [_one(), r, s, t],
        [None, _one(), None, s],
        [None, None, _one(), _scale(r, -1, p)],
        [None, None, None, _one()],
    ]


def _upper_abelian_grid(s: Entry, t: Entry, u: Entry) -> list:
    return [
        [_one(), None, s, t],
        [None, _one(), u, s],
        [None, None, _one(), None],
        [None, None, None, _one()],
    ]


# ----------------------------------------------------------------------
# ring arithmetic on digit arrays (carry-free, truncated)


def _ring_mul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    m = a.shape[1]
    out = np.zeros_like(a)
    for e in range(m):
        col = a[:, e : e + 1]
        if (col != 0).any():
            out[:, e:] += col * b[:, : m - e]
    return out % p


def _ring_halve(a: np.ndarray, p: int) -> np.ndarray:
    return a * pow(2, -1, p) % p


def _lift(digits: np.ndarray) -> Entry:
    return _trim(Win(0, digits))


# ----------------------------------------------------------------------
# batched family builders (mirror constructions._alpha_* / _beta_*)


def _build_grids(fam, a_digits: list[np.ndarray], b_digits: np.ndarray,
                 x_digits: list[np.ndarray], y_digits: np.ndarray) -> tuple[list, list]:
    from .constructions import MoveKind

    p = fam.cfg.p
    i, j = fam.base
    kind = fam.kind
    if kind is MoveKind.MOVE1_CHAR_NEQ2:
        m = (i + j) // 2
        sa, sb = _lift(a_digits[0]), _lift(b_digits)
        sx, sy = _lift(x_digits[0]), _lift(y_digits)
        alpha = _matmul(
            _diag_grid((m, i + j - m, -(i + j - m), -m)),
            _lower_grid(sa, _one(), _sub(_mul(sa, sa, p), _scale(sb, 2, p), p)),
            p,
        )
        beta = _matmul(
            _lower_grid(sx, None, _add(_mul(sx, sx, p), _scale(sy, 2, p), p)),
            _diag_grid((j - m, j - m, m - j, m - j)),
            p,
        )
        return alpha, beta
    if kind is MoveKind.MOVE1_CHAR2:
        m = (i + j) // 2
        sa, sb = _lift(a_digits[0]), _lift(b_digits)
        sx, sy = _lift(x_digits[0]), _lift(y_digits)
        unit = _add(_one(), _shift(sa, 1), p)
        alpha = _matmul(
            _diag_grid((m, i + j - m, -(i + j - m), -m)),
            _lower_grid(_shift(sb, 1), _mul(unit, unit, p), None),
            p,
        )
        beta = _matmul(
            _lower_grid(_add(sx, _shift(sy, 1), p), None, _mul(sx, sx, p)),
            _diag_grid((j - m, j - m, m - j, m - j)),
            p,
        )
        return alpha, beta
    if kind is MoveKind.MOVE2:
        m = fam.modulus - 1
        a1 = _shift(_add(_one(), _shift(_lift(a_digits[0]), 1), p), -m - 1)
        a2 = _shift(_add(_one(), _shift(_lift(a_digits[1]), 1), p), -m - 1)
        bb = _shift(_lift(b_digits), -2 * m)
        alpha = _upper_pair_grid(_scale(a1, -1, p), a2, _scale(bb, -1, p), p)
        if (i + j) % 2 == 1:
            shear = [
                [_one(), None, None, None],
                [None, _one(), Mono(-1, 1), None],
                [None, None, _one(), None],
                [None, None, None, _one()],
            ]
            alpha = _matmul(shear, alpha, p)
        x1 = _shift(_lift(x_digits[0]), -m)
        x2 = _shift(_lift(x_digits[1]), -m)
        t = _add(_shift(_add(x1, x2, p), -m - 1), _shift(_lift(y_digits), -2 * m), p)
        beta = _upper_pair_grid(x2, x1, t, p)
        return alpha, beta
    if kind is MoveKind.LATTICE_MOVE1:
        a, b = a_digits[0], b_digits
        x, y = x_digits[0], y_digits
        s1 = _drop_positive_exponents(_shift(_lift(a), -i))
        t1 = _drop_positive_exponents(
            _shift(_lift((_ring_mul(a, a, p) - b) % p), -i)
        )
        alpha = _upper_abelian_grid(s1, t1, Mono(-i, 1))
        half = _ring_halve(x, p)
        s2 = _drop_positive_exponents(_shift(_lift(half), -i))
        t2 = _drop_positive_exponents(
            _shift(_lift((_ring_mul(half, half, p) + y) % p), -i)
        )
        beta = _upper_abelian_grid(s2, t2, None)
        return alpha, beta
    raise InternalError(f"no bulk builder for {kind}")


# ----------------------------------------------------------------------
# classification


_FORM_COEFF = {(0, 3): 1, (1, 2): 1}


def _classify(g: list, p: int, batch: int, need_lattice: bool):
    """Return (i, i+j, symplectic_ok, lattice_ok) arrays for the batch."""
    entry_min = np.full(1, _INF)
    # keep masks in numpy bool space: python's ~False is -1, not True
    latt_ok = np.ones(1, dtype=bool)
    for r in range(4):
        for c in range(4):
            entry_min = np.minimum(entry_min, _valuation(g[r][c], batch))
            if need_lattice:
                latt_ok = latt_ok & ~np.asarray(_has_positive_exponent(g[r][c]))
    minor_min = np.full(1, _INF)
    sympl_rows: dict[tuple[int, int], dict] = {(0, 3): {}, (1, 2): {}}
    for rp in WEDGE_PAIRS:
        r1, r2 = rp
        for cp in WEDGE_PAIRS:
            c1, c2 = cp
            minor = _sub(
                _mul(g[r1][c1], g[r2][c2], p), _mul(g[r1][c2], g[r2][c1], p), p
            )
            minor_min = np.minimum(minor_min, _valuation(minor, batch))
            if rp in sympl_rows:
                sympl_rows[rp][cp] = minor
    sympl_ok = np.ones(1, dtype=bool)
    for cp in WEDGE_PAIRS:
        s = _add(sympl_rows[(0, 3)][cp], sympl_rows[(1, 2)][cp], p)
        want = _FORM_COEFF.get(cp, 0)
        if want:
            s = _sub(s, Mono(0, want), p)
        sympl_ok = sympl_ok & np.asarray(_is_zero_mask(s))
    i_arr = -entry_min
    s_arr = -minor_min
    return (
        np.broadcast_to(i_arr, (batch,)),
        np.broadcast_to(s_arr, (batch,)),
        np.broadcast_to(sympl_ok, (batch,)),
        np.broadcast_to(latt_ok, (batch,)),
    )


def _digits_from_values(values: np.ndarray, p: int, m: int) -> np.ndarray:
    out = np.empty((values.shape[0], m), dtype=np.int16)
    v = values.astype(np.int64)
    for d in range(m):
        out[:, d] = v % p
        v //= p
    return out


def _values_from_digits(digits: np.ndarray, p: int) -> np.ndarray:
    out = np.zeros(digits.shape[0], dtype=np.int64)
    for d in range(digits.shape[1] - 1, -1, -1):
        out = out * p + digits[:, d]
    return out


def verify_family_bulk(
    fam,
    mode: str,
    *,
    samples: int = 1_000_000,
    seed: int = 0,
    collect_strata: bool = False,
    crosscheck: int = 32,
) -> "VerificationReport":
    from .constructions import (
        VerificationReport,
        _fiber_plan,
        crosscheck_exact,
        observe_strata,
    )

    if fam.cfg.backend is not Backend.EQUAL_CHAR:
        raise UnsupportedBackend("bulk engine handles the series backend only")
    if fam.section is not canonical_section:
        raise UnsupportedBackend("bulk engine lifts canonically; use the exact engine")

    start = time.perf_counter()
    p = fam.cfg.p
    m = fam.modulus
    n = fam.n
    size = fam.ring.size
    violations: list[dict] = []
    vcount = 0
    all_sympl = True
    all_latt: bool | None = True if fam.lattice_required else None
    checked = 0

    def classify_params(param_values: list[np.ndarray], off_exp: int | None):
        batch = param_values[0].shape[0]
        a_digits = [_digits_from_values(param_values[t], p, m) for t in range(n)]
        b_digits = _digits_from_values(param_values[n], p, m)
        x_digits = [
            _digits_from_values(param_values[n + 1 + t], p, m) for t in range(n)
        ]
        y = b_digits.copy()
        for t in range(n):
            y = (y + _ring_mul(a_digits[t], x_digits[t], p)) % p
        if off_exp is not None and off_exp < m:
            y[:, off_exp] = (y[:, off_exp] + 1) % p
        alpha, beta = _build_grids(fam, a_digits, b_digits, x_digits, y)
        g = _matmul(alpha, beta, p)
        i_arr, s_arr, sympl, latt = _classify(
            g, p, batch, need_lattice=fam.lattice_required
        )
        return i_arr, s_arr - i_arr, sympl, latt, y

    def run_batch(param_values: list[np.ndarray], off_exp: int | None,
                  fiber: str, expected: tuple[int, int]) -> None:
        nonlocal vcount, all_sympl, all_latt, checked
        i_arr, j_arr, sympl, latt, y = classify_params(param_values, off_exp)
        bad = (i_arr != expected[0]) | (j_arr != expected[1]) | ~sympl
        if fam.lattice_required:
            bad = bad | ~latt
            if not latt.all():
                all_latt = False
        if not sympl.all():
            all_sympl = False
        checked += param_values[0].shape[0]
        nbad = int(bad.sum())
        if nbad:
            vcount += nbad
            idxs = np.flatnonzero(bad)[: max(0, 32 - len(violations))]
            for bi in idxs:
                tag = fiber if sympl[bi] else fiber + ":not-symplectic"
                if fam.lattice_required and not latt[bi]:
                    tag = fiber + ":not-in-lattice"
                violations.append(
                    {
                        "fiber": tag,
                        "a": [int(param_values[t][bi]) for t in range(n)],
                        "b": int(param_values[n][bi]),
                        "x": [int(param_values[n + 1 + t][bi]) for t in range(n)],
                        "y": int(_values_from_digits(y[bi : bi + 1], p)[0]),
                        "computed": [int(i_arr[bi]), int(j_arr[bi])],
                        "expected": list(expected),
                    }
                )

    if mode == "exhaustive":
        total = fam.tuple_count
        for fiber, off_exp, expected in _fiber_plan(fam):
            done = 0
            while done < total:
                count = min(_CHUNK, total - done)
                idx = np.arange(done, done + count, dtype=np.int64)
                params = []
                rest = idx
                for _ in range(2 * n + 1):
                    params.append(rest % size)
                    rest = rest // size
                run_batch(params, off_exp, fiber, expected)
                done += count
    else:
        rng = np.random.default_rng(seed)
        for fiber, off_exp, expected in _fiber_plan(fam):
            done = 0
            while done < samples:
                count = min(_CHUNK, samples - done)
                params = [
                    rng.integers(0, size, size=count, dtype=np.int64)
                    for _ in range(2 * n + 1)
                ]
                run_batch(params, off_exp, fiber, expected)
                done += count

    crosschecked = 0
    if crosscheck > 0:
        # replay the exact lane's seeded draws through this engine and
        # let the scalar path confirm every verdict
        rng = random.Random(seed ^ 0xC0DE)
        verdicts: dict = {}
        for fiber, off_exp, _expected in _fiber_plan(fam):
            keys = [
                [rng.randrange(size) for _ in range(2 * n + 1)]
                for _ in range(crosscheck)
            ]
            params = [
                np.array([kp[t] for kp in keys], dtype=np.int64)
                for t in range(2 * n + 1)
            ]
            i_arr, j_arr, _, _, _ = classify_params(params, off_exp)
            for row, kp in enumerate(keys):
                verdicts[(fiber, tuple(kp))] = (int(i_arr[row]), int(j_arr[row]))
        crosschecked = crosscheck_exact(fam, verdicts, crosscheck, seed)

    strata = observe_strata(fam, seed=seed) if collect_strata else None
    mode_label = (
        "exhaustive" if mode == "exhaustive" else f"sampled(seed={seed}, count={samples})"
    )
    return VerificationReport(
        family=fam.descriptor(),
        mode=mode_label,
        engine="bulk",
        tuples_checked=checked,
        violations=violations,
        violation_count=vcount,
        all_symplectic=all_sympl,
        all_in_lattice=all_latt,
        strata=strata,
        crosschecked=crosschecked,
        elapsed_seconds=round(time.perf_counter() - start, 6),
    )
