"""Rank-two symplectic matrices over a local field and their coset data.

The antidiagonal form J (ones above the antidiagonal, minus ones below)
is fixed once; a matrix g is symplectic when g^T J g = J.  With this
form the inverse is the twisted transpose J^{-1} g^T J, diagonal
matrices diag(t^-i, t^-j, t^j, t^i) are symplectic, and the double
cosets of the maximal compact subgroup K (integral symplectic matrices)
are classified by the pair i >= j >= 0.

The classifier reads the pair off valuations: -i is the minimal
valuation over the sixteen entries, -(i+j) the minimal valuation over
the thirty-six two-by-two minors (the exterior-square entries).  Both
are exact computations; on the p-adic backend an entry whose leading
digit is below the tracked precision can never certifiably attain the
minimum, and the classifier refuses rather than guesses.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterator, Sequence

from .errors import DomainError, PrecisionError
from .localfield import INFINITY, Backend, FieldConfig, Scalar, integral_part

WEDGE_PAIRS: tuple[tuple[int, int], ...] = tuple(combinations(range(4), 2))


class Matrix4:
    """Immutable 4x4 matrix of scalars from one field configuration."""

    __slots__ = ("cfg", "rows")

    def __init__(self, cfg: FieldConfig, rows: Sequence[Sequence[Scalar]]):
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise DomainError("expected a 4x4 entry grid")
        self.cfg = cfg
        self.rows = tuple(tuple(r) for r in rows)

    @staticmethod
    def identity(cfg: FieldConfig) -> "Matrix4":
        one = Scalar.one(cfg)
        zero = Scalar.zero(cfg)
        return Matrix4(
            cfg, [[one if i == j else zero for j in range(4)] for i in range(4)]
        )

    @staticmethod
    def diagonal(cfg: FieldConfig, entries: Sequence[Scalar]) -> "Matrix4":
        if len(entries) != 4:
            raise DomainError("diagonal needs 4 entries")
        zero = Scalar.zero(cfg)
        return Matrix4(
            cfg,
            [[entries[i] if i == j else zero for j in range(4)] for i in range(4)],
        )

    @staticmethod
    def from_integers(cfg: FieldConfig, grid: Sequence[Sequence[int]]) -> "Matrix4":
        return Matrix4(
            cfg, [[Scalar.from_integer(cfg, n) for n in row] for row in grid]
        )

    def entry(self, i: int, j: int) -> Scalar:
        return self.rows[i][j]

    def entries(self) -> Iterator[Scalar]:
        for row in self.rows:
            yield from row

    def __mul__(self, other: "Matrix4") -> "Matrix4":
        if self.cfg != other.cfg:
            raise DomainError("matrix product across field configurations")
        a, b = self.rows, other.rows
        cols = tuple(zip(*b))
        out = []
        for i in range(4):
            ai = a[i]
            row = []
            for j in range(4):
                bj = cols[j]
                s = ai[0] * bj[0]
                for k in range(1, 4):
                    s = s + ai[k] * bj[k]
                row.append(s)
            out.append(row)
        return Matrix4(self.cfg, out)

    def transpose(self) -> "Matrix4":
        return Matrix4(self.cfg, tuple(zip(*self.rows)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix4):
            return NotImplemented
        return self.cfg == other.cfg and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.cfg, self.rows))

    def __repr__(self) -> str:
        from .localfield import format_scalar

        body = "; ".join(
            ", ".join(format_scalar(x) for x in row) for row in self.rows
        )
        return f"Matrix4[{body}]"


def symplectic_form(cfg: FieldConfig) -> Matrix4:
    """The fixed antidiagonal alternating form J."""
    z = Scalar.zero(cfg)
    o = Scalar.one(cfg)
    m = -o
    return Matrix4(cfg, [[z, z, z, o], [z, z, o, z], [z, m, z, z], [m, z, z, z]])


def coset_representative(cfg: FieldConfig, i: int, j: int) -> Matrix4:
    """diag(t^-i, t^-j, t^j, t^i), the double-coset base point for (i, j)."""
    if not i >= j >= 0:
        raise DomainError(f"coset pair needs i >= j >= 0, got ({i}, {j})")
    return Matrix4(
        cfg,
        Matrix4.diagonal(
            cfg,
            [
                Scalar.monomial(cfg, -i),
                Scalar.monomial(cfg, -j),
                Scalar.monomial(cfg, j),
                Scalar.monomial(cfg, i),
            ],
        ).rows,
    )


def _certify_zero(x: Scalar) -> bool:
    """True iff x = 0, False iff x != 0, PrecisionError if undecidable."""
    if x.is_exact_zero:
        return True
    if x.is_resolved:
        return False
    raise PrecisionError("entry comparison is below the tracked precision")


def is_symplectic(g: Matrix4) -> bool:
    """Exact test of g^T J g = J."""
    j = symplectic_form(g.cfg)
    lhs = g.transpose() * j * g
    return all(
        _certify_zero(a - b) for a, b in zip(lhs.entries(), j.entries())
    )


def symplectic_inverse(g: Matrix4) -> Matrix4:
    """J^{-1} g^T J; equals g^{-1} whenever g is symplectic."""
    gt = g.transpose().rows
    z = Scalar.zero(g.cfg)

    def neg(x: Scalar) -> Scalar:
        return z - x

    # J^{-1} M J for M = g^T: reverse both orders, twist signs in blocks
    out = [[z] * 4 for _ in range(4)]
    sign_row = (1, 1, -1, -1)
    for i in range(4):
        for j in range(4):
            src = gt[3 - i][3 - j]
            s = sign_row[i] * sign_row[j]
            out[i][j] = src if s == 1 else neg(src)
    return Matrix4(g.cfg, out)


def wedge_square(g: Matrix4) -> tuple[tuple[Scalar, ...], ...]:
    """The 6x6 exterior-square matrix of 2x2 minors, rows/cols by WEDGE_PAIRS."""
    r = g.rows
    out = []
    for (a, b) in WEDGE_PAIRS:
        row = []
        for (c, d) in WEDGE_PAIRS:
            row.append(r[a][c] * r[b][d] - r[a][d] * r[b][c])
        out.append(tuple(row))
    return tuple(out)


def _certified_min_valuation(xs: Iterator[Scalar]):
    """Minimal valuation over xs, refusing when precision hides the answer."""
    best = INFINITY
    floor = INFINITY
    for x in xs:
        lb = x.valuation_lower_bound()
        if x.is_resolved:
            v = x.valuation()
            if v < best:
                best = v
        elif lb < floor:
            floor = lb
    if floor < best:
        raise PrecisionError(
            "minimal valuation not certifiable at this precision"
        )
    return best


def min_valuation(g: Matrix4):
    return _certified_min_valuation(g.entries())


def cartan_invariants(g: Matrix4, check: bool = True) -> tuple[int, int]:
    """The double-coset pair (i, j) of a symplectic matrix.

    i = -min entry valuation, i + j = -min minor valuation.  With
    ``check`` the result is required to satisfy i >= j >= 0, which every
    symplectic matrix does; a violation flags non-symplectic input.
    """
    ev = _certified_min_valuation(g.entries())
    if ev == INFINITY:
        raise DomainError("zero matrix has no coset invariants")
    wv = _certified_min_valuation(x for row in wedge_square(g) for x in row)
    i = -ev
    j = -wv - i
    if check and not i >= j >= 0:
        raise DomainError(
            f"invariants ({i}, {j}) violate i >= j >= 0; input not symplectic"
        )
    return (i, j)


def length(g: Matrix4) -> int:
    """Word length of the coset of g: the larger Cartan exponent."""
    return cartan_invariants(g)[0]


def in_maximal_compact(g: Matrix4) -> bool:
    """Integral entries; membership in K for symplectic matrices."""
    return all(x.valuation_lower_bound() >= 0 for x in g.entries())


def in_polynomial_lattice(g: Matrix4) -> bool:
    """Every entry fixed by the integral part (series backend only).

    These are the points whose entries are polynomials in t^{-1}; they
    form the discrete subgroup the coset geometry is measured against.
    """
    if g.cfg.backend is not Backend.EQUAL_CHAR:
        from .errors import UnsupportedBackend

        raise UnsupportedBackend("the polynomial lattice lives in the series field")
    return all(integral_part(x) == x for x in g.entries())


# ----------------------------------------------------------------------
# seeded elements of the maximal compact subgroup


def _unipotent_upper(cfg: FieldConfig, r: Scalar, s: Scalar, t: Scalar) -> Matrix4:
    z = Scalar.zero(cfg)
    o = Scalar.one(cfg)
    return Matrix4(
        cfg,
        [
            [o, r, s, t],
            [z, o, z, s],
            [z, z, o, z - r],
            [z, z, z, o],
        ],
    )


def _unipotent_abelian(cfg: FieldConfig, s: Scalar, t: Scalar, u: Scalar) -> Matrix4:
    z = Scalar.zero(cfg)
    o = Scalar.one(cfg)
    return Matrix4(
        cfg,
        [
            [o, z, s, t],
            [z, o, u, s],
            [z, z, o, z],
            [z, z, z, o],
        ],
    )


def _torus_unit(cfg: FieldConfig, c1: int, c2: int) -> Matrix4:
    def mk(n: int) -> Scalar:
        return Scalar.from_integer(cfg, n)

    if cfg.backend is Backend.MIXED_CHAR:
        # only +-1 invert exactly among rational integers here
        if c1 not in (1, -1) or c2 not in (1, -1):
            raise DomainError("p-adic torus entries must be signs")
        return Matrix4.diagonal(cfg, [mk(c1), mk(c2), mk(c2), mk(c1)])
    p = cfg.p
    c1 %= p
    c2 %= p
    if c1 == 0 or c2 == 0:
        raise DomainError("torus entries must be residue units")
    inv1 = pow(c1, -1, p)
    inv2 = pow(c2, -1, p)
    return Matrix4.diagonal(cfg, [mk(c1), mk(c2), mk(inv2), mk(inv1)])


def make_random_compact(cfg: FieldConfig, seed: int, factors: int = 8) -> Matrix4:
    """A seeded integral symplectic matrix, reproducible by construction.

    Built as a product of torus units, integral unipotents of both
    shapes, their transposes, and the form matrix itself; every factor
    is symplectic with integral entries, hence so is the product.
    """
    h = (seed * 2_654_435_761 + 0x9E3779B9) & 0xFFFFFFFF

    def step(m: int) -> int:
        nonlocal h
        h = (h * 1_103_515_245 + 12_345) & 0x7FFFFFFF
        return h % m

    def digit_poly() -> Scalar:
        out = Scalar.zero(cfg)
        for e in range(3):
            d = step(cfg.p)
            if d:
                out = out + Scalar.monomial(cfg, e, d)
        return out

    g = Matrix4.identity(cfg)
    for _ in range(factors):
        kind = step(4)
        if kind == 0:
            if cfg.backend is Backend.MIXED_CHAR:
                f = _torus_unit(cfg, 1 - 2 * step(2), 1 - 2 * step(2))
            else:
                f = _torus_unit(cfg, 1 + step(cfg.p - 1), 1 + step(cfg.p - 1))
        elif kind == 1:
            f = _unipotent_upper(cfg, digit_poly(), digit_poly(), digit_poly())
        elif kind == 2:
            f = _unipotent_abelian(cfg, digit_poly(), digit_poly(), digit_poly())
        else:
            f = symplectic_form(cfg)
        if step(2):
            f = f.transpose()
        g = g * f
    return g
