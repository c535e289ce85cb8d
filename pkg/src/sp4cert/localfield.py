"""Exact arithmetic in non-archimedean local fields with prime residue field.

Two backends share one :class:`Scalar` type:

* ``EQUAL_CHAR`` -- the field of formal Laurent series F_p((t)) over the
  prime field, restricted to finitely supported elements (Laurent
  polynomials in the uniformizer).  Every ring operation is exact; the
  configured ``precision`` only guards against runaway support growth.

* ``MIXED_CHAR`` -- the p-adic field Q_p, uniformizer t = p.  Elements
  built from integers and powers of p by ring operations are exact
  (arbitrary-size mantissas); division by a unit introduces a tracked,
  never overstated, absolute precision.

The uniformizer is written ``t`` in the text format.  Valuation v is
normalized by v(t) = 1, the absolute value is |x| = q^{-v(x)} with
q = p, and v(0) = +infinity.

Besides field arithmetic the module provides the operators the rest of
the package is built on: the integral part [.] (keeps exponents <= 0,
series backend only), the digit truncation t_d (keeps exponents 0..d),
finite residue rings O/t^k with their canonical polynomial section, and
a deterministic seeded family of non-canonical sections used to check
that verified statements do not depend on the section choice.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterator

from .errors import (
    DomainError,
    PrecisionError,
    UnsupportedBackend,
    WrongCharacteristic,
)

INFINITY = float("inf")

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in _SMALL_PRIMES:
        if n == d:
            return True
        if n % d == 0:
            return False
    f = 49
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class Backend(str, Enum):
    """Which completion the scalars live in."""

    EQUAL_CHAR = "equal-char"  # F_p((t)), exact Laurent polynomials
    MIXED_CHAR = "mixed-char"  # Q_p, t = p, tracked absolute precision


@dataclass(frozen=True)
class FieldConfig:
    """Immutable description of the ambient local field.

    ``precision`` means: absolute precision exponent for the p-adic
    backend (results of unit division are known modulo t^precision
    relative to their valuation), and a support-window guard for the
    series backend (an exact result whose exponent span exceeds it
    raises :class:`PrecisionError` instead of silently ballooning).
    """

    p: int
    backend: Backend = Backend.EQUAL_CHAR
    precision: int = 128

    def __post_init__(self) -> None:
        if not _is_prime(self.p):
            raise DomainError(f"residue characteristic must be prime, got {self.p}")
        if self.precision < 4:
            raise DomainError("precision guard must be at least 4")
        if not isinstance(self.backend, Backend):
            object.__setattr__(self, "backend", Backend(self.backend))

    @property
    def q(self) -> int:
        """Residue field size (prime residue fields only)."""
        return self.p

    @property
    def two_valuation(self) -> int:
        """v(2) in this field; undefined for the binary series field."""
        if self.backend is Backend.MIXED_CHAR:
            return 1 if self.p == 2 else 0
        if self.p == 2:
            raise WrongCharacteristic(
                "v(2) is undefined in a characteristic-2 series field"
            )
        return 0


class Scalar:
    """One element of the configured local field.

    Internables: ``_v`` is the valuation (int, or +infinity for zero),
    ``_c`` the series coefficient tuple (equal characteristic: first and
    last entries nonzero), ``_u``/``_prec`` the p-adic unit mantissa and
    absolute precision (``_u == 0`` with finite ``_prec`` encodes a
    value only known to vanish modulo t^prec).  Instances are immutable
    and hashable; arithmetic never mutates.
    """

    __slots__ = ("cfg", "_v", "_c", "_u", "_prec")

    def __init__(self, cfg: FieldConfig, v, c=None, u=None, prec=None):
        self.cfg = cfg
        self._v = v
        self._c = c
        self._u = u
        self._prec = prec

    # ------------------------------------------------------------------
    # constructors

    @staticmethod
    def zero(cfg: FieldConfig) -> "Scalar":
        if cfg.backend is Backend.EQUAL_CHAR:
            return Scalar(cfg, INFINITY, c=())
        return Scalar(cfg, INFINITY, u=0, prec=INFINITY)

    @staticmethod
    def one(cfg: FieldConfig) -> "Scalar":
        return Scalar.monomial(cfg, 0, 1)

    @staticmethod
    def monomial(cfg: FieldConfig, exponent: int, coeff: int = 1) -> "Scalar":
        """coeff * t^exponent (coeff an integer, reduced as appropriate)."""
        if cfg.backend is Backend.EQUAL_CHAR:
            c = coeff % cfg.p
            if c == 0:
                return Scalar.zero(cfg)
            return Scalar(cfg, exponent, c=(c,))
        if coeff == 0:
            return Scalar.zero(cfg)
        v, u = _split_p(coeff, cfg.p)
        return Scalar(cfg, exponent + v, u=u, prec=INFINITY)

    @staticmethod
    def from_integer(cfg: FieldConfig, n: int) -> "Scalar":
        """Image of the rational integer n."""
        return Scalar.monomial(cfg, 0, n)

    @staticmethod
    def from_coeffs(cfg: FieldConfig, valuation: int, coeffs) -> "Scalar":
        """Series element sum_i coeffs[i] * t^(valuation+i) (equal char)."""
        if cfg.backend is not Backend.EQUAL_CHAR:
            raise UnsupportedBackend("coefficient vectors describe series elements")
        return _make_series(cfg, valuation, [c % cfg.p for c in coeffs])

    @staticmethod
    def inexact_zero(cfg: FieldConfig, prec: int) -> "Scalar":
        """p-adic element known only to vanish modulo t^prec."""
        if cfg.backend is not Backend.MIXED_CHAR:
            raise UnsupportedBackend("series arithmetic is exact; no inexact zeros")
        return Scalar(cfg, prec, u=0, prec=prec)

    # ------------------------------------------------------------------
    # predicates and accessors

    @property
    def is_exact_zero(self) -> bool:
        return self._v is INFINITY or self._v == INFINITY

    @property
    def is_resolved(self) -> bool:
        """True when leading digit (hence valuation) is certain."""
        if self.cfg.backend is Backend.EQUAL_CHAR:
            return True
        return self._u != 0 or self._prec == INFINITY

    def valuation(self):
        """v(x); +infinity for exact zero; PrecisionError if uncertifiable."""
        if self.cfg.backend is Backend.EQUAL_CHAR:
            return self._v
        if self._u != 0:
            return self._v
        if self._prec == INFINITY:
            return INFINITY
        raise PrecisionError(
            f"element is O(t^{self._prec}); valuation not certifiable"
        )

    def valuation_lower_bound(self):
        """Certified lower bound for v(x) (exact when resolved)."""
        if self.cfg.backend is Backend.EQUAL_CHAR:
            return self._v
        if self._u != 0:
            return self._v
        return self._prec  # INFINITY for exact zero

    def norm(self) -> Fraction:
        """|x| = q^{-v(x)} as an exact rational (0 for zero)."""
        v = self.valuation()
        if v == INFINITY:
            return Fraction(0)
        q = self.cfg.q
        return Fraction(q ** (-v)) if v <= 0 else Fraction(1, q**v)

    def residue_digit(self, exponent: int) -> int:
        """Coefficient of t^exponent in the digit expansion (must be certain)."""
        if self.cfg.backend is Backend.EQUAL_CHAR:
            if self._v is INFINITY or not self._v <= exponent < self._v + len(self._c):
                return 0
            return self._c[exponent - self._v]
        if self._prec != INFINITY and exponent >= self._prec:
            raise PrecisionError(f"digit at t^{exponent} beyond precision {self._prec}")
        if self._u == 0:
            return 0
        if exponent < self._v:
            return 0
        if self._u < 0:
            raise PrecisionError(
                "digit expansion of a negative exact mantissa is infinite; "
                "reduce into a residue ring first"
            )
        return self._u // self.cfg.p ** (exponent - self._v) % self.cfg.p

    def support(self) -> tuple[int, int] | None:
        """(min exponent, max exponent) of the series support, None for 0."""
        if self.cfg.backend is not Backend.EQUAL_CHAR:
            raise UnsupportedBackend("support is a series-backend notion")
        if self._v is INFINITY:
            return None
        return (self._v, self._v + len(self._c) - 1)

    # ------------------------------------------------------------------
    # ring structure

    def __add__(self, other: "Scalar") -> "Scalar":
        cfg = self.cfg
        if cfg.backend is Backend.EQUAL_CHAR:
            return _series_add(cfg, self, other, 1)
        return _padic_add(cfg, self, other, 1)

    def __sub__(self, other: "Scalar") -> "Scalar":
        cfg = self.cfg
        if cfg.backend is Backend.EQUAL_CHAR:
            return _series_add(cfg, self, other, -1)
        return _padic_add(cfg, self, other, -1)

    def __neg__(self) -> "Scalar":
        cfg = self.cfg
        if cfg.backend is Backend.EQUAL_CHAR:
            if self._v is INFINITY:
                return self
            p = cfg.p
            return Scalar(cfg, self._v, c=tuple((-d) % p for d in self._c))
        if self._u == 0:
            return self
        u = -self._u
        if self._prec != INFINITY:
            u %= cfg.p ** (self._prec - self._v)
        return Scalar(cfg, self._v, u=u, prec=self._prec)

    def __mul__(self, other: "Scalar") -> "Scalar":
        cfg = self.cfg
        if cfg.backend is Backend.EQUAL_CHAR:
            return _series_mul(cfg, self, other)
        return _padic_mul(cfg, self, other)

    def __pow__(self, n: int) -> "Scalar":
        if n < 0:
            raise DomainError("negative powers need div_by_unit")
        out = Scalar.one(self.cfg)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def scale(self, n: int) -> "Scalar":
        """Multiply by the rational integer n."""
        return self * Scalar.from_integer(self.cfg, n)

    def shift(self, e: int) -> "Scalar":
        """Multiply by t^e."""
        if self.is_exact_zero:
            return self
        cfg = self.cfg
        if cfg.backend is Backend.EQUAL_CHAR:
            return Scalar(cfg, self._v + e, c=self._c)
        prec = self._prec if self._prec == INFINITY else self._prec + e
        return Scalar(cfg, self._v + e, u=self._u, prec=prec)

    def div_by_unit(self, other: "Scalar") -> "Scalar":
        """x / y for a unit y (v(y) = 0); exact when representable."""
        cfg = self.cfg
        if not other.is_resolved:
            raise PrecisionError("divisor is an unresolved zero")
        if other.valuation() != 0:
            raise DomainError("div_by_unit requires a divisor of valuation 0")
        if cfg.backend is Backend.EQUAL_CHAR:
            return _series_div(cfg, self, other)
        return _padic_div(cfg, self, other)

    # ------------------------------------------------------------------
    # comparison / hashing / repr

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scalar):
            return NotImplemented
        if self.cfg != other.cfg:
            return False
        if self.cfg.backend is Backend.EQUAL_CHAR:
            if self._v is INFINITY or self._v == INFINITY:
                return other._v == INFINITY
            return self._v == other._v and self._c == other._c
        return (
            self._v == other._v
            and self._prec == other._prec
            and _unit_key(self) == _unit_key(other)
        )

    def __hash__(self) -> int:
        if self.cfg.backend is Backend.EQUAL_CHAR:
            return hash((self.cfg.p, "s", self._v, self._c))
        return hash((self.cfg.p, "m", self._v, self._prec, _unit_key(self)))

    def __repr__(self) -> str:
        return f"Scalar({format_scalar(self)!r})"


def _unit_key(x: Scalar):
    # exact negative mantissas compare by value, reduced ones literally
    return x._u


def _split_p(n: int, p: int) -> tuple[int, int]:
    """n = u * p^v with p not dividing u (n nonzero)."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v, n


def _make_series(cfg: FieldConfig, v: int, coeffs: list[int]) -> Scalar:
    lo = 0
    hi = len(coeffs)
    while hi > lo and coeffs[hi - 1] == 0:
        hi -= 1
    while lo < hi and coeffs[lo] == 0:
        lo += 1
    if lo == hi:
        return Scalar.zero(cfg)
    if hi - lo > cfg.precision:
        raise PrecisionError(
            f"series support width {hi - lo} exceeds the window guard "
            f"{cfg.precision}"
        )
    return Scalar(cfg, v + lo, c=tuple(coeffs[lo:hi]))


def _series_add(cfg: FieldConfig, a: Scalar, b: Scalar, sign: int) -> Scalar:
    if a._v is INFINITY or a._v == INFINITY:
        return b if sign == 1 else -b
    if b._v is INFINITY or b._v == INFINITY:
        return a
    p = cfg.p
    v = min(a._v, b._v)
    n = max(a._v + len(a._c), b._v + len(b._c)) - v
    out = [0] * n
    off = a._v - v
    for idx, d in enumerate(a._c):
        out[off + idx] = d
    off = b._v - v
    if sign == 1:
        for idx, d in enumerate(b._c):
            j = off + idx
            out[j] = (out[j] + d) % p
    else:
        for idx, d in enumerate(b._c):
            j = off + idx
            out[j] = (out[j] - d) % p
    return _make_series(cfg, v, out)


def _series_mul(cfg: FieldConfig, a: Scalar, b: Scalar) -> Scalar:
    if a._v is INFINITY or b._v is INFINITY or a._v == INFINITY or b._v == INFINITY:
        return Scalar.zero(cfg)
    p = cfg.p
    ca, cb = a._c, b._c
    if len(ca) == 1:
        d = ca[0]
        return Scalar(cfg, a._v + b._v, c=tuple(d * e % p for e in cb))
    if len(cb) == 1:
        d = cb[0]
        return Scalar(cfg, a._v + b._v, c=tuple(d * e % p for e in ca))
    out = [0] * (len(ca) + len(cb) - 1)
    for i, d in enumerate(ca):
        if d:
            for j, e in enumerate(cb):
                out[i + j] += d * e
    return _make_series(cfg, a._v + b._v, [c % p for c in out])


def _series_div(cfg: FieldConfig, a: Scalar, b: Scalar) -> Scalar:
    """Exact Laurent division by a unit; PrecisionError if not finite."""
    if a._v is INFINITY or a._v == INFINITY:
        return a
    p = cfg.p
    ca, cb = a._c, b._c
    inv_lead = pow(cb[0], -1, p)
    if len(cb) == 1:
        return Scalar(cfg, a._v - b._v, c=tuple(d * inv_lead % p for d in ca))
    # long division digit recursion, then certify by back-multiplication
    n = cfg.precision + len(ca)
    quot = [0] * n
    for i in range(n):
        acc = ca[i] if i < len(ca) else 0
        for j in range(1, min(i, len(cb) - 1) + 1):
            acc -= cb[j] * quot[i - j]
        quot[i] = acc * inv_lead % p
    hi = n
    while hi and quot[hi - 1] == 0:
        hi -= 1
    cand = Scalar(cfg, a._v - b._v, c=tuple(quot[:hi]))
    if _series_mul(cfg, cand, b) != a:
        raise PrecisionError(
            "quotient is an infinite series; not representable exactly"
        )
    if hi > cfg.precision:
        raise PrecisionError(
            f"series support width {hi} exceeds the window guard {cfg.precision}"
        )
    return cand


def _padic_add(cfg: FieldConfig, a: Scalar, b: Scalar, sign: int) -> Scalar:
    p = cfg.p
    pa = a._prec
    pb = b._prec
    prec = pa if pa <= pb else pb
    if a._u == 0 and b._u == 0:
        if prec == INFINITY:
            return Scalar.zero(cfg)
        return Scalar.inexact_zero(cfg, prec)
    if a._u == 0:
        x = b if sign == 1 else -b
        return _clip_prec(cfg, x, prec)
    if b._u == 0:
        return _clip_prec(cfg, a, prec)
    e = min(a._v, b._v)
    m = a._u * p ** (a._v - e)
    n = b._u * p ** (b._v - e)
    m = m + n if sign == 1 else m - n
    if prec != INFINITY:
        m %= p ** (prec - e)
    if m == 0:
        if prec == INFINITY:
            return Scalar.zero(cfg)
        return Scalar.inexact_zero(cfg, prec)
    dv, u = _split_p(m, p)
    v = e + dv
    if prec != INFINITY and v >= prec:
        return Scalar.inexact_zero(cfg, prec)
    return Scalar(cfg, v, u=u, prec=prec)


def _clip_prec(cfg: FieldConfig, x: Scalar, prec) -> Scalar:
    if prec == INFINITY or x._prec <= prec:
        return x
    if x._v >= prec:
        return Scalar.inexact_zero(cfg, prec)
    u = x._u % cfg.p ** (prec - x._v)
    if u == 0:
        return Scalar.inexact_zero(cfg, prec)
    dv, u = _split_p(u, cfg.p)
    if dv:
        v = x._v + dv
        if v >= prec:
            return Scalar.inexact_zero(cfg, prec)
        return Scalar(cfg, v, u=u, prec=prec)
    return Scalar(cfg, x._v, u=u, prec=prec)


def _padic_mul(cfg: FieldConfig, a: Scalar, b: Scalar) -> Scalar:
    p = cfg.p
    if a._u == 0 or b._u == 0:
        if a._prec == INFINITY and a._u == 0:
            return Scalar.zero(cfg)
        if b._prec == INFINITY and b._u == 0:
            return Scalar.zero(cfg)
        # O(t^Pa) * (u t^vb + O(t^Pb)) = O(t^(Pa+vb)) etc.
        bound_a = a._prec if a._u == 0 else a._v
        bound_b = b._prec if b._u == 0 else b._v
        return Scalar.inexact_zero(cfg, bound_a + bound_b)
    v = a._v + b._v
    prec = min(
        a._prec + b._v if a._prec != INFINITY else INFINITY,
        b._prec + a._v if b._prec != INFINITY else INFINITY,
    )
    u = a._u * b._u
    if prec != INFINITY:
        u %= p ** (prec - v)
        if u == 0:
            return Scalar.inexact_zero(cfg, prec)
        dv, u = _split_p(u, p)
        if dv:
            v += dv
            if v >= prec:
                return Scalar.inexact_zero(cfg, prec)
    return Scalar(cfg, v, u=u, prec=prec)


def _padic_div(cfg: FieldConfig, a: Scalar, b: Scalar) -> Scalar:
    p = cfg.p
    if a._u == 0:
        return a if a._prec == INFINITY else Scalar.inexact_zero(cfg, a._prec)
    rel_a = a._prec - a._v if a._prec != INFINITY else INFINITY
    rel_b = b._prec if b._prec != INFINITY else INFINITY
    rel = min(rel_a, rel_b, cfg.precision)
    mod = p**rel
    u = a._u * pow(b._u % mod, -1, mod) % mod
    if u == 0:
        return Scalar.inexact_zero(cfg, a._v + rel)
    dv, u = _split_p(u, p)
    v = a._v + dv
    prec = a._v + rel
    if v >= prec:
        return Scalar.inexact_zero(cfg, prec)
    return Scalar(cfg, v, u=u, prec=prec)


# ----------------------------------------------------------------------
# integral part and truncation


def integral_part(x: Scalar) -> Scalar:
    """[x]: drop every monomial with exponent > 0 (series backend).

    The image lies in F_p[t^-1]; x - [x] has valuation >= 1.
    """
    cfg = x.cfg
    if cfg.backend is not Backend.EQUAL_CHAR:
        raise UnsupportedBackend("integral part needs the series backend")
    if x._v is INFINITY or x._v == INFINITY:
        return x
    if x._v > 0:
        return Scalar.zero(cfg)
    keep = min(len(x._c), 1 - x._v)
    return _make_series(cfg, x._v, list(x._c[:keep]))


def truncate(x: Scalar, d: int) -> Scalar:
    """t_d(x): keep the digits of t^0 .. t^d (requires x integral)."""
    if d < 0:
        raise DomainError("truncation depth must be nonnegative")
    cfg = x.cfg
    if cfg.backend is Backend.EQUAL_CHAR:
        if x._v is INFINITY or x._v == INFINITY:
            return x
        if x._v < 0:
            raise DomainError("truncation is defined on integral elements")
        if x._v > d:
            return Scalar.zero(cfg)
        keep = min(len(x._c), d + 1 - x._v)
        return _make_series(cfg, x._v, list(x._c[:keep]))
    if x._u == 0:
        if x._prec == INFINITY:
            return x
        if x._prec >= d + 1:
            return Scalar.zero(cfg)
        raise PrecisionError("digits beyond the tracked precision")
    if x._v < 0:
        raise DomainError("truncation is defined on integral elements")
    if x._prec != INFINITY and x._prec < d + 1:
        raise PrecisionError("digits beyond the tracked precision")
    m = x._u * x.cfg.p**x._v % x.cfg.p ** (d + 1)
    return Scalar.from_integer(cfg, m)


# ----------------------------------------------------------------------
# residue rings O / t^k and sections


class ResidueRing:
    """The finite quotient O/t^k of the valuation ring."""

    __slots__ = ("cfg", "k", "_mod")

    def __init__(self, cfg: FieldConfig, k: int):
        if k < 1:
            raise DomainError("residue ring needs modulus exponent k >= 1")
        self.cfg = cfg
        self.k = k
        self._mod = cfg.p**k

    @property
    def size(self) -> int:
        return self._mod

    def element(self, value: int) -> "ResidueElement":
        return ResidueElement(self, value % self._mod)

    @property
    def zero(self) -> "ResidueElement":
        return ResidueElement(self, 0)

    @property
    def one(self) -> "ResidueElement":
        return ResidueElement(self, 1)

    def monomial(self, e: int, coeff: int = 1) -> "ResidueElement":
        """coeff * t^e reduced into the ring (0 when e >= k)."""
        if e < 0:
            raise DomainError("residue ring holds integral elements only")
        if e >= self.k:
            return self.zero
        return ResidueElement(self, coeff % self.cfg.p * self.cfg.p**e % self._mod)

    def from_scalar(self, x: Scalar) -> "ResidueElement":
        """Reduce an integral scalar modulo t^k."""
        cfg = self.cfg
        if cfg.backend is Backend.EQUAL_CHAR:
            if x._v is not INFINITY and x._v != INFINITY and x._v < 0:
                raise DomainError("cannot reduce a non-integral element")
            n = 0
            if x._v is not INFINITY and x._v != INFINITY:
                for idx, dgt in enumerate(x._c):
                    e = x._v + idx
                    if e >= self.k:
                        break
                    n += dgt * cfg.p**e
            return ResidueElement(self, n)
        if x._u == 0:
            if x._prec == INFINITY or x._prec >= self.k:
                return self.zero
            raise PrecisionError("precision below the residue modulus")
        if x._v < 0:
            raise DomainError("cannot reduce a non-integral element")
        if x._prec != INFINITY and x._prec < self.k:
            raise PrecisionError("precision below the residue modulus")
        return ResidueElement(self, x._u * cfg.p**x._v % self._mod)

    def elements(self) -> Iterator["ResidueElement"]:
        for n in range(self._mod):
            yield ResidueElement(self, n)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ResidueRing)
            and other.cfg == self.cfg
            and other.k == self.k
        )

    def __hash__(self) -> int:
        return hash((self.cfg, self.k))

    def __repr__(self) -> str:
        return f"ResidueRing(p={self.cfg.p}, k={self.k})"


class ResidueElement:
    """Element of O/t^k, stored as an integer in [0, p^k)."""

    __slots__ = ("ring", "n")

    def __init__(self, ring: ResidueRing, n: int):
        self.ring = ring
        self.n = n

    def digits(self) -> tuple[int, ...]:
        p = self.ring.cfg.p
        n = self.n
        out = []
        for _ in range(self.ring.k):
            out.append(n % p)
            n //= p
        return tuple(out)

    def _from_digits(self, digits) -> "ResidueElement":
        p = self.ring.cfg.p
        n = 0
        for d in reversed(list(digits)):
            n = n * p + d % p
        return ResidueElement(self.ring, n)

    def __add__(self, other: "ResidueElement") -> "ResidueElement":
        # the series quotient is carry-free; only the t = p backend carries
        if self.ring.cfg.backend is Backend.EQUAL_CHAR:
            return self._from_digits(
                a + b for a, b in zip(self.digits(), other.digits())
            )
        return ResidueElement(self.ring, (self.n + other.n) % self.ring._mod)

    def __sub__(self, other: "ResidueElement") -> "ResidueElement":
        if self.ring.cfg.backend is Backend.EQUAL_CHAR:
            return self._from_digits(
                a - b for a, b in zip(self.digits(), other.digits())
            )
        return ResidueElement(self.ring, (self.n - other.n) % self.ring._mod)

    def __mul__(self, other: "ResidueElement") -> "ResidueElement":
        if self.ring.cfg.backend is Backend.EQUAL_CHAR:
            da = self.digits()
            db = other.digits()
            k = self.ring.k
            out = [0] * k
            for e, a in enumerate(da):
                if a:
                    for f in range(k - e):
                        out[e + f] += a * db[f]
            return self._from_digits(out)
        return ResidueElement(self.ring, self.n * other.n % self.ring._mod)

    def __neg__(self) -> "ResidueElement":
        if self.ring.cfg.backend is Backend.EQUAL_CHAR:
            return self._from_digits(-a for a in self.digits())
        return ResidueElement(self.ring, -self.n % self.ring._mod)

    def halve(self) -> "ResidueElement":
        """Multiply by the inverse of 2 (odd characteristic only)."""
        if self.ring.cfg.p == 2:
            raise WrongCharacteristic("2 is not a unit modulo t^k when p = 2")
        if self.ring.cfg.backend is Backend.EQUAL_CHAR:
            inv2 = pow(2, -1, self.ring.cfg.p)
            return self._from_digits(a * inv2 for a in self.digits())
        inv2 = pow(2, -1, self.ring._mod)
        return ResidueElement(self.ring, self.n * inv2 % self.ring._mod)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ResidueElement)
            and other.ring == self.ring
            and other.n == self.n
        )

    def __hash__(self) -> int:
        return hash((self.ring.cfg.p, self.ring.k, self.n))

    def __repr__(self) -> str:
        return f"ResidueElement({self.n} mod t^{self.ring.k})"


Section = Callable[[ResidueElement], Scalar]


def canonical_section(r: ResidueElement) -> Scalar:
    """The polynomial digit lift O/t^k -> O (digits reproduced verbatim)."""
    cfg = r.ring.cfg
    if cfg.backend is Backend.EQUAL_CHAR:
        p = cfg.p
        n = r.n
        coeffs = []
        while n:
            coeffs.append(n % p)
            n //= p
        return _make_series(cfg, 0, coeffs)
    return Scalar.from_integer(cfg, r.n)


def make_random_section(seed: int) -> Section:
    """A deterministic non-canonical section, for section-independence tests.

    Adds a seeded multiple of t^k to every canonical lift, so the result
    still reduces to the argument but differs from the polynomial lift.
    """

    def section(r: ResidueElement) -> Scalar:
        cfg = r.ring.cfg
        k = r.ring.k
        h = (seed * 1_000_003 + r.n * 7_919 + k * 104_729) & 0xFFFFFFFF
        lift = canonical_section(r)
        bump = Scalar.zero(cfg)
        for t in range(3):
            h = (h * 1_103_515_245 + 12_345) & 0x7FFFFFFF
            digit = h % cfg.p
            if digit:
                bump = bump + Scalar.monomial(cfg, k + t, digit)
        return lift + bump

    return section


# ----------------------------------------------------------------------
# text format: signed-exponent monomial sums in the symbol t

_TERM_RE = re.compile(r"^(?P<coeff>\d+)?(?P<mono>\*?t(?:\^(?P<exp>-?\d+))?)?$")


def format_scalar(x: Scalar) -> str:
    """Render as a monomial sum, e.g. ``2*t^-3 + 1 + t^2``.

    p-adic elements of finite precision carry a trailing ``O(t^N)``
    marker; exact elements never do.
    """
    cfg = x.cfg
    if cfg.backend is Backend.EQUAL_CHAR:
        if x._v is INFINITY or x._v == INFINITY:
            return "0"
        terms = [
            _format_term(d, x._v + i) for i, d in enumerate(x._c) if d
        ]
        return " + ".join(terms)
    if x._u == 0:
        if x._prec == INFINITY:
            return "0"
        return f"O(t^{x._prec})"
    p = cfg.p
    u = x._u
    neg = u < 0
    if neg:
        u = -u
    terms = []
    e = x._v
    while u:
        d = u % p
        if d:
            terms.append(_format_term(d, e, neg))
        u //= p
        e += 1
    s = " + ".join(terms).replace("+ -", "- ")
    if x._prec != INFINITY:
        s += f" + O(t^{x._prec})"
    return s


def _format_term(coeff: int, exp: int, negate: bool = False) -> str:
    if negate:
        coeff = -coeff
    sign = "-" if coeff < 0 else ""
    mag = abs(coeff)
    if exp == 0:
        return f"{sign}{mag}"
    t = "t" if exp == 1 else f"t^{exp}"
    if mag == 1:
        return f"{sign}{t}"
    return f"{sign}{mag}*{t}"


def parse_scalar(cfg: FieldConfig, text: str) -> Scalar:
    """Inverse of :func:`format_scalar` (accepts any integer coefficients)."""
    s = text.strip()
    if not s:
        raise DomainError("empty scalar text")
    prec = INFINITY
    m = re.search(r"\+?\s*O\(t\^(?P<prec>[+-]?\d+)\)\s*$", s)
    if m:
        if cfg.backend is not Backend.MIXED_CHAR:
            raise DomainError("precision markers only occur for p-adic scalars")
        prec = int(m.group("prec"))
        s = s[: m.start()].strip()
        if not s:
            return Scalar.inexact_zero(cfg, prec)
    out = Scalar.zero(cfg)
    # exponent signs (t^-3) must survive the term split
    normalized = s.replace(" ", "").replace("^-", "^\x00")
    normalized = normalized.replace("-", "+-").replace("\x00", "-")
    for chunk in normalized.split("+"):
        if not chunk:
            continue
        sign = 1
        if chunk[0] == "-":
            sign = -1
            chunk = chunk[1:]
        m = _TERM_RE.match(chunk)
        if not m or (m.group("coeff") is None and m.group("mono") is None):
            raise DomainError(f"cannot parse scalar term {chunk!r}")
        coeff = sign * (int(m.group("coeff")) if m.group("coeff") else 1)
        if m.group("mono"):
            exp = int(m.group("exp")) if m.group("exp") else 1
        else:
            exp = 0
        out = out + Scalar.monomial(cfg, exp, coeff)
    if prec != INFINITY:
        out = _clip_prec(cfg, out, prec)
        if out._u == 0 and out._prec > prec:
            out = Scalar.inexact_zero(cfg, prec)
        else:
            out = Scalar(cfg, out._v, u=out._u, prec=min(out._prec, prec))
    return out
