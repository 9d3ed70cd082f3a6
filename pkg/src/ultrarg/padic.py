"""Truncated arithmetic in Q_p and Q_p^d.

A nonzero scalar is stored as ``p**valuation * unit`` where ``unit`` is an
integer in ``[0, p**precision)`` not divisible by ``p``.  The stored digits
``a_j`` therefore cover the absolute index window
``[valuation, valuation + precision)``; everything at or above
``valuation + precision`` is unknown.

Window rule for binary operations
---------------------------------
* ``add``/``sub``: the result is known below the smaller of the two absolute
  precisions ``valuation + precision``.  If no nonzero digit survives in that
  window the result is the canonical ZERO.
* ``mul``/``div``: valuations add (subtract); the relative precision is the
  smaller of the two relative precisions.

ZERO is an explicit sentinel (``valuation is None``) and is treated as exact.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

__all__ = [
    "DEFAULT_PRECISION",
    "PadicError",
    "PrecisionError",
    "PadicScalar",
    "PadicPoint",
    "UnitFraction",
    "parse_padic",
    "format_padic",
    "norm",
    "val",
    "add",
    "sub",
    "neg",
    "mul",
    "polar_part",
    "character",
    "character_value",
    "point_norm",
    "dot",
    "embed",
]

DEFAULT_PRECISION = 64
_DIGITS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"
_LITERAL = re.compile(r"^([0-9A-Z]+)(?:\.([0-9A-Z]+))?$")
_RATIONAL = re.compile(r"^(-?\d+)/(\d+)$")


class PadicError(ValueError):
    """Malformed input or incompatible operands."""


class PrecisionError(PadicError):
    """The requested digits lie outside the reliable window."""


@lru_cache(maxsize=4096)
def _ppow(p: int, n: int) -> int:
    return p**n


def _strip(p: int, n: int) -> tuple[int, int]:
    """Split ``n != 0`` as ``p**t * u`` with ``p`` not dividing ``u``."""
    if p == 2:
        t = (n & -n).bit_length() - 1
        return t, n >> t
    t = 0
    while n % p == 0:
        n //= p
        t += 1
    return t, n


class PadicScalar:
    """Element of Q_p known on a finite digit window.

    Parameters
    ----------
    prime : int
        The residue characteristic ``p``.
    valuation : int or None
        Index of the first stored digit; ``None`` builds ZERO.
    digits : sequence of int
        Digits ``a_valuation, a_valuation+1, ...`` each in ``[0, p)``.  The
        first one must be nonzero.  The precision is ``len(digits)``.
    """

    __slots__ = ("prime", "valuation", "unit", "precision")

    def __init__(self, prime: int, valuation: int | None, digits: Sequence[int] = ()):
        if prime < 2:
            raise PadicError(f"prime must be >= 2, got {prime}")
        digits = tuple(int(a) for a in digits)
        if any(a < 0 or a >= prime for a in digits):
            raise PadicError(f"digits must lie in [0, {prime})")
        if valuation is None or not digits:
            if any(digits):
                raise PadicError("ZERO carries no nonzero digits")
            self._set(prime, None, 0, 0)
            return
        if digits[0] == 0:
            raise PadicError("leading digit (at the valuation) must be nonzero")
        unit = 0
        for a in reversed(digits):
            unit = unit * prime + a
        self._set(prime, int(valuation), unit, len(digits))

    def _set(self, prime, valuation, unit, precision):
        object.__setattr__(self, "prime", prime)
        object.__setattr__(self, "valuation", valuation)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "precision", precision)

    def __setattr__(self, name, value):
        raise AttributeError("PadicScalar is immutable")

    @classmethod
    def _make(cls, prime: int, valuation: int | None, unit: int, precision: int) -> PadicScalar:
        obj = _new(cls)
        _set_prime(obj, prime)
        _set_val(obj, valuation)
        _set_unit(obj, unit)
        _set_prec(obj, precision)
        return obj

    @classmethod
    def zero(cls, prime: int) -> PadicScalar:
        return cls._make(prime, None, 0, 0)

    @classmethod
    def from_int(cls, n: int, prime: int, precision: int = DEFAULT_PRECISION) -> PadicScalar:
        if n == 0:
            return cls.zero(prime)
        t, u = _strip(prime, abs(n))
        if n < 0:
            u = -u
        return cls._make(prime, t, u % _ppow(prime, precision), precision)

    @classmethod
    def from_fraction(
        cls, q: Fraction | int, prime: int, precision: int = DEFAULT_PRECISION
    ) -> PadicScalar:
        """Expand a rational number to ``precision`` digits past its valuation."""
        if type(q) is not Fraction:
            q = Fraction(q)
        num, den = q.numerator, q.denominator
        if not num:
            return cls.zero(prime)
        tn, un = _strip(prime, num if num > 0 else -num)
        td, ud = _strip(prime, den) if den % prime == 0 else (0, den)
        if num < 0:
            un = -un
        mod = _ppow(prime, precision)
        unit = (un * pow(ud, -1, mod)) % mod
        return cls._make(prime, tn - td, unit, precision)

    @property
    def is_zero(self) -> bool:
        return self.valuation is None

    @property
    def digits(self) -> tuple[int, ...]:
        """Stored digits, ascending from the valuation."""
        out = []
        u, p = self.unit, self.prime
        for _ in range(self.precision):
            u, a = divmod(u, p)
            out.append(a)
        return tuple(out)

    @property
    def absolute_precision(self) -> float:
        """First unknown digit index (``inf`` for ZERO)."""
        if self.is_zero:
            return math.inf
        return self.valuation + self.precision

    def digit(self, j: int) -> int:
        """Digit ``a_j``; raises if ``j`` is beyond the reliable window."""
        if self.is_zero:
            return 0
        if j < self.valuation:
            return 0
        if j >= self.valuation + self.precision:
            raise PrecisionError(f"digit {j} is beyond the reliable window")
        return (self.unit // _ppow(self.prime, j - self.valuation)) % self.prime

    def shift(self, k: int) -> PadicScalar:
        """Exact multiplication by ``p**k``."""
        if self.is_zero:
            return self
        return PadicScalar._make(self.prime, self.valuation + k, self.unit, self.precision)

    def to_fraction(self) -> Fraction:
        """Rational value of the stored digits (the canonical truncation)."""
        if self.is_zero:
            return Fraction(0)
        v = self.valuation
        if v >= 0:
            return Fraction(self.unit * _ppow(self.prime, v))
        return Fraction(self.unit, _ppow(self.prime, -v))

    def to_json(self) -> dict:
        return {"p": self.prime, "val": self.valuation, "digits": list(self.digits)}

    @classmethod
    def from_json(cls, obj: dict) -> PadicScalar:
        return cls(int(obj["p"]), obj.get("val"), obj.get("digits", ()))

    def __eq__(self, other):
        if not isinstance(other, PadicScalar):
            return NotImplemented
        return (
            self.prime == other.prime
            and self.valuation == other.valuation
            and self.unit == other.unit
            and self.precision == other.precision
        )

    def __hash__(self):
        return hash((self.prime, self.valuation, self.unit, self.precision))

    def __repr__(self):
        if self.is_zero:
            return f"PadicScalar(p={self.prime}, ZERO)"
        return f"PadicScalar(p={self.prime}, {format_padic(self)!r}, prec={self.precision})"

    def __str__(self):
        return format_padic(self)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)


_new = object.__new__
_set_prime = PadicScalar.prime.__set__
_set_val = PadicScalar.valuation.__set__
_set_unit = PadicScalar.unit.__set__
_set_prec = PadicScalar.precision.__set__


def _check(x: PadicScalar, y: PadicScalar) -> None:
    if x.prime != y.prime:
        raise PadicError(f"prime mismatch: {x.prime} vs {y.prime}")


def val(x: PadicScalar) -> int | float:
    """Index of the first nonzero digit; ``inf`` for ZERO."""
    return math.inf if x.is_zero else x.valuation


@lru_cache(maxsize=4096)
def _norm_of_valuation(p: int, v: int) -> Fraction:
    if v <= 0:
        return Fraction(_ppow(p, -v))
    return Fraction(1, _ppow(p, v))


_ZERO_NORM = Fraction(0)


def norm(x: PadicScalar) -> Fraction:
    """``|x|_p = p**(-val(x))`` as an exact rational; ``0`` for ZERO."""
    if x.valuation is None:
        return _ZERO_NORM
    return _norm_of_valuation(x.prime, x.valuation)


def add(x: PadicScalar, y: PadicScalar) -> PadicScalar:
    return _add(x, y, 1)


def _add(x: PadicScalar, y: PadicScalar, sign: int) -> PadicScalar:
    p = x.prime
    if p != y.prime:
        raise PadicError(f"prime mismatch: {p} vs {y.prime}")
    vx, vy = x.valuation, y.valuation
    if vy is None:
        return x
    if vx is None:
        return y if sign > 0 else neg(y)
    v0 = vx if vx < vy else vy
    tx, ty = vx + x.precision, vy + y.precision
    width = (tx if tx < ty else ty) - v0
    if width <= 0:
        raise PrecisionError("empty reliable window")
    mod = _ppow(p, width)
    s = x.unit * _ppow(p, vx - v0) if vx - v0 < width else 0
    if vy - v0 < width:
        s += sign * y.unit * _ppow(p, vy - v0)
    s %= mod
    if s == 0:
        return PadicScalar.zero(p)
    t, u = _strip(p, s) if s % p == 0 else (0, s)
    return PadicScalar._make(p, v0 + t, u, width - t)


def neg(x: PadicScalar) -> PadicScalar:
    if x.is_zero:
        return x
    return PadicScalar._make(x.prime, x.valuation, (-x.unit) % _ppow(x.prime, x.precision), x.precision)


def sub(x: PadicScalar, y: PadicScalar) -> PadicScalar:
    return _add(x, y, -1)


def mul(x: PadicScalar, y: PadicScalar) -> PadicScalar:
    _check(x, y)
    if x.is_zero or y.is_zero:
        return PadicScalar.zero(x.prime)
    m = x.precision if x.precision < y.precision else y.precision
    if m <= 0:
        raise PrecisionError("empty reliable window")
    u = (x.unit * y.unit) % _ppow(x.prime, m)
    return PadicScalar._make(x.prime, x.valuation + y.valuation, u, m)


def div(x: PadicScalar, y: PadicScalar) -> PadicScalar:
    """Division by a nonzero element (unit times a power of p)."""
    _check(x, y)
    if y.is_zero:
        raise ZeroDivisionError("p-adic division by ZERO")
    if x.is_zero:
        return x
    m = min(x.precision, y.precision)
    mod = _ppow(x.prime, m)
    u = (x.unit * pow(y.unit, -1, mod)) % mod
    return PadicScalar._make(x.prime, x.valuation - y.valuation, u, m)


@dataclass(frozen=True)
class UnitFraction:
    """Exact ``numerator / p**exponent`` in ``[0, 1)``."""

    numerator: int
    exponent: int
    prime: int

    def __post_init__(self):
        if self.exponent < 0 or not 0 <= self.numerator < _ppow(self.prime, self.exponent) or (
            self.exponent == 0 and self.numerator != 0
        ):
            raise PadicError(f"invalid unit fraction {self.numerator}/{self.prime}^{self.exponent}")

    @classmethod
    def zero(cls, prime: int) -> UnitFraction:
        return cls(0, 0, prime)

    @property
    def denominator(self) -> int:
        return self.prime**self.exponent

    def as_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __float__(self):
        return self.numerator / self.denominator

    def __add__(self, other: UnitFraction) -> UnitFraction:
        """Sum modulo 1."""
        if self.prime != other.prime:
            raise PadicError("prime mismatch")
        k = max(self.exponent, other.exponent)
        p = self.prime
        n = self.numerator * p ** (k - self.exponent) + other.numerator * p ** (k - other.exponent)
        n %= p**k
        return _reduce_unit_fraction(n, k, p)

    def __neg__(self) -> UnitFraction:
        if self.numerator == 0:
            return self
        return UnitFraction(self.denominator - self.numerator, self.exponent, self.prime)

    def __str__(self):
        return f"{self.numerator}/{self.denominator}"


def _reduce_unit_fraction(n: int, k: int, p: int) -> UnitFraction:
    if n == 0:
        return UnitFraction.zero(p)
    while k > 0 and n % p == 0:
        n //= p
        k -= 1
    return UnitFraction(n, k, p)


def polar_part(x: PadicScalar) -> UnitFraction:
    """``{x}_p`` reduced mod 1: the negative-index digits as a fraction.

    If the reliable window ends below index 0 only the known digits enter.
    """
    if x.is_zero or x.valuation >= 0:
        return UnitFraction.zero(x.prime)
    k = -x.valuation
    n = x.unit % _ppow(x.prime, k) if x.precision > k else x.unit
    return UnitFraction(n, k, x.prime)


def character(x: PadicScalar) -> UnitFraction:
    """Angle ``t`` with ``exp(-2 pi i {x}_p) = exp(-2 pi i t)``."""
    return polar_part(x)


def character_value(t: UnitFraction) -> complex:
    """The unit complex number ``exp(-2 pi i t)``."""
    n, d = t.numerator, t.denominator
    # exact on the real axis and at quarter turns
    if n == 0:
        return 1 + 0j
    if 2 * n == d:
        return -1 + 0j
    if 4 * n == d:
        return -1j
    if 4 * n == 3 * d:
        return 1j
    return cmath.exp(-2j * math.pi * n / d)


def embed(t: UnitFraction, precision: int = DEFAULT_PRECISION) -> PadicScalar:
    """The rational ``t`` as an element of Q_p."""
    if t.numerator == 0:
        return PadicScalar.zero(t.prime)
    # the denominator is a power of p, so no inverse is needed
    s, u = _strip(t.prime, t.numerator)
    return PadicScalar._make(t.prime, s - t.exponent, u % _ppow(t.prime, precision), precision)


def parse_padic(text: str, p: int, precision: int = DEFAULT_PRECISION) -> PadicScalar:
    """Parse a base-p literal such as ``"101.1"`` or a rational ``"-2/3"``.

    Digit literals are exact; the stored window is padded with zeros to at
    least ``precision`` digits from the valuation.  Rationals are expanded to
    ``precision`` digits.
    """
    text = text.strip()
    m = _RATIONAL.match(text)
    if m:
        b = int(m.group(2))
        if b == 0:
            raise PadicError("zero denominator")
        return PadicScalar.from_fraction(Fraction(int(m.group(1)), b), p, precision)
    m = _LITERAL.match(text)
    if not m:
        raise PadicError(f"malformed p-adic literal {text!r}")
    if p > len(_DIGITS):
        raise PadicError(f"digit literals support p <= {len(_DIGITS)}")
    int_part, frac_part = m.group(1), m.group(2) or ""
    # ascending digits starting at index -len(frac_part)
    chars = frac_part[::-1] + int_part[::-1]
    digits = []
    for c in chars:
        a = _DIGITS.index(c)
        if a >= p:
            raise PadicError(f"digit {c!r} is not < p = {p}")
        digits.append(a)
    lo = -len(frac_part)
    nz = [i for i, a in enumerate(digits) if a]
    if not nz:
        return PadicScalar.zero(p)
    first, last = nz[0], nz[-1]
    width = max(precision, last - first + 1)
    digits = digits[first : last + 1] + [0] * (width - (last - first + 1))
    return PadicScalar(p, lo + first, digits)


def format_padic(x: PadicScalar) -> str:
    """Literal form accepted by :func:`parse_padic` (trailing zero digits dropped)."""
    if x.is_zero:
        return "0"
    if x.prime > len(_DIGITS):
        raise PadicError(f"digit literals support p <= {len(_DIGITS)}")
    ds = x.digits
    hi = x.valuation + max(i for i, a in enumerate(ds) if a)
    get = lambda j: x.digit(j) if j >= x.valuation else 0  # noqa: E731
    int_part = "".join(_DIGITS[get(j)] for j in range(max(hi, 0), -1, -1))
    if x.valuation >= 0:
        return int_part
    frac = "".join(_DIGITS[get(j)] for j in range(-1, x.valuation - 1, -1))
    return f"{int_part}.{frac}"


@dataclass(frozen=True)
class PadicPoint:
    """A point of Q_p^d."""

    coords: tuple[PadicScalar, ...]

    def __post_init__(self):
        coords = tuple(self.coords)
        if not coords:
            raise PadicError("a point needs at least one coordinate")
        if len({c.prime for c in coords}) != 1:
            raise PadicError("coordinates must share one prime")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_values(cls, values: Iterable, prime: int, precision: int = DEFAULT_PRECISION) -> PadicPoint:
        return cls(tuple(PadicScalar.from_fraction(Fraction(v), prime, precision) for v in values))

    @property
    def d(self) -> int:
        return len(self.coords)

    @property
    def prime(self) -> int:
        return self.coords[0].prime

    def _pair(self, other: PadicPoint):
        if self.d != other.d:
            raise PadicError(f"dimension mismatch: {self.d} vs {other.d}")
        return zip(self.coords, other.coords)

    def __add__(self, other: PadicPoint) -> PadicPoint:
        return PadicPoint(tuple(add(a, b) for a, b in self._pair(other)))

    def __sub__(self, other: PadicPoint) -> PadicPoint:
        return PadicPoint(tuple(sub(a, b) for a, b in self._pair(other)))


def point_norm(x: PadicPoint) -> Fraction:
    """``|x| = max_i |x_i|_p``."""
    vals = [c.valuation for c in x.coords if c.valuation is not None]
    if not vals:
        return Fraction(0)
    return _norm_of_valuation(x.prime, min(vals))


def dot(x: PadicPoint, k: PadicPoint) -> PadicScalar:
    """``sum_i x_i k_i`` on the common reliable window."""
    acc = PadicScalar.zero(x.prime)
    for a, b in x._pair(k):
        acc = add(acc, mul(a, b))
    return acc
