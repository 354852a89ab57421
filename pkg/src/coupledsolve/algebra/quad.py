"""Exact numbers: rationals and elements of a single quadratic field Q(sqrt d)."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import sympy

from ..errors import MixedFieldError

Rational = Fraction


def as_number(value):
    """Coerce Python ints to Fraction; leave every other number untouched."""
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    return value


@lru_cache(maxsize=4096)
def squarefree_split(n: int) -> tuple[int, int]:
    """Return (s, d) with n == s*s*d and d square-free (sign kept in d)."""
    if n == 0:
        return 0, 0
    sign = -1 if n < 0 else 1
    s, d = 1, sign
    for p, e in sympy.factorint(abs(n)).items():
        s *= p ** (e // 2)
        if e % 2:
            d *= p
    return s, d


class QuadExt:
    """a + b*sqrt(d) with rational a, b, b != 0 and square-free d not in {0, 1}.

    Arithmetic collapses back to Fraction whenever the surd part vanishes, so a
    QuadExt instance is never equal to a rational number.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d: int):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.d = int(d)
        if self.b == 0:
            raise ValueError("surd part must be nonzero; use quad()")
        if self.d in (0, 1):
            raise ValueError(f"radicand {d} is not a proper quadratic extension")

    # -- construction -------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, QuadExt):
            if other.d != self.d:
                raise MixedFieldError(f"cannot combine sqrt({self.d}) and sqrt({other.d})")
            return other.a, other.b
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        return None

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        lifted = self._lift(other)
        if lifted is None:
            return NotImplemented
        return quad(self.a + lifted[0], self.b + lifted[1], self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        lifted = self._lift(other)
        if lifted is None:
            return NotImplemented
        return quad(self.a - lifted[0], self.b - lifted[1], self.d)

    def __rsub__(self, other):
        lifted = self._lift(other)
        if lifted is None:
            return NotImplemented
        return quad(lifted[0] - self.a, lifted[1] - self.b, self.d)

    def __mul__(self, other):
        lifted = self._lift(other)
        if lifted is None:
            return NotImplemented
        a, b = lifted
        return quad(self.a * a + self.d * self.b * b, self.a * b + self.b * a, self.d)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.a * self.a - self.d * self.b * self.b

    def conjugate(self) -> "QuadExt":
        return QuadExt(self.a, -self.b, self.d)

    def inverse(self) -> "QuadExt":
        n = self.norm()
        return QuadExt(self.a / n, -self.b / n, self.d)

    def __truediv__(self, other):
        lifted = self._lift(other)
        if lifted is None:
            return NotImplemented
        a, b = lifted
        if b == 0:
            if a == 0:
                raise ZeroDivisionError("division by zero")
            return QuadExt(self.a / a, self.b / a, self.d)
        return self * QuadExt(a, b, self.d).inverse()

    def __rtruediv__(self, other):
        lifted = self._lift(other)
        if lifted is None:
            return NotImplemented
        return self.inverse() * quad(lifted[0], lifted[1], self.d)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers of algebraic numbers are supported")
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        result = Fraction(1)
        while n:
            if n & 1:
                result = base * result
            base = base * base
            n >>= 1
        return result

    # -- comparison -----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, QuadExt):
            return self.d == other.d and self.a == other.a and self.b == other.b
        if isinstance(other, (int, Fraction)):
            return False
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def __bool__(self):
        return True

    def __repr__(self):
        return f"QuadExt({self.a}, {self.b}, {self.d})"

    def __str__(self):
        den = _lcm(self.a.denominator, self.b.denominator)
        p, q = self.a * den, self.b * den
        surd = f"Sqrt[{self.d}]"
        qs = surd if q == 1 else ("-" + surd if q == -1 else f"{q}*{surd}")
        if p == 0:
            body = qs
        elif q > 0:
            body = f"{p}+{qs}"
        else:
            body = f"{p}{qs}"
        return f"({body})" if den == 1 else f"({body})/{den}"


def _lcm(a: int, b: int) -> int:
    from math import gcd

    return a * b // gcd(a, b)


def quad(a, b, d: int):
    """Build a + b*sqrt(d), returning a Fraction when b == 0 or d is a square."""
    a, b = Fraction(a), Fraction(b)
    if b == 0:
        return a
    s, d2 = squarefree_split(d)
    if d2 == 1:
        return a + b * s
    return QuadExt(a, b * s, d2)


def sqrt_rational(q) -> Fraction | QuadExt:
    """Exact square root of a rational number."""
    q = Fraction(q)
    if q == 0:
        return Fraction(0)
    n = q.numerator * q.denominator
    s, d = squarefree_split(n)
    if d == 1:
        return Fraction(s, q.denominator)
    return QuadExt(0, Fraction(s, q.denominator), d)


def is_number(value) -> bool:
    return isinstance(value, (int, Fraction, QuadExt)) and not isinstance(value, bool)


def field_of(value) -> int:
    """Radicand of the field containing value (1 for rationals)."""
    return value.d if isinstance(value, QuadExt) else 1


def field_sum(values):
    """Sum numbers that may live in different quadratic fields.

    Surd parts are accumulated per radicand; the total must end up in a single
    field (typically conjugate contributions cancel to a rational).
    """
    rational = Fraction(0)
    surds: dict[int, Fraction] = {}
    for v in values:
        if isinstance(v, QuadExt):
            rational += v.a
            surds[v.d] = surds.get(v.d, Fraction(0)) + v.b
        else:
            rational += v
    live = {d: b for d, b in surds.items() if b != 0}
    if not live:
        return rational
    if len(live) > 1:
        raise MixedFieldError(f"sum leaves surds in several fields {sorted(live)}")
    (d, b), = live.items()
    return QuadExt(rational, b, d)
