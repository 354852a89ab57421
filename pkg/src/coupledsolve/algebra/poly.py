"""Dense univariate polynomials and rational functions over an exact field.

Coefficients are Fractions, QuadExt numbers, or rational functions in the
parameter variable (``eps``).  A polynomial in ``x`` whose coefficients are
rational functions in ``eps`` models K(eps)[x]; when a ring object in ``x``
meets one in ``eps`` the latter always acts as a scalar.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

from ..errors import EvalPole
from .quad import as_number

PARAMETER_VARS = frozenset({"eps"})


def _rank(var: str) -> int:
    return 0 if var in PARAMETER_VARS else 1


def _role(self_var: str, other) -> str:
    """Classify other relative to a ring object in self_var.

    Returns "same" (same ring), "scalar" (coefficient), or "outer" (other is
    the bigger ring, so the operation must be delegated to it).
    """
    if isinstance(other, (Poly, RatFun)):
        if other.var == self_var:
            return "same"
        if _rank(other.var) < _rank(self_var):
            return "scalar"
        if _rank(other.var) > _rank(self_var):
            return "outer"
        raise TypeError(f"cannot mix variables {self_var!r} and {other.var!r}")
    return "scalar"


def _size(c) -> int:
    if isinstance(c, RatFun):
        return c.num.degree() + c.den.degree() + 1
    return 0


class Poly:
    """Polynomial with coefficients stored densely in ascending order."""

    __slots__ = ("coeffs", "var")

    def __init__(self, coeffs=(), var: str = "x"):
        cs = [as_number(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)
        self.var = var

    @classmethod
    def gen(cls, var: str = "x") -> "Poly":
        return cls((0, 1), var)

    @classmethod
    def const(cls, c, var: str = "x") -> "Poly":
        return cls((c,), var)

    # -- basic queries --------------------------------------------------------
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def lc(self):
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def __getitem__(self, i: int):
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __bool__(self):
        return bool(self.coeffs)

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    def constant_value(self):
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def valuation(self) -> int:
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return -1

    def is_rational(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coeffs)

    # -- arithmetic -------------------------------------------------------------
    def _coerce(self, other):
        role = _role(self.var, other)
        if role == "outer":
            return None
        if role == "same":
            if isinstance(other, RatFun):
                return None
            return other
        return Poly((other,), self.var)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__radd__(self)
        a, b = self.coeffs, o.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return Poly(out, self.var)

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs], self.var)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__rsub__(self)
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__sub__(self)
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__rmul__(self)
        if not self.coeffs or not o.coeffs:
            return Poly((), self.var)
        if len(o.coeffs) == 1:
            c = o.coeffs[0]
            return Poly([a * c for a in self.coeffs], self.var)
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(o.coeffs):
                out[i + j] = out[i + j] + a * b
        return Poly(out, self.var)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, n: int):
        if n < 0:
            return RatFun(Poly.const(1, self.var), self) ** (-n)
        result = Poly.const(1, self.var)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __truediv__(self, other):
        role = _role(self.var, other)
        if role == "outer":
            return other.__rtruediv__(self)
        if role == "scalar":
            return Poly([c / other for c in self.coeffs], self.var)
        if isinstance(other, RatFun):
            return RatFun(self, reduced=True) / other
        return RatFun(self, other)

    def __rtruediv__(self, other):
        role = _role(self.var, other)
        if role == "outer":
            return other.__truediv__(self)
        return RatFun(Poly.const(other, self.var), self)

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if not other:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = other.degree()
        lead = other.lc()
        quo = [Fraction(0)] * max(len(rem) - dq, 0)
        for i in range(len(rem) - 1, dq - 1, -1):
            c = rem[i]
            if not c:
                continue
            q = c / lead
            quo[i - dq] = q
            for j, b in enumerate(other.coeffs):
                rem[i - dq + j] = rem[i - dq + j] - q * b
        return Poly(quo, self.var), Poly(rem[:dq] if dq > 0 else (), self.var)

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def exact_div(self, other: "Poly") -> "Poly":
        q, r = self.divmod(other)
        if r:
            raise ArithmeticError(f"{other} does not divide {self}")
        return q

    def monic(self) -> "Poly":
        if not self.coeffs:
            return self
        lead = self.lc()
        if lead == 1:
            return self
        return Poly([c / lead for c in self.coeffs], self.var)

    # -- calculus and substitution --------------------------------------------
    def derivative(self) -> "Poly":
        return Poly([c * i for i, c in enumerate(self.coeffs)][1:], self.var)

    def __call__(self, value):
        result = Fraction(0)
        for c in reversed(self.coeffs):
            result = result * value + c
        return result

    def compose(self, other) -> "Poly":
        result = Poly((), other.var if isinstance(other, Poly) else self.var)
        for c in reversed(self.coeffs):
            result = result * other + c
        return result

    def shift(self, a) -> "Poly":
        """p(var + a)."""
        if not a or self.degree() < 1:
            return self
        n = len(self.coeffs)
        out = [Fraction(0)] * n
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            apow = Fraction(1)
            for j in range(i, -1, -1):
                out[j] = out[j] + c * comb(i, j) * apow
                apow = apow * a
        return Poly(out, self.var)

    def map_coeffs(self, f) -> "Poly":
        return Poly([f(c) for c in self.coeffs], self.var)

    def rename(self, var: str) -> "Poly":
        return Poly(self.coeffs, var)

    # -- comparison and printing -------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.var == other.var and self.coeffs == other.coeffs
        if isinstance(other, RatFun):
            return other == self
        if len(self.coeffs) <= 1:
            return self.constant_value() == other
        return False

    def __hash__(self):
        if len(self.coeffs) <= 1:
            return hash(self.constant_value())
        return hash((self.var, self.coeffs))

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        return self.to_str()

    def to_str(self, var: str | None = None) -> str:
        v = var or self.var
        if not self.coeffs:
            return "0"
        parts = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            mono = "" if i == 0 else (v if i == 1 else f"{v}^{i}")
            parts.append(_fmt_term(c, mono))
        out = parts[0]
        for p in parts[1:]:
            out += p if p.startswith("-") else "+" + p
        return out

    def bitsize(self) -> int:
        return sum(_bits(c) for c in self.coeffs)


def _bits(c) -> int:
    if isinstance(c, Fraction):
        return c.numerator.bit_length() + c.denominator.bit_length()
    if isinstance(c, RatFun):
        return c.num.bitsize() + c.den.bitsize()
    if isinstance(c, Poly):
        return c.bitsize()
    return _bits(c.a) + _bits(c.b)


def _fmt_term(c, mono: str) -> str:
    if isinstance(c, Fraction):
        if not mono:
            return str(c)
        if c == 1:
            return mono
        if c == -1:
            return "-" + mono
        return f"{c}*{mono}"
    text = str(c)
    if not mono:
        return text if text.startswith("(") and _balanced_outer(text) else f"({text})"
    return f"({text})*{mono}"


def _balanced_outer(text: str) -> bool:
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0 and i != len(text) - 1:
                return False
    return True


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic greatest common divisor (gcd(0, 0) == 0)."""
    while b:
        a, b = b, a.divmod(b)[1]
    return a.monic()


def poly_lcm(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return Poly((), a.var)
    return (a * b).exact_div(poly_gcd(a, b)).monic()


def interpolate(points, values, var: str = "x") -> Poly:
    """Lagrange interpolation through (points[i], values[i])."""
    result = Poly((), var)
    n = len(points)
    for i in range(n):
        term = Poly.const(values[i], var)
        denom = Fraction(1)
        for j in range(n):
            if j != i:
                term = term * Poly((-points[j], 1), var)
                denom *= points[i] - points[j]
        result = result + term / denom
    return result


def falling_factorial(p: Poly, k: int) -> Poly:
    """p (p-1) ... (p-k+1)."""
    result = Poly.const(1, p.var)
    for t in range(k):
        result = result * (p - t)
    return result


class RatFun:
    """Reduced quotient of polynomials with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, *, reduced: bool = False):
        if not isinstance(num, Poly):
            var = den.var if isinstance(den, Poly) else "x"
            num = Poly.const(num, var)
        if den is None:
            den = Poly.const(1, num.var)
        elif not isinstance(den, Poly):
            den = Poly.const(den, num.var)
        if num.var != den.var:
            raise TypeError("numerator and denominator use different variables")
        if not den:
            raise ZeroDivisionError("rational function with zero denominator")
        if not reduced:
            if not num:
                den = Poly.const(1, num.var)
            elif den.degree() > 0:
                g = poly_gcd(num, den)
                if g.degree() > 0:
                    num = num.exact_div(g)
                    den = den.exact_div(g)
            lead = den.lc()
            if lead != 1:
                num = Poly([c / lead for c in num.coeffs], num.var)
                den = Poly([c / lead for c in den.coeffs], den.var)
        self.num = num
        self.den = den

    @property
    def var(self) -> str:
        return self.num.var

    @classmethod
    def gen(cls, var: str = "x") -> "RatFun":
        return cls(Poly.gen(var), reduced=True)

    @classmethod
    def const(cls, c, var: str = "x") -> "RatFun":
        return cls(Poly.const(c, var), Poly.const(1, var), reduced=True)

    def is_poly(self) -> bool:
        return self.den.degree() == 0

    def is_constant(self) -> bool:
        return self.den.degree() == 0 and self.num.degree() <= 0

    def constant_value(self):
        return self.num.constant_value()

    def __bool__(self):
        return bool(self.num)

    def degree(self) -> int:
        """Total size measure deg(num) + deg(den) used for pivot choice."""
        return max(self.num.degree(), 0) + self.den.degree()

    # -- arithmetic ---------------------------------------------------------------
    def _coerce(self, other):
        role = _role(self.var, other)
        if role == "outer":
            return None
        if role == "same":
            if isinstance(other, Poly):
                return RatFun(other, reduced=True)
            return other
        return RatFun(Poly.const(other, self.var), Poly.const(1, self.var), reduced=True)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__radd__(self)
        if not o.num:
            return self
        if not self.num:
            return o
        if self.den == o.den:
            if self.den.degree() == 0:
                return RatFun(self.num + o.num, self.den, reduced=True)
            return RatFun(self.num + o.num, self.den)
        return RatFun(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFun(-self.num, self.den, reduced=True)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__rsub__(self)
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__sub__(self)
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__rmul__(self)
        if not self.num or not o.num:
            return RatFun(Poly((), self.var), reduced=True)
        if self.den.degree() == 0 and o.den.degree() == 0:
            return RatFun(self.num * o.num, reduced=True)
        if o.is_constant():
            return RatFun(self.num * o.constant_value(), self.den, reduced=True)
        if self.is_constant():
            return RatFun(o.num * self.constant_value(), o.den, reduced=True)
        return RatFun(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def inverse(self) -> "RatFun":
        if not self.num:
            raise ZeroDivisionError("inverse of zero rational function")
        return RatFun(self.den, self.num)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__rtruediv__(self)
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return other.__truediv__(self)
        return o * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return RatFun(self.num ** n, self.den ** n, reduced=True)

    # -- calculus, substitution, evaluation -----------------------------------
    def derivative(self) -> "RatFun":
        return RatFun(self.num.derivative() * self.den - self.num * self.den.derivative(), self.den * self.den)

    def shift(self, a) -> "RatFun":
        if not a:
            return self
        return RatFun(self.num.shift(a), self.den.shift(a), reduced=True)

    def __call__(self, value):
        d = self.den(value)
        if not d:
            raise EvalPole(f"pole of {self} at {self.var} = {value}")
        n = self.num(value)
        if isinstance(d, (Poly, RatFun)) or isinstance(n, (Poly, RatFun)):
            return n / d
        return n / d

    def compose(self, other) -> "RatFun":
        return RatFun(self.num.compose(other), reduced=True) / RatFun(self.den.compose(other), reduced=True) \
            if isinstance(other, Poly) else self.num(other) / self.den(other)

    def map_coeffs(self, f) -> "RatFun":
        return RatFun(self.num.map_coeffs(f), self.den.map_coeffs(f))

    def rename(self, var: str) -> "RatFun":
        return RatFun(self.num.rename(var), self.den.rename(var), reduced=True)

    # -- comparison and printing ----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, RatFun):
            return self.var == other.var and self.num == other.num and self.den == other.den
        if isinstance(other, Poly):
            return self.den.degree() == 0 and self.num == other
        if self.is_constant():
            return self.constant_value() == other
        return False

    def __hash__(self):
        if self.is_constant():
            return hash(self.constant_value())
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RatFun({self})"

    def __str__(self):
        return self.to_str()

    def to_str(self, var: str | None = None) -> str:
        n = self.num.to_str(var)
        if self.den.degree() == 0:
            return n
        return f"({n})/({self.den.to_str(var)})"

    def bitsize(self) -> int:
        return self.num.bitsize() + self.den.bitsize()


def to_ratfun(value, var: str) -> RatFun:
    if isinstance(value, RatFun) and value.var == var:
        return value
    if isinstance(value, Poly) and value.var == var:
        return RatFun(value, reduced=True)
    return RatFun.const(value, var)


def size_of(c) -> int:
    return _size(c)
