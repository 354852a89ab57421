"""Factorisation over Q, exact roots, and partial fractions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import sympy

from ..errors import IrreducibleDegreeTooHigh
from .poly import Poly, RatFun
from .quad import sqrt_rational

_X = sympy.Symbol("x")


@dataclass(frozen=True)
class Factorization:
    """b = constant * x^nu0 * prod(f^m for f, m in factors), each f monic irreducible."""

    constant: Fraction
    factors: tuple[tuple[Poly, int], ...]
    nu0: int
    var: str = "x"

    def expand(self) -> Poly:
        out = Poly.const(self.constant, self.var) * Poly.gen(self.var) ** self.nu0
        for f, m in self.factors:
            out = out * f ** m
        return out

    def roots(self) -> list[tuple[object, int]]:
        """All roots with multiplicities (zero root first)."""
        out = [(Fraction(0), self.nu0)] if self.nu0 else []
        for f, m in self.factors:
            out.extend((r, m) for r in factor_roots(f))
        return out


def _to_sympy(p: Poly):
    return sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(p.coeffs)], _X)


def _from_sympy(sp, var: str) -> Poly:
    coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(sp.all_coeffs())]
    return Poly(coeffs, var)


@lru_cache(maxsize=2048)
def _factor_cached(coeffs: tuple, var: str) -> Factorization:
    p = Poly(coeffs, var)
    nu0 = p.valuation()
    rest = Poly(p.coeffs[nu0:], var)
    const, flist = _to_sympy(rest).factor_list()
    constant = Fraction(int(sympy.Rational(const).p), int(sympy.Rational(const).q))
    factors = []
    for fac, mult in flist:
        f = _from_sympy(fac, var)
        lead = f.lc()
        constant *= lead ** mult
        factors.append((f.monic(), int(mult)))
    factors.sort(key=lambda fm: (fm[0].degree(), fm[0].coeffs))
    return Factorization(constant, tuple(factors), nu0, var)


def factor_over_q(p: Poly) -> Factorization:
    """Irreducible factorisation of a nonzero polynomial with rational coefficients."""
    if not p:
        raise ValueError("cannot factor the zero polynomial")
    if not p.is_rational():
        raise TypeError("factorisation needs rational coefficients")
    return _factor_cached(p.coeffs, p.var)


def factor_roots(f: Poly) -> list:
    """Exact roots of a monic irreducible factor of degree 1 or 2."""
    if f.degree() == 1:
        return [-f[0] / f[1]]
    if f.degree() == 2:
        b, c = f[1] / f[2], f[0] / f[2]
        s = sqrt_rational(b * b / 4 - c)
        return [-b / 2 + s, -b / 2 - s]
    raise IrreducibleDegreeTooHigh(f)


def integer_roots(p: Poly) -> list[int]:
    """Sorted distinct integer roots of a rational polynomial."""
    if not p:
        raise ValueError("zero polynomial has every integer as a root")
    if p.degree() < 1:
        return []
    fz = factor_over_q(p)
    out = {0} if fz.nu0 else set()
    for f, _ in fz.factors:
        if f.degree() == 1:
            r = -f[0]
            if r.denominator == 1:
                out.add(int(r))
    return sorted(out)


def rational_roots(p: Poly) -> list[Fraction]:
    if p.degree() < 1:
        return []
    fz = factor_over_q(p)
    out = [Fraction(0)] if fz.nu0 else []
    out.extend(-f[0] for f, _ in fz.factors if f.degree() == 1)
    return sorted(out)


@dataclass(frozen=True)
class PartialFraction:
    """coeff / (var - root)^power."""

    coeff: object
    root: object
    power: int


@dataclass
class PartialFractions:
    poly_part: Poly
    terms: list[PartialFraction] = field(default_factory=list)

    def recombine(self) -> RatFun:
        """Sum of all terms as one rational function (over the roots' field)."""
        var = self.poly_part.var
        total = RatFun(self.poly_part)
        for t in self.terms:
            total = total + RatFun(Poly.const(t.coeff, var), Poly((-t.root, 1), var) ** t.power)
        return total


def _taylor_quotient(num: Poly, den: Poly, order: int) -> list:
    """First `order` Taylor coefficients of num/den at 0 (den(0) != 0)."""
    d0 = den[0]
    out = []
    for k in range(order):
        acc = num[k]
        for j in range(1, k + 1):
            acc = acc - den[j] * out[k - j]
        out.append(acc / d0)
    return out


def partial_fractions(q: RatFun) -> PartialFractions:
    """Decompose q over its exact roots into c/(x - rho)^j terms."""
    if not q.num.is_rational() or not q.den.is_rational():
        raise TypeError("partial fractions need rational coefficients")
    quo, rem = q.num.divmod(q.den)
    out = PartialFractions(quo)
    if not rem:
        return out
    fz = factor_over_q(q.den)
    var = q.var
    den = q.den
    for root, mult in fz.roots():
        lin = Poly((-root, 1), var) ** mult
        cofactor = den.exact_div(lin)
        series = _taylor_quotient(rem.shift(root), cofactor.shift(root), mult)
        for k, c in enumerate(series):
            if c:
                out.terms.append(PartialFraction(c, root, mult - k))
    return out
