"""Truncated Laurent series in the parameter eps and tabulated sequences."""

from __future__ import annotations

from fractions import Fraction

from ..algebra.poly import Poly, RatFun
from ..algebra.quad import QuadExt
from ..errors import EmptyWindow
from .expr import SumExpr, Evaluator

EPS = "eps"


class SeriesTable:
    """A sequence known only through its values at start, start+1, ..."""

    __slots__ = ("start", "values")

    def __init__(self, start: int, values):
        self.start = int(start)
        self.values = tuple(Fraction(v) if isinstance(v, int) else v for v in values)

    @classmethod
    def from_expr(cls, e: SumExpr, start: int, length: int) -> "SeriesTable":
        ev = Evaluator()
        return cls(start, [ev.value(e, n) for n in range(start, start + length)])

    @property
    def stop(self) -> int:
        return self.start + len(self.values)

    def __call__(self, n: int):
        if not self.start <= n < self.stop:
            raise IndexError(f"table covers {self.start}..{self.stop - 1}, not {n}")
        return self.values[n - self.start]

    def _align(self, other):
        if isinstance(other, SeriesTable):
            return other
        if isinstance(other, SumExpr):
            return SeriesTable.from_expr(other, self.start, len(self.values))
        return None

    def __add__(self, other):
        o = self._align(other)
        if o is None:
            return SeriesTable(self.start, [v + other for v in self.values])
        lo, hi = max(self.start, o.start), min(self.stop, o.stop)
        return SeriesTable(lo, [self(n) + o(n) for n in range(lo, hi)])

    __radd__ = __add__

    def __neg__(self):
        return SeriesTable(self.start, [-v for v in self.values])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, RatFun):
            return SeriesTable(self.start, [v * other(n) for n, v in enumerate(self.values, self.start)])
        o = self._align(other)
        if o is None:
            return SeriesTable(self.start, [v * other for v in self.values])
        lo, hi = max(self.start, o.start), min(self.stop, o.stop)
        return SeriesTable(lo, [self(n) * o(n) for n in range(lo, hi)])

    __rmul__ = __mul__

    def shift(self, s: int) -> "SeriesTable":
        return SeriesTable(self.start - s, self.values)

    def __eq__(self, other):
        return isinstance(other, SeriesTable) and (self.start, self.values) == (other.start, other.values)

    def __hash__(self):
        return hash((self.start, self.values))

    def __repr__(self):
        return f"SeriesTable({self.start}, {list(self.values)!r})"

    def __str__(self):
        return "Table[%d,{%s}]" % (self.start, ",".join(str(v) for v in self.values))


def _is_zero(c) -> bool:
    if isinstance(c, (SumExpr, RatFun, Poly)):
        return not c
    if isinstance(c, SeriesTable):
        return all(not v for v in c.values)
    if isinstance(c, QuadExt):
        return False
    return c == 0


class EpsLaurent:
    """sum_{k=lo}^{top} c_k eps^k + O(eps^{top+1}).

    With exact=True every coefficient beyond the stored ones is known to be
    zero, so the window is unbounded above.
    """

    __slots__ = ("lo", "coeffs", "exact")

    def __init__(self, lo: int, coeffs, exact: bool = False):
        coeffs = [Fraction(c) if isinstance(c, int) else c for c in coeffs]
        if exact:
            while coeffs and _is_zero(coeffs[-1]):
                coeffs.pop()
            while coeffs and _is_zero(coeffs[0]):
                coeffs.pop(0)
                lo += 1
            if not coeffs:
                lo = 0
        elif not coeffs:
            raise EmptyWindow("a truncated series needs at least one order")
        self.lo = lo
        self.coeffs = coeffs
        self.exact = exact

    @classmethod
    def constant(cls, c) -> "EpsLaurent":
        return cls(0, [c], exact=True)

    @classmethod
    def from_ratfun(cls, r, count: int) -> "EpsLaurent":
        """Laurent expansion of a rational function in eps with count orders."""
        if not isinstance(r, RatFun) or r.var != EPS:
            return cls(0, [r], exact=True)
        if r.is_poly():
            return cls(0, list(r.num.coeffs), exact=True)
        v = r.den.valuation()
        den = Poly(r.den.coeffs[v:], EPS)
        vn = max(r.num.valuation(), 0)
        num = Poly(r.num.coeffs[vn:], EPS)
        out = []
        for k in range(count):
            acc = num[k]
            for i in range(1, k + 1):
                acc = acc - den[i] * out[k - i]
            out.append(acc / den[0])
        return cls(vn - v, out)

    @property
    def top(self):
        return None if self.exact else self.lo + len(self.coeffs) - 1

    def __getitem__(self, k: int):
        idx = k - self.lo
        if idx < 0:
            return Fraction(0)
        if idx >= len(self.coeffs):
            if self.exact:
                return Fraction(0)
            raise EmptyWindow(f"order eps^{k} lies beyond the known window")
        return self.coeffs[idx]

    def orders(self):
        return range(self.lo, self.lo + len(self.coeffs))

    def valuation(self) -> int:
        for k in self.orders():
            if not _is_zero(self[k]):
                return k
        return self.top + 1 if self.top is not None else 0

    # -- arithmetic -------------------------------------------------------------
    def _lift(self, other) -> "EpsLaurent":
        if isinstance(other, EpsLaurent):
            return other
        if isinstance(other, RatFun) and other.var == EPS:
            need = len(self.coeffs) if not self.exact else None
            if need is None:
                if other.is_poly():
                    return EpsLaurent.from_ratfun(other, 0)
                raise EmptyWindow("an exact series times a non-polynomial factor needs a window")
            return EpsLaurent.from_ratfun(other, need + 1)
        return EpsLaurent.constant(other)

    def __add__(self, other):
        o = self._lift(other)
        lo = min(self.lo, o.lo)
        tops = [t for t in (self.top, o.top) if t is not None]
        if not tops:
            hi = max(self.lo + len(self.coeffs), o.lo + len(o.coeffs)) - 1
            return EpsLaurent(lo, [_add(self[k], o[k]) for k in range(lo, hi + 1)], exact=True)
        hi = min(tops)
        if hi < lo:
            raise EmptyWindow("no common orders survive the addition")
        return EpsLaurent(lo, [_add(self[k], o[k]) for k in range(lo, hi + 1)])

    __radd__ = __add__

    def __neg__(self):
        return EpsLaurent(self.lo, [-c for c in self.coeffs], self.exact)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if isinstance(other, EpsLaurent) or (isinstance(other, RatFun) and other.var == EPS):
            o = self._lift(other)
        else:
            return EpsLaurent(self.lo, [c * other for c in self.coeffs], self.exact)
        lo = self.lo + o.lo
        if self.exact and o.exact:
            hi = self.lo + len(self.coeffs) - 1 + o.lo + len(o.coeffs) - 1
            exact = True
        else:
            cands = []
            if self.top is not None:
                cands.append(self.top + o.lo)
            if o.top is not None:
                cands.append(o.top + self.lo)
            hi = min(cands)
            exact = False
        out = []
        for k in range(lo, hi + 1):
            acc = Fraction(0)
            for i in self.orders():
                j = k - i
                if j < o.lo or (o.exact and j >= o.lo + len(o.coeffs)):
                    continue
                a, b = self[i], o[j]
                if _is_zero(a) or _is_zero(b):
                    continue
                acc = _add(acc, a * b)
            out.append(acc)
        if not exact and not out:
            raise EmptyWindow("product has no derivable orders")
        return EpsLaurent(lo, out, exact)

    __rmul__ = __mul__

    def scale(self, r) -> "EpsLaurent":
        return self * r

    def truncate(self, top: int) -> "EpsLaurent":
        if self.top is not None and top > self.top:
            raise EmptyWindow(f"cannot extend window to eps^{top}")
        if top < self.lo:
            raise EmptyWindow("truncation leaves no orders")
        return EpsLaurent(self.lo, [self[k] for k in range(self.lo, top + 1)])

    def window(self, lo: int, top: int) -> list:
        """Coefficients for eps^lo .. eps^top (orders below self.lo are zero)."""
        if self.top is not None and top > self.top:
            raise EmptyWindow(f"series known only up to eps^{self.top}, need eps^{top}")
        return [self[k] for k in range(lo, top + 1)]

    def map(self, f) -> "EpsLaurent":
        return EpsLaurent(self.lo, [f(c) for c in self.coeffs], self.exact)

    def __eq__(self, other):
        if not isinstance(other, EpsLaurent):
            return NotImplemented
        if self.top != other.top:
            return False
        lo = min(self.lo, other.lo)
        hi = self.top if self.top is not None else max(self.lo + len(self.coeffs), other.lo + len(other.coeffs))
        return all(_is_zero(_add(self[k], -other[k])) for k in range(lo, hi + 1))

    def __repr__(self):
        return f"EpsLaurent({self})"

    def __str__(self):
        parts = [f"eps^{k}*({c})" for k, c in zip(self.orders(), self.coeffs)]
        tail = "" if self.exact else f" + O(eps^{self.top + 1})"
        return (" + ".join(parts) or "0") + tail


def _add(a, b):
    if isinstance(b, SumExpr) and not isinstance(a, (SumExpr, SeriesTable)):
        return b + a
    return a + b


def eps_coefficients(value, lo: int, top: int) -> list:
    """Coefficients of eps^lo..eps^top of a number, RatFun in eps, or polynomial/
    rational function whose coefficients are rational functions in eps."""
    if isinstance(value, RatFun) and value.var == EPS:
        low = max(value.num.valuation(), 0) - value.den.valuation()
        series = EpsLaurent.from_ratfun(value, max(top - low + 1, 1))
        return series.window(lo, top)
    if isinstance(value, Poly) and value.var != EPS:
        per_coeff = [eps_coefficients(c, lo, top) for c in value.coeffs]
        return [Poly([pc[k] for pc in per_coeff], value.var) for k in range(top - lo + 1)]
    if isinstance(value, RatFun) and value.is_poly():
        return eps_coefficients(value.num, lo, top)
    if isinstance(value, RatFun):
        raise TypeError("expand numerator and denominator separately")
    return [value if k == 0 else Fraction(0) for k in range(lo, top + 1)]


def _split_poly(p: Poly, count: int):
    """Valuation v and eps-expansions of the coefficients of p (var != eps)."""
    series = [EpsLaurent.from_ratfun(c, count) for c in p.coeffs]
    lows = [s.valuation() for s, c in zip(series, p.coeffs) if not _is_zero(c)]
    return (min(lows) if lows else 0), series


def expand_in_eps(r, var: str, count: int) -> EpsLaurent:
    """Laurent expansion in eps of a rational function in var whose coefficients
    may depend on eps.  The result has count orders with RatFun coefficients."""
    if isinstance(r, RatFun) and r.var == EPS:
        return EpsLaurent.from_ratfun(r, count)
    if not isinstance(r, (RatFun, Poly)):
        return EpsLaurent.constant(RatFun.const(r, var))
    r = r if isinstance(r, RatFun) else RatFun(r)
    if not r:
        return EpsLaurent(0, [], exact=True)
    parts = list(r.num.coeffs) + list(r.den.coeffs)
    if not any(isinstance(c, RatFun) and c.var == EPS for c in parts):
        return EpsLaurent.constant(r)
    vn, ns = _split_poly(r.num, count)
    vd, ds = _split_poly(r.den, count)

    def layer(series, v, k):
        return RatFun(Poly([s[v + k] for s in series], var))

    d0 = layer(ds, vd, 0)
    out = []
    for t in range(count):
        acc = layer(ns, vn, t)
        for i in range(1, t + 1):
            acc = acc - layer(ds, vd, i) * out[t - i]
        out.append(acc / d0)
    return EpsLaurent(vn - vd, out)
