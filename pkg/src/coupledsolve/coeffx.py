"""N-th coefficient extraction for expressions q(x) * sum_N x^N g(N).

A rational q is expanded through the exact roots of its denominator into
root powers times polynomials, and the Cauchy product with the series factor
is turned into nested sums with the N-dependent root powers pulled out.
Summands whose denominators carry irreducible factors outside a whitelist are
clustered and tested for cancellation on truncated series.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .algebra.factor import factor_over_q, partial_fractions
from .algebra.linalg import solve
from .algebra.parse import BinOp, Call, Name, Neg, Num, int_power, parse_tree
from .algebra.poly import Poly, RatFun, poly_lcm, to_ratfun
from .algebra.quad import field_sum
from .errors import MixedFieldError, ParseError
from .sums.expr import VAR, Evaluator, SumExpr, pow_expr
from .sums.grammar import parse_expr
from .sums.harmonic import reduce_products
from .sums.summation import sum_expr

XVAR = "x"
DEFAULT_TRUNCATION = 40


def _binomial_poly(j: int) -> Poly:
    """binomial(N + j - 1, j - 1) as a polynomial in N."""
    out = Poly.const(1, VAR)
    for i in range(1, j):
        out = out * Poly((i, 1), VAR)
    return out * Fraction(1, factorial(j - 1))


def _sum_numbers(values):
    try:
        total = Fraction(0)
        for v in values:
            total = total + v
        return total
    except MixedFieldError:
        return field_sum(values)


@dataclass
class RootExpansion:
    """[x^n] q = sum_i p_i(n) * base_i^n + corrections.get(n, 0) for n >= mu.

    Coefficients below mu vanish.  The bases are the reciprocals of the
    denominator roots; corrections come from the polynomial part.
    """

    mu: int
    terms: list
    corrections: dict = field(default_factory=dict)

    def coefficient(self, n: int):
        if n < self.mu:
            return Fraction(0)
        vals = [p(n) * base ** n for p, base in self.terms]
        vals.append(self.corrections.get(n, Fraction(0)))
        return _sum_numbers(vals)

    def series(self, stop: int) -> list:
        """Coefficients for n = mu .. stop."""
        return [self.coefficient(n) for n in range(self.mu, stop + 1)]

    def to_expr(self) -> SumExpr:
        """The root-power part as an expression in N (exact for n > last correction)."""
        out = SumExpr()
        for p, base in self.terms:
            out = out + pow_expr(base).scale(RatFun(p)) if base != 1 else out + SumExpr({(): RatFun(p)})
        return out

    @property
    def valid_from(self) -> int:
        if not self.corrections:
            return self.mu
        return max(self.mu, max(self.corrections) + 1)


def expandRational(q) -> RootExpansion:
    """Closed form of the power-series coefficients of a rational function."""
    q = to_ratfun(q, XVAR)
    if not q:
        return RootExpansion(0, [])
    nu0 = q.den.valuation()
    den = Poly(q.den.coeffs[nu0:], XVAR)
    pf = partial_fractions(RatFun(q.num, den))
    grouped: dict = {}
    for t in pf.terms:
        base = 1 / t.root
        # c/(x - rho)^j = c (-rho)^(-j) sum_n binom(n+j-1, j-1) rho^(-n) x^n
        piece = _binomial_poly(t.power) * (t.coeff * (-t.root) ** (-t.power))
        grouped[base] = grouped.get(base, Poly((), VAR)) + piece
    terms = []
    for base, p in grouped.items():
        if not p:
            continue
        if nu0:
            p = p.shift(nu0) * base ** nu0
        terms.append((p, base))
    terms.sort(key=lambda pb: str(pb[1]))
    corrections = {k - nu0: c for k, c in enumerate(pf.poly_part.coeffs) if c}
    return RootExpansion(-nu0, terms, corrections)


def series_coeffs(q, stop: int, start: int = 0) -> list:
    """Exact Laurent coefficients of q for x^start .. x^stop."""
    q = to_ratfun(q, XVAR)
    nu0 = q.den.valuation()
    den = Poly(q.den.coeffs[nu0:], XVAR)
    count = stop + nu0 + 1
    out = []
    for k in range(max(count, 0)):
        acc = q.num[k]
        for i in range(1, k + 1):
            acc = acc - den[i] * out[k - i]
        out.append(acc / den[0])
    # out[k] is the coefficient of x^(k - nu0)
    return [out[n + nu0] if 0 <= n + nu0 < len(out) else Fraction(0) for n in range(start, stop + 1)]


# -- expressions q(x) * GF[g] ------------------------------------------------------


class HatExpr:
    """sum_i q_i(x) * sum_{N>=0} x^N g_i(N).

    A series factor of None stands for the constant series 1, so that such a
    summand is the rational function q_i itself.  Summands are merged only
    when both the series factor and the denominator agree, which keeps the
    denominator bookkeeping of the clustering step intact.
    """

    __slots__ = ("summands",)

    def __init__(self, summands=()):
        merged: dict = {}
        order = []
        for q, g in summands:
            q = to_ratfun(q, XVAR)
            if g is not None and not isinstance(g, SumExpr):
                g = SumExpr.lift(g)
            if g is not None and not g:
                continue
            key = (g, q.den)
            if key not in merged:
                merged[key] = q
                order.append(key)
            else:
                merged[key] = merged[key] + q
        self.summands = [(merged[key], key[0]) for key in order if merged[key]]

    @classmethod
    def rational(cls, q) -> "HatExpr":
        return cls([(q, None)])

    @classmethod
    def gf(cls, g: SumExpr, q=1) -> "HatExpr":
        return cls([(q, g)])

    def __add__(self, other: "HatExpr") -> "HatExpr":
        return HatExpr(self.summands + other.summands)

    def __neg__(self):
        return HatExpr([(-q, g) for q, g in self.summands])

    def __sub__(self, other: "HatExpr") -> "HatExpr":
        return self + (-other)

    def scale(self, r) -> "HatExpr":
        r = to_ratfun(r, XVAR)
        return HatExpr([(q * r, g) for q, g in self.summands])

    def __bool__(self):
        return bool(self.summands)

    def __len__(self):
        return len(self.summands)

    def series(self, stop: int) -> list:
        """Exact coefficients of x^0..x^stop (the expression must be a power series)."""
        total = [Fraction(0)] * (stop + 1)
        ev = Evaluator()
        for q, g in self.summands:
            low = _low(q)
            qs = series_coeffs(q, stop, low)
            top = stop - low
            gv = [Fraction(1)] + [Fraction(0)] * top if g is None else [ev.value(g, n) for n in range(top + 1)]
            for n in range(stop + 1):
                acc = []
                for k in range(0, n - low + 1):
                    qc = qs[n - k - low]
                    if qc and gv[k]:
                        acc.append(qc * gv[k])
                if acc:
                    total[n] = _sum_numbers([total[n]] + acc)
        return total

    def to_str(self) -> str:
        parts = []
        for q, g in self.summands:
            gs = "1" if g is None else f"GF[{g}]"
            parts.append(f"({q})*{gs}")
        return " + ".join(parts) or "0"

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"HatExpr({self})"


def _low(q: RatFun) -> int:
    return -q.den.valuation() if q else 0


@dataclass
class CoefficientResult:
    """H(N) in closed form, valid for N >= valid_from."""

    expr: SumExpr
    valid_from: int

    def __str__(self):
        return str(self.expr)


def _summand_coeff(q: RatFun, g) -> tuple[SumExpr, int]:
    exp = expandRational(q)
    start = exp.valid_from if g is None else exp.mu
    out = SumExpr()
    if g is None:
        return exp.to_expr(), max(start, 0)
    k = SumExpr.n()
    for p, base in exp.terms:
        # sum_{k=0}^{N-mu} g(k) p(N-k) base^(N-k)
        deriv = p
        inv = pow_expr(1 / base) if base != 1 else SumExpr.const(1)
        outer = pow_expr(base) if base != 1 else SumExpr.const(1)
        i = 0
        kpow = SumExpr.const(1)
        while deriv:
            coef = deriv * Fraction((-1) ** i, factorial(i))
            inner = sum_expr(g * kpow * inv, lower=0, upper_offset=-exp.mu)
            out = out + (outer * inner).scale(RatFun(coef))
            deriv = deriv.derivative()
            kpow = kpow * k
            i += 1
    for n, c in exp.corrections.items():
        out = out + g.shift(-n).synchronize().scale(RatFun.const(c, VAR))
        start = max(start, n)
    return out, max(start, 0)


def cauchyCoeff(h: HatExpr) -> CoefficientResult:
    """[x^N] of a HatExpr as nested sums."""
    out = SumExpr()
    start = 0
    for q, g in h.summands:
        e, s = _summand_coeff(q, g)
        out = out + e
        start = max(start, s)
    return CoefficientResult(reduce_products(out.synchronize()), start)


# -- bad denominators ------------------------------------------------------------


def _monic_linear(text_or_poly) -> Poly:
    p = text_or_poly if isinstance(text_or_poly, Poly) else to_ratfun(_parse_x(text_or_poly), XVAR).num
    return p.monic()


DEFAULT_WHITELIST = ("x", "1-x", "1+x", "1-2*x", "1+2*x")


def whitelist_polys(whitelist=DEFAULT_WHITELIST) -> frozenset:
    return frozenset(_monic_linear(w) for w in whitelist)


@dataclass
class Clusters:
    nice: list
    bad: list  # list of (sorted bad factors, summands)


def _bad_factors(q: RatFun, nice: frozenset) -> set:
    if q.den.degree() <= 0:
        return set()
    fz = factor_over_q(q.den)
    out = {f for f, _ in fz.factors if f not in nice}
    if fz.nu0 and Poly.gen(XVAR) not in nice:
        out.add(Poly.gen(XVAR))
    return out


def clusterBadDenominators(h: HatExpr, whitelist=DEFAULT_WHITELIST) -> Clusters:
    """Split summands into whitelist-only ones and clusters sharing bad factors."""
    nice_set = whitelist_polys(whitelist)
    nice, groups = [], []
    for q, g in h.summands:
        bad = _bad_factors(q, nice_set)
        if not bad:
            nice.append((q, g))
            continue
        touching = [grp for grp in groups if grp[0] & bad]
        keys, members = set(bad), [(q, g)]
        for grp in touching:
            keys |= grp[0]
            members = grp[1] + members
            groups.remove(grp)
        groups.append((keys, members))
    bad_clusters = [(sorted(keys, key=lambda p: (p.degree(), str(p))), members) for keys, members in groups]
    return Clusters(nice, bad_clusters)


@dataclass
class ClusterOutcome:
    factors: list
    cancelled: bool
    order: int

    def describe(self) -> dict:
        return {
            "factors": [str(f) for f in self.factors],
            "outcome": "cancelled" if self.cancelled else "BadSumsSurvive",
            "truncation": self.order,
        }


@dataclass
class CancelResult:
    expr: HatExpr
    outcomes: list

    @property
    def bad_sums_survive(self) -> bool:
        return any(not o.cancelled for o in self.outcomes)


def _nice_part(q: RatFun, nice: frozenset) -> Poly:
    if q.den.degree() <= 0:
        return Poly.const(1, XVAR)
    fz = factor_over_q(q.den)
    out = Poly.gen(XVAR) ** fz.nu0 if Poly.gen(XVAR) in nice else Poly.const(1, XVAR)
    for f, m in fz.factors:
        if f in nice:
            out = out * f ** m
    return out


def _reconstruct(members, nice: frozenset, order: int):
    """Find polynomials P_g and R with D * cluster = sum_g P_g G_g + R to x^order."""
    den = Poly.const(1, XVAR)
    for q, _ in members:
        den = poly_lcm(den, _nice_part(q, nice))
    factors = []
    for _, g in members:
        if g is not None and g not in factors:
            factors.append(g)
    bound = max(q.num.degree() for q, _ in members) + den.degree() + 1
    unknowns = (len(factors) + 1) * (bound + 1)
    if 2 * unknowns > order:
        return None
    target = HatExpr([(q * RatFun(den), g) for q, g in members]).series(order)
    ev = Evaluator()
    gvals = [[ev.value(g, n) for n in range(order + 1)] for g in factors]
    rows = []
    for n in range(order + 1):
        row = []
        for gv in gvals:
            row.extend(gv[n - a] if n >= a else Fraction(0) for a in range(bound + 1))
        row.extend(Fraction(1) if n == a else Fraction(0) for a in range(bound + 1))
        rows.append(row)
    sol = solve(rows, target)
    if sol is None:
        return None
    dr = RatFun(den, reduced=True)
    out = []
    for idx, g in enumerate(factors + [None]):
        p = Poly(sol[idx * (bound + 1):(idx + 1) * (bound + 1)], XVAR)
        if p:
            out.append((RatFun(p) / dr, g))
    return HatExpr(out)


def _agrees(a: HatExpr, b: HatExpr, order: int) -> bool:
    return a.series(order) == b.series(order)


def cancelBadClusters(clusters: Clusters, truncation: int = DEFAULT_TRUNCATION,
                      whitelist=DEFAULT_WHITELIST) -> CancelResult:
    """Replace bad clusters that sum to a whitelist-only expression.

    The reconstruction is fitted on the series to x^truncation and checked to
    twice that order; an ambiguous fit is retried once at double truncation.
    """
    nice_set = whitelist_polys(whitelist)
    out = list(clusters.nice)
    outcomes = []
    for factors, members in clusters.bad:
        original = HatExpr(members)
        done = None
        used = truncation
        for order in (truncation, 2 * truncation):
            used = order
            cand = _reconstruct(members, nice_set, order)
            if cand is not None and _agrees(cand, original, 2 * order):
                done = cand
                break
        if done is None:
            out.extend(members)
            outcomes.append(ClusterOutcome(factors, False, used))
        else:
            out.extend(done.summands)
            outcomes.append(ClusterOutcome(factors, True, used))
    return CancelResult(HatExpr(out), outcomes)


# -- textual grammar ------------------------------------------------------------------

_GF = re.compile(r"GF\[")


def _split_gf(text: str):
    """Replace GF[...] blocks by placeholder names."""
    pieces, bodies = [], []
    pos = 0
    while True:
        m = _GF.search(text, pos)
        if not m:
            pieces.append(text[pos:])
            break
        pieces.append(text[pos:m.start()])
        depth, i = 1, m.end()
        while i < len(text) and depth:
            if text[i] == "[":
                depth += 1
            elif text[i] == "]":
                depth -= 1
            i += 1
        if depth:
            raise ParseError("unbalanced GF[...]")
        pieces.append(f"gfslot{len(bodies)}")
        bodies.append(text[m.end():i - 1])
        pos = i
    return "".join(pieces), bodies


def _parse_x(text: str) -> RatFun:
    from .algebra.parse import parse_ratfun

    return parse_ratfun(text, XVAR)


def parse_hat(text: str) -> HatExpr:
    """Parse sums like ``1/(1-x-x^2) * GF[S[2,1]] + x * GF[S[1]]``."""
    skeleton, bodies = _split_gf(text)
    series = [parse_expr(b) for b in bodies]
    tree = parse_tree(skeleton)

    def ev(node):
        if isinstance(node, Num):
            return to_ratfun(Fraction(node.value), XVAR)
        if isinstance(node, Name):
            if node.name.startswith("gfslot"):
                return HatExpr.gf(series[int(node.name[6:])])
            if node.name == XVAR:
                return RatFun.gen(XVAR)
            raise ParseError(f"unknown name {node.name!r}")
        if isinstance(node, Neg):
            v = ev(node.operand)
            return -v
        if isinstance(node, Call):
            return to_ratfun(_parse_call(node), XVAR)
        if isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                return _as_hat(a) + _as_hat(b) if isinstance(a, HatExpr) or isinstance(b, HatExpr) else a + b
            if node.op == "-":
                return _as_hat(a) - _as_hat(b) if isinstance(a, HatExpr) or isinstance(b, HatExpr) else a - b
            if node.op == "*":
                if isinstance(a, HatExpr) and isinstance(b, HatExpr):
                    raise ParseError("products of two generating functions are not supported")
                if isinstance(a, HatExpr):
                    return a.scale(b)
                if isinstance(b, HatExpr):
                    return b.scale(a)
                return a * b
            if node.op == "/":
                if isinstance(b, HatExpr):
                    raise ParseError("cannot divide by a generating function")
                return a.scale(b.inverse()) if isinstance(a, HatExpr) else a / b
            if node.op == "^":
                if isinstance(a, HatExpr):
                    raise ParseError("cannot raise a generating function to a power")
                return a ** int_power(b)
        raise ParseError(f"unsupported syntax in {text!r}")

    return _as_hat(ev(tree))


def _parse_call(node):
    from .algebra.parse import eval_number

    return eval_number(node)


def _as_hat(v) -> HatExpr:
    return v if isinstance(v, HatExpr) else HatExpr.rational(v)
