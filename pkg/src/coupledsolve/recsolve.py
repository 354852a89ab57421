"""Solving linear recurrences with polynomial coefficients.

Operators are lists ``[c_0, ..., c_m]`` standing for sum_k c_k(N) f(N+k)
(polynomials or rational functions in N).  Hypergeometric solutions are
searched with Petkovsek's method, d'Alembertian solutions by peeling off first
order right factors, and particular solutions by variation of constants
through the factor chain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra.factor import factor_over_q, factor_roots, integer_roots
from .algebra.linalg import nullspace, solve
from .algebra.poly import Poly, RatFun, poly_gcd, poly_lcm, to_ratfun
from .algebra.quad import QuadExt
from .errors import (
    EvalPole,
    InsufficientInitialValues,
    InvariantViolation,
    IrreducibleDegreeTooHigh,
    OutsideClass,
)
from .sums.eps import EPS, EpsLaurent
from .sums.expr import VAR, Evaluator, HProd, NSum, Pow, SumExpr, pow_expr
from .sums.harmonic import reduce_products
from .sums.summation import simplify, sum_expr

CHECK_POINTS = 25


def _coeff_list(rec) -> list:
    coeffs = rec.coeffs if hasattr(rec, "coeffs") else rec
    return [to_ratfun(c, VAR) for c in coeffs]


def _clear(coeffs) -> list:
    """Multiply through by the lcm of the denominators and trim zero ends."""
    coeffs = [to_ratfun(c, VAR) for c in coeffs]
    den = Poly.const(1, VAR)
    for c in coeffs:
        den = poly_lcm(den, c.den) if c.den.is_rational() else den * c.den
    polys = [(c * RatFun(den, reduced=True)).num for c in coeffs]
    while len(polys) > 1 and not polys[-1]:
        polys.pop()
    return polys


def apply_op(coeffs, y: SumExpr) -> SumExpr:
    """sum_k c_k(N) y(N+k), synchronised."""
    out = SumExpr()
    for k, c in enumerate(coeffs):
        c = to_ratfun(c, VAR)
        if c:
            out = out + y.shift(k).synchronize().scale(c)
    return out


def residual_values(coeffs, y: SumExpr, rhs, start: int, count: int = CHECK_POINTS) -> list:
    """Values of L y - rhs at N = start .. start+count-1."""
    ev = Evaluator()
    out = []
    coeffs = [to_ratfun(c, VAR) for c in coeffs]
    for n in range(start, start + count):
        acc = Fraction(0)
        for k, c in enumerate(coeffs):
            if c:
                acc = acc + c(n) * ev.value(y, n + k)
        if rhs is not None:
            acc = acc - (ev.value(rhs, n) if isinstance(rhs, SumExpr) else rhs)
        out.append(acc)
    return out


# -- integer roots over Q or Q(sqrt d) --------------------------------------------


def _split_surd(p: Poly):
    a = Poly([c.a if isinstance(c, QuadExt) else c for c in p.coeffs], p.var)
    b = Poly([c.b if isinstance(c, QuadExt) else 0 for c in p.coeffs], p.var)
    return a, b


def _integer_roots_any(p: Poly) -> list[int]:
    if p.is_rational():
        return integer_roots(p)
    a, b = _split_surd(p)
    g = poly_gcd(a, b) if a else b
    return integer_roots(g) if g.degree() > 0 else []


def _is_integer_root_free(p: Poly, lower: int) -> int:
    roots = [r for r in _integer_roots_any(p) if r >= lower] if p.degree() > 0 else []
    return max(roots) if roots else lower - 1


# -- polynomial solutions --------------------------------------------------------------


def _falling_poly_in_d(j: int) -> Poly:
    out = Poly.const(1, "d")
    for i in range(j):
        out = out * Poly((-i, 1), "d")
    return out


def degree_bound(coeffs) -> int:
    """Largest possible degree of a polynomial solution (-1 if none)."""
    polys = _clear(coeffs)
    m = len(polys) - 1
    delta = []
    for j in range(m + 1):
        q = Poly((), VAR)
        for k in range(j, m + 1):
            q = q + polys[k] * _binom(k, j)
        delta.append(q)
    b = max(q.degree() - j for j, q in enumerate(delta) if q)
    chi = Poly((), "d")
    for j, q in enumerate(delta):
        if q and q.degree() - j == b:
            chi = chi + _falling_poly_in_d(j) * q.lc()
    roots = [r for r in _integer_roots_any(chi) if r >= 0]
    return max(roots) if roots else -1


def _binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def polySolutions(rec) -> list[Poly]:
    """Basis of the polynomial solutions of the homogeneous recurrence."""
    polys = _clear(_coeff_list(rec))
    bound = degree_bound(polys)
    if bound < 0:
        return []
    columns = []
    n = Poly.gen(VAR)
    for i in range(bound + 1):
        acc = Poly((), VAR)
        for k, c in enumerate(polys):
            if c:
                acc = acc + c * (n + k) ** i
        columns.append(acc)
    height = max((c.degree() for c in columns if c), default=0) + 1
    matrix = [[col[t] for col in columns] for t in range(height)]
    basis = nullspace(matrix) if any(any(v for v in row) for row in matrix) else [
        [Fraction(1) if i == j else Fraction(0) for i in range(bound + 1)] for j in range(bound + 1)
    ]
    out = [Poly(v, VAR) for v in basis]
    return sorted((p.monic() for p in out), key=lambda p: (p.degree(), str(p)))


# -- hypergeometric solutions ------------------------------------------------------------


@dataclass(frozen=True)
class HypProduct:
    """A hypergeometric term given by its ratio r(N) = y(N+1)/y(N)."""

    ratio: RatFun

    def closed_form(self) -> tuple[SumExpr, int]:
        return hyper_closed_form(self.ratio)

    def __str__(self):
        return str(self.ratio)


def _monic_divisors(p: Poly) -> list[Poly]:
    if p.degree() <= 0:
        return [Poly.const(1, VAR)]
    fz = factor_over_q(p)
    pieces = [(Poly.gen(VAR), fz.nu0)] if fz.nu0 else []
    pieces += list(fz.factors)
    out = []
    for exps in itertools.product(*[range(m + 1) for _, m in pieces]):
        d = Poly.const(1, VAR)
        for (f, _), e in zip(pieces, exps):
            d = d * f ** e
        out.append(d)
    return out


def _z_roots(poly: Poly, quadratic: bool) -> list:
    if poly.degree() <= 0:
        return []
    fz = factor_over_q(poly)
    out = []
    for f, _ in fz.factors:
        if f.degree() == 1:
            out.append(-f[0])
        elif f.degree() == 2 and quadratic:
            out.extend(factor_roots(f))
    return out


def _ratio_annihilates(coeffs, r: RatFun) -> bool:
    total = RatFun.const(0, VAR)
    prod = RatFun.const(1, VAR)
    for k, c in enumerate(coeffs):
        total = total + to_ratfun(c, VAR) * prod
        prod = prod * r.shift(k)
    return not total


def _ratio_key(r: RatFun):
    has_surd = any(isinstance(c, QuadExt) for c in r.num.coeffs + r.den.coeffs)
    return (has_surd, r.num.degree() + r.den.degree(), r.bitsize(), str(r))


def hyperSolutions(rec, quadratic: bool = False) -> list[HypProduct]:
    """All hypergeometric solutions up to constant multiples, by ratio."""
    polys = _clear(_coeff_list(rec))
    m = len(polys) - 1
    low = 0
    while low < m and not polys[low]:
        low += 1
    polys = [p.shift(-low) for p in polys[low:]]
    m = len(polys) - 1
    if m <= 0:
        return []
    if m == 1:
        r = RatFun(-polys[0], polys[1])
        return [HypProduct(r)]
    if not all(p.is_rational() for p in polys):
        return []
    found: dict = {}
    c0, cm = polys[0], polys[m].shift(-m + 1)
    # a and b are monic, so the leading terms of the transformed coefficients
    # and hence the candidate z values depend only on (deg a, deg b)
    degs = [p.degree() if p else None for p in polys]
    roots_for: dict = {}
    prefix: dict = {}
    suffix: dict = {}
    for a in _monic_divisors(c0):
        for b in _monic_divisors(cm):
            key = (a.degree(), b.degree())
            if key not in roots_for:
                tops = [dk + k * key[0] + (m - k) * key[1] if dk is not None else None for k, dk in enumerate(degs)]
                d = max(t for t in tops if t is not None)
                zpoly = Poly([polys[k].lc() if tops[k] == d else 0 for k in range(m + 1)], "z")
                roots_for[key] = [z for z in _z_roots(zpoly, quadratic) if z]
            if not roots_for[key]:
                continue
            if a not in prefix:
                pre = [Poly.const(1, VAR)]
                for i in range(m):
                    pre.append(pre[-1] * a.shift(i))
                prefix[a] = pre
            if b not in suffix:
                suf = [Poly.const(1, VAR)]
                for i in range(m - 1, -1, -1):
                    suf.append(suf[-1] * b.shift(i))
                suffix[b] = suf[::-1]
            ps = [polys[k] * prefix[a][k] * suffix[b][k] for k in range(m + 1)]
            for z in roots_for[key]:
                reduced = [p * z ** k for k, p in enumerate(ps)]
                for c in polySolutions(reduced):
                    r = RatFun(a, b) * RatFun(c.shift(1), c) * z
                    if r and _ratio_annihilates(polys, r):
                        found.setdefault(r, HypProduct(r))
    return sorted(found.values(), key=lambda h: _ratio_key(h.ratio))


def hyper_closed_form(r: RatFun) -> tuple[SumExpr, int]:
    """A term y with y(N+1) = r(N) y(N), plus the first N where this holds.

    Integer-shifted linear factors become factorials times rational
    functions; other factors are kept in a hypergeometric product.
    """
    r = to_ratfun(r, VAR)
    if not r:
        raise ValueError("zero ratio")
    z = r.num.lc()
    num, den = r.num.monic(), r.den
    start = 0
    for p in (num, den):
        if p.degree() > 0:
            start = max(start, _is_integer_root_free(p, -10 ** 9) + 1)
    out = pow_expr(z) if z != 1 else SumExpr.const(1)
    if r.is_constant():
        return out, 0
    if not (num.is_rational() and den.is_rational()):
        rest = RatFun(num, den)
        return out * SumExpr.from_atom(HProd(max(start, 1), rest.shift(-1))), max(start, 0)
    fact_exp = 0
    rational = RatFun.const(1, VAR)
    rest = RatFun.const(1, VAR)
    for poly, sign in ((num, 1), (den, -1)):
        if poly.degree() <= 0:
            continue
        fz = factor_over_q(poly)
        pieces = [(Poly.gen(VAR), fz.nu0)] if fz.nu0 else []
        pieces += list(fz.factors)
        for f, mult in pieces:
            if f.degree() == 1 and f[0].denominator == 1:
                a = int(f[0])
                # prod up to N-1 of (k + a) = (N + a - 1)! / const
                fact_exp += sign * mult
                if a >= 1:
                    adj = RatFun.const(1, VAR)
                    for i in range(1, a):
                        adj = adj * Poly((i, 1), VAR)
                else:
                    adj = RatFun.const(1, VAR)
                    for i in range(a, 1):
                        adj = adj / Poly((i, 1), VAR)
                rational = rational * adj ** (sign * mult)
            else:
                rest = rest * RatFun(f) ** (sign * mult)
    if fact_exp > 0:
        out = out * SumExpr.from_atom(HProd(1, RatFun.gen(VAR)), fact_exp)
    elif fact_exp < 0:
        out = out * SumExpr.from_atom(HProd(1, RatFun.gen(VAR).inverse()), -fact_exp)
    if not rest.is_constant():
        out = out * SumExpr.from_atom(HProd(1, rest.shift(-1)))
    out = out.scale(rational)
    return out, max(start, 0)


def invert_term(e: SumExpr) -> SumExpr:
    """1/e for a single monomial in roots, products and coefficients."""
    if len(e.terms) != 1:
        raise ValueError("only single terms can be inverted")
    (mono, c), = e.terms.items()
    out = SumExpr.const(1)
    for atom, k in mono:
        if isinstance(atom, Pow):
            out = out * pow_expr(1 / atom.base)
        elif isinstance(atom, HProd):
            out = out * SumExpr.from_atom(HProd(atom.lower, atom.ratio.inverse() ** k, atom.offset))
        else:
            raise ValueError(f"cannot invert {atom.to_str(VAR)}")
    return out.scale(c.inverse())


# -- operator factorisation ---------------------------------------------------------------


def right_divide(coeffs, r: RatFun) -> tuple[list, RatFun]:
    """L = Q (S - r) + R; returns (Q coefficients, R)."""
    work = [to_ratfun(c, VAR) for c in coeffs]
    m = len(work) - 1
    q = [None] * m
    for k in range(m, 0, -1):
        qk = work[k]
        q[k - 1] = qk
        work[k] = work[k] - qk
        work[k - 1] = work[k - 1] + qk * r.shift(k - 1)
    return q, work[0]


@dataclass
class RecSolveResult:
    basis: list = field(default_factory=list)
    particular: SumExpr | None = None
    certificate: list = field(default_factory=list)
    unsolved_order: int = 0
    valid_from: int = 0
    residual_operator: list | None = None

    @property
    def complete(self) -> bool:
        return self.unsolved_order == 0


def _zero_free_from(c: RatFun, lower: int) -> int:
    """First n >= lower after which c has no zeros or poles."""
    s = lower
    for p in (c.num, c.den):
        if p.degree() > 0:
            s = max(s, _is_integer_root_free(p, lower) + 1)
    return s


def _first_order(h: SumExpr, z: SumExpr, n0: int) -> SumExpr:
    """h(N) * sum_{k=n0}^{N-1} z(k) / h(k+1)."""
    if not z:
        return SumExpr()
    summand = z * invert_term(h).shift(1).synchronize()
    inner = sum_expr(summand, lower=n0, upper_offset=-1)
    return reduce_products(h * inner)


def _chain(coeffs, rhs: SumExpr, quadratic: bool, start: int):
    """Recursive d'Alembert reduction; returns (particular, basis, ratios, unsolved, start, op)."""
    coeffs = [to_ratfun(c, VAR) for c in coeffs]
    while len(coeffs) > 1 and not coeffs[-1]:
        coeffs.pop()
    m = len(coeffs) - 1
    if m == 0:
        c = coeffs[0]
        s = _zero_free_from(c, start)
        part = rhs.scale(c.inverse()) if rhs else SumExpr()
        return part, [], [], 0, s, None
    hyps = hyperSolutions(coeffs, quadratic)
    if not hyps:
        return (SumExpr() if not rhs else None), [], [], m, start, coeffs
    r = hyps[0].ratio
    h, hs = hyper_closed_form(r)
    s = max(start, hs)
    for c in coeffs:
        s = max(s, _zero_free_from(c, s) if c.den.degree() > 0 else s)
    q, rem = right_divide(coeffs, r)
    if rem:
        raise InvariantViolation(f"S - ({r}) is not a right factor")
    zpart, zbasis, ratios, unsolved, s2, op = _chain(q, rhs, quadratic, s)
    s = max(s, s2)
    basis = [h] + [_first_order(h, zb, s) for zb in zbasis]
    part = _first_order(h, zpart, s) if zpart is not None else None
    return part, basis, [r] + ratios, unsolved, s, op


def dalembertSolve(rec, rhs=None, quadratic: bool = False, start: int = 0,
                   verify: bool = True) -> RecSolveResult:
    """d'Alembertian solutions of sum_k c_k(N) y(N+k) = rhs(N)."""
    coeffs = _coeff_list(rec)
    rhs = SumExpr.lift(rhs) if rhs is not None else SumExpr()
    start = max(start, getattr(rec, "n_min", 0))
    part, basis, ratios, unsolved, s, op = _chain(coeffs, rhs, quadratic, start)
    basis = [simplify(b) for b in basis]
    if part is not None:
        part = simplify(part)
    result = RecSolveResult(basis, part, ratios, unsolved, s, op)
    if verify:
        for b in basis:
            if any(residual_values(coeffs, b, None, s)):
                raise InvariantViolation(f"basis element {b} fails the recurrence")
        if part is not None and any(residual_values(coeffs, part, rhs, s)):
            raise InvariantViolation(f"particular solution {part} fails the recurrence")
    return result


# -- order-by-order eps expansion --------------------------------------------------------------


def _eps_valuation(c) -> int | None:
    if isinstance(c, RatFun) and c.var == EPS:
        if not c:
            return None
        return c.num.valuation() - c.den.valuation()
    return None if not c else 0


def _coeff_eps_parts(c, v: int, count: int) -> list:
    """Polynomials in N for the eps^(v) .. eps^(v+count-1) parts of c."""
    from .sums.eps import eps_coefficients

    c = to_ratfun(c, VAR)
    if not c.is_poly():
        raise ValueError("recurrence coefficients must be polynomial in N")
    return eps_coefficients(c.num, v, v + count - 1)


def _lower_eps(c) -> int:
    c = to_ratfun(c, VAR)
    vals = [_eps_valuation(a) for a in c.num.coeffs]
    vals = [x for x in vals if x is not None]
    return min(vals) if vals else 10 ** 9


@dataclass
class EpsSolution:
    """Closed forms I_j(N) for eps^lo .. eps^top, valid for N >= starts[j]."""

    lo: int
    top: int
    exprs: list
    starts: list
    tables: list
    table_start: int
    initial_used: list = field(default_factory=list)
    v_shift: int = 0
    required: list = field(default_factory=list)

    def order(self, j: int) -> SumExpr:
        return self.exprs[j - self.lo]

    def value(self, j: int, n: int):
        """Exact eps^j coefficient at n, from the closed form or the table."""
        idx = j - self.lo
        if n >= self.starts[idx]:
            return self.exprs[idx](n)
        return self.tables[idx][n - self.table_start]

    def as_laurent(self) -> EpsLaurent:
        return EpsLaurent(self.lo, list(self.exprs))

    def __str__(self):
        parts = [f"eps^{j}*({e})" for j, e in zip(range(self.lo, self.top + 1), self.exprs)]
        return " + ".join(parts) + f" + O(eps^{self.top + 1})"


def _rhs_order(rhs, j: int):
    if rhs is None:
        return SumExpr()
    if isinstance(rhs, EpsLaurent):
        c = rhs[j]
        return c if isinstance(c, SumExpr) else SumExpr.lift(c)
    return SumExpr.lift(rhs) if j == 0 else SumExpr()


def _initial_order(value, j: int):
    if isinstance(value, EpsLaurent):
        return value[j]
    return value if j == 0 else Fraction(0)


class _Tables:
    """Exact values of every eps-order, iterated forward on demand."""

    def __init__(self, ops, lo, top, n_min, initial, rhs_num):
        self.ops = ops
        self.lo, self.top = lo, top
        self.m = len(ops[0]) - 1
        self.n_min = n_min
        self.initial = initial
        self.rhs_num = rhs_num
        self.vals = [dict() for _ in range(lo, top + 1)]
        self.stop = n_min

    def ensure(self, stop: int):
        m, lead = self.m, self.ops[0][self.m]
        for n in range(self.stop, stop):
            for j in range(self.lo, self.top + 1):
                vals = self.vals[j - self.lo]
                if n < self.n_min + m:
                    vals[n] = _initial_order(self.initial[n], j)
                    continue
                if n in self.initial:
                    vals[n] = _initial_order(self.initial[n], j)
                    self._check(j, n)
                    continue
                vals[n] = self._step(j, n) / lead(n - m)
        self.stop = max(self.stop, stop)

    def _step(self, j: int, n: int):
        """lead(n - m) * value at n, from the recurrence at N = n - m."""
        m = self.m
        big_n = n - m
        acc = self.rhs_num(j, big_n)
        for t in range(0, j - self.lo + 1):
            row = self.ops[t]
            prev = self.vals[j - t - self.lo]
            for k in range(m + 1):
                if t == 0 and k == m:
                    continue
                c = row[k]
                if c:
                    acc = acc - c(big_n) * prev[big_n + k]
        return acc

    def _check(self, j: int, n: int):
        """Supplied values must satisfy the recurrence where it determines them."""
        lead = self.ops[0][self.m](n - self.m)
        if not lead:
            return
        try:
            want = self._step(j, n)
        except (InsufficientInitialValues, EvalPole, ZeroDivisionError):
            return
        if self.vals[j - self.lo][n] * lead != want:
            raise ValueError(f"initial value at N={n} (eps^{j}) contradicts the recurrence")

    def order(self, j: int) -> dict:
        return self.vals[j - self.lo]


def epsSolve(rec, rhs, initial: dict, window: tuple[int, int], quadratic: bool = False,
             rhs_valid_from: int = 0, rhs_values=None, n_min: int | None = None) -> EpsSolution:
    """Solve sum_k c_k(N, eps) I(N+k) = rhs order by order in eps.

    initial maps indices n to EpsLaurent values or plain numbers.  rhs_values,
    if given, returns the exact eps^j coefficient of the rhs at n for every n;
    otherwise the closed form is evaluated, which must be valid from
    rhs_valid_from on.  Supplied values at indices beyond the required ones
    take precedence over iteration.
    """
    lo, top = window
    coeffs = [to_ratfun(c, VAR) for c in (rec.coeffs if hasattr(rec, "coeffs") else rec)]
    if n_min is None:
        n_min = getattr(rec, "n_min", 0)
    m = len(coeffs) - 1
    width = top - lo + 1
    v = min(_lower_eps(c) for c in coeffs if c)
    parts = [_coeff_eps_parts(c, v, width) for c in coeffs]
    ops = [[parts[k][t] for k in range(m + 1)] for t in range(width)]
    lead = ops[0][m]
    if not lead:
        raise OutsideClass("leading coefficient vanishes at eps = 0", residual_order=m, order=m)
    needed = list(range(n_min, n_min + m))
    needed += [r + m for r in _integer_roots_any(lead) if r >= n_min]
    missing = [n for n in sorted(set(needed)) if n not in initial]
    if missing:
        raise InsufficientInitialValues(missing)
    ev = Evaluator()

    def rhs_num(j, n):
        jj = j + v
        if rhs_values is not None:
            return rhs_values(jj, n)
        if n < rhs_valid_from:
            raise InsufficientInitialValues([n])
        return ev.value(_rhs_order(rhs, jj), n)

    tables = _Tables(ops, lo, top, n_min, initial, rhs_num)
    exprs, starts = [], []
    for j in range(lo, top + 1):
        g = _rhs_order(rhs, j + v)
        g_start = rhs_valid_from
        for t in range(1, j - lo + 1):
            g = g - apply_op(ops[t], exprs[j - t - lo])
            g_start = max(g_start, starts[j - t - lo])
        g = reduce_products(g)
        res = dalembertSolve(ops[0], g, quadratic, start=max(n_min, g_start), verify=False)
        if res.particular is None:
            raise OutsideClass(
                f"eps^{j}: the operator has a factor of order {res.unsolved_order} without "
                "hypergeometric right factors",
                residual_order=res.unsolved_order,
                order=j,
            )
        n0 = max(res.valid_from, n_min, g_start)
        tables.ensure(n0 + CHECK_POINTS + len(res.basis) + 2)
        table = tables.order(j)
        expr = _match(res, table, n0, j)
        start = n0
        while start - 1 >= n_min:
            try:
                if ev.value(expr, start - 1) != table[start - 1]:
                    break
            except (EvalPole, ZeroDivisionError):
                break
            start -= 1
        exprs.append(expr)
        starts.append(start)
    stop = tables.stop
    table_lists = [[tables.order(j)[n] for n in range(n_min, stop)] for j in range(lo, top + 1)]
    used = sorted(n for n in initial if n < stop)
    return EpsSolution(lo, top, exprs, starts, table_lists, n_min, used, v, sorted(set(needed)))


def _match(res: RecSolveResult, table: dict, n0: int, j: int) -> SumExpr:
    """Fit the homogeneous constants to the table and verify."""
    ev = Evaluator()
    basis = res.basis
    count = len(basis) + 2
    pts = [n for n in range(n0, n0 + count) if n in table]
    rows = [[ev.value(b, n) for b in basis] for n in pts]
    rhs = [table[n] - ev.value(res.particular, n) for n in pts]
    sol = solve(rows, rhs) if basis else []
    if sol is None:
        raise OutsideClass(
            f"eps^{j}: the tabulated solution is not in the span of the found solutions",
            residual_order=res.unsolved_order,
            order=j,
        )
    expr = res.particular
    for c, b in zip(sol, basis):
        if c:
            expr = expr + b * c
    expr = simplify(reduce_products(expr))
    for n in range(n0, n0 + CHECK_POINTS):
        if n in table and ev.value(expr, n) != table[n]:
            if res.unsolved_order:
                raise OutsideClass(
                    f"eps^{j}: partial basis does not reproduce the solution",
                    residual_order=res.unsolved_order,
                    order=j,
                )
            raise InvariantViolation(f"eps^{j}: closed form disagrees with iteration at N={n}")
    return expr


def eps_residual(rec, sol: EpsSolution, rhs, start: int, count: int = CHECK_POINTS) -> list:
    """Residual of the eps-recurrence for the closed forms, per retained order."""
    coeffs = [to_ratfun(c, VAR) for c in (rec.coeffs if hasattr(rec, "coeffs") else rec)]
    v = sol.v_shift
    width = sol.top - sol.lo + 1
    parts = [_coeff_eps_parts(c, v, width) for c in coeffs]
    out = []
    ev = Evaluator()
    for j in range(sol.lo, sol.top + 1):
        row = []
        for n in range(start, start + count):
            acc = -ev.value(_rhs_order(rhs, j + v), n)
            for t in range(0, j - sol.lo + 1):
                for k, p in enumerate(parts):
                    c = p[t]
                    if c:
                        acc = acc + c(n) * sol.value(j - t, n + k)
            row.append(acc)
        out.append(row)
    return out


__all__ = [
    "EpsSolution",
    "HypProduct",
    "RecSolveResult",
    "apply_op",
    "dalembertSolve",
    "degree_bound",
    "epsSolve",
    "eps_residual",
    "hyperSolutions",
    "hyper_closed_form",
    "polySolutions",
    "right_divide",
]
