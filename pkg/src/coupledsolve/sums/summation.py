"""Indefinite summation inside the harmonic fragment.

The central routine evaluates sums of the shape

    sum_{j=1}^{M} R(j) y^j S_w(j + t)

in closed form when R has only poles at non-positive integers.  Polynomial
parts are removed by summation by parts (which shortens the word), pole parts
become harmonic sums with one extra leading letter.  Everything else is left
as an unevaluated :class:`NSum`.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from ..algebra.factor import factor_over_q
from ..algebra.linalg import solve
from ..algebra.poly import Poly, RatFun, interpolate
from ..errors import EvalPole
from .expr import VAR, Harm, NSum, Pow, SumExpr, eval_at, harm_expr, pow_expr
from .harmonic import reduce_products

ONE = Fraction(1)


def _j() -> Poly:
    return Poly.gen(VAR)


def integer_pole_split(r: RatFun):
    """Split r into a polynomial plus sum_c sum_m coeff/(N + c)^m.

    Returns (poly_part, {c: [coeff for m = 1, 2, ...]}) or None if some pole
    is not an integer.
    """
    quo, rem = r.num.divmod(r.den)
    poles: dict[int, list] = {}
    if not rem:
        return quo, poles
    if not r.den.is_rational():
        return None
    fz = factor_over_q(r.den)
    for f, mult in fz.factors:
        if f.degree() != 1 or f[0].denominator != 1:
            return None
    for root, mult in fz.roots():
        lin = Poly((-root, 1), VAR) ** mult
        cof = r.den.exact_div(lin)
        num_s, cof_s = rem.shift(root), cof.shift(root)
        coeffs = []
        for k in range(mult):
            acc = num_s[k]
            for i in range(1, k + 1):
                acc = acc - cof_s[i] * coeffs[k - i]
            coeffs.append(acc / cof_s[0])
        poles[int(-root)] = [coeffs[mult - m] for m in range(1, mult + 1)]
    return quo, poles


def partial_sum_poly(p: Poly) -> Poly:
    """Q with Q(M) = sum_{j=1}^M p(j)."""
    d = max(p.degree(), 0) + 1
    pts = list(range(d + 1))
    vals, acc = [], Fraction(0)
    for m in pts:
        if m:
            acc = acc + p(m)
        vals.append(acc)
    return interpolate(pts, vals, VAR)


def antidiff_poly(p: Poly, y) -> Poly:
    """Q with Q(j) - Q(j-1)/y = p(j), for y != 1."""
    d = max(p.degree(), 0)
    rows, rhs = [], []
    for j in range(d + 1):
        rows.append([Fraction(j) ** i - Fraction(j - 1) ** i / y for i in range(d + 1)])
        rhs.append(p(j))
    coeffs = solve(rows, rhs)
    return Poly(coeffs, VAR)



def _opaque(r: RatFun, y, word) -> SumExpr:
    summand = SumExpr({(): r}) * harm_expr(word)
    if y != 1:
        summand = summand * pow_expr(y)
    return SumExpr.from_atom(NSum(1, summand))


@lru_cache(maxsize=8192)
def core_sync(r: RatFun, y, word: tuple) -> SumExpr:
    """sum_{j=1}^{N} r(j) y^j S_word(j)."""
    if not r:
        return SumExpr()
    split = integer_pole_split(r)
    if split is None:
        return _opaque(r, y, word)
    poly, poles = split
    if any(c < 0 for c in poles):
        raise EvalPole(f"summand {r} has a pole inside the summation range")
    out = SumExpr()
    if poly:
        q = partial_sum_poly(poly) if y == 1 else antidiff_poly(poly, y)
        lead = SumExpr({(): RatFun(q)})
        if y != 1:
            lead = lead * pow_expr(y)
        if not word:
            out = out + lead - (q(0) if y != 1 else 0)
        else:
            a1, x1 = word[0]
            out = out + lead * harm_expr(word)
            inner = RatFun(q.shift(-1), _j() ** a1)
            out = out - core_sync(inner, y * x1, word[1:]).scale(RatFun.const(ONE / y, VAR))
    for c0, coeffs in sorted(poles.items()):
        for m, c in enumerate(coeffs, start=1):
            if c:
                out = out + pole_sum(m, c0, y, word).scale(RatFun.const(c, VAR))
    return out


def pole_sum(m: int, c0: int, y, word: tuple) -> SumExpr:
    """sum_{j=1}^{N} y^j / (j + c0)^m * S_word(j)."""
    lead_word = ((m, y),) + word
    if c0 == 0:
        return harm_expr(lead_word)
    ws, xs = zip(*lead_word)
    shifted = Harm(ws, xs, c0)
    inner = SumExpr.from_atom(shifted).synchronize() - eval_at(harm_expr(lead_word), c0)
    if word:
        a1, x1 = word[0]
        for i in range(c0):
            t = c0 - i
            r = RatFun(Poly.const(1, VAR), Poly((c0, 1), VAR) ** m * Poly((t, 1), VAR) ** a1)
            factor = y ** c0 * x1 ** t
            inner = inner - core(r, y * x1, word[1:], t).scale(RatFun.const(factor, VAR))
    return inner.scale(RatFun.const(y ** (-c0), VAR))


def core(r: RatFun, y, word: tuple, t: int) -> SumExpr:
    """sum_{j=1}^{N} r(j) y^j S_word(j + t) for t >= 0."""
    if t == 0 or not word:
        return core_sync(r, y, word)
    a1, x1 = word[0]
    out = core_sync(r, y, word)
    for i in range(1, t + 1):
        r2 = r * RatFun(Poly.const(1, VAR), Poly((i, 1), VAR) ** a1)
        out = out + core(r2, y * x1, word[1:], i).scale(RatFun.const(x1 ** i, VAR))
    return out


def _fragment(mono: tuple):
    """Return (y, word) if the monomial is y^N * S_word(N), else None."""
    y = ONE
    word = ()
    for atom, k in mono:
        if isinstance(atom, Pow):
            y = atom.base
        elif isinstance(atom, Harm) and k == 1 and not word and atom.offset == 0:
            word = atom.word()
        else:
            return None
    return y, word


def sum_expr(e: SumExpr, lower: int = 1, upper_offset: int = 0) -> SumExpr:
    """sum_{k=lower}^{N+upper_offset} e(k) as an expression in N.

    Terms inside the harmonic fragment are summed in closed form; the rest is
    collected into one unevaluated sum.
    """
    e = reduce_products(e.synchronize())
    out = SumExpr()
    opaque = SumExpr()
    for mono, c in e.terms.items():
        frag = _fragment(mono)
        term = SumExpr({mono: c})
        if frag is None:
            opaque = opaque + term
            continue
        y, word = frag
        low = lower
        head = SumExpr()
        while low <= 0:
            head = head + eval_at(term, low)
            low += 1
        shift = low - 1
        r = c.shift(shift)
        if integer_pole_split(r) is None:
            opaque = opaque + term
            continue
        body = core(r, y, word, shift)
        if shift:
            body = body.scale(RatFun.const(y ** shift, VAR))
        body = body.shift(upper_offset - low + 1).synchronize()
        out = out + head + body
    if opaque:
        out = out + SumExpr.from_atom(NSum(lower, opaque, 0)).shift(upper_offset).synchronize()
    return out


def word_expr(word: tuple) -> SumExpr:
    """S_word(N) for a word that may contain zero weights."""
    if not word:
        return SumExpr.const(1)
    if all(a > 0 for a, _ in word):
        return harm_expr(word)
    a1, x1 = word[0]
    summand = word_expr(word[1:]) * pow_expr(x1)
    if a1:
        summand = summand.scale(RatFun(Poly.const(1, VAR), _j() ** a1))
    return sum_expr(summand)


def simplify(e: SumExpr) -> SumExpr:
    """Evaluate unevaluated sums where possible and expand harmonic products."""
    out = SumExpr()
    for mono, c in e.terms.items():
        term = SumExpr({(): c})
        for atom, k in mono:
            if isinstance(atom, NSum):
                piece = sum_expr(simplify(atom.summand), atom.lower, 0)
                term = term * piece.shift(atom.offset).synchronize() ** k
            else:
                term = term * SumExpr.from_atom(atom, k)
        out = out + term
    return reduce_products(out)
