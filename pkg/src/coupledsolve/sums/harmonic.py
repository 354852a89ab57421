"""Harmonic sums with letters and the quasi-shuffle product."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from ..algebra.quad import as_number
from ..errors import MixedFieldError, NotHarmonicReducible
from .expr import Harm, NSum, SumExpr, harm_expr


def normalize_word(weights, letters=None) -> tuple:
    """Fold negative weights into letter signs: (-a, x) becomes (a, -x)."""
    if letters is None:
        letters = [1] * len(weights)
    if len(letters) != len(weights):
        raise ValueError("weights and letters differ in length")
    word = []
    for a, x in zip(weights, letters):
        a = int(a)
        x = as_number(x)
        if a < 0:
            a, x = -a, -x
        word.append((a, x))
    return tuple(word)


def S(weights, letters=None, offset: int = 0) -> SumExpr:
    """S_{weights}(letters; N + offset) as an expression.

    Signed weights follow the usual convention; zero weights are allowed and
    are rewritten into sums with positive weights.
    """
    word = normalize_word(weights, letters)
    if not word:
        return SumExpr.const(1)
    if any(a == 0 for a, _ in word):
        from .summation import word_expr

        e = word_expr(word)
    else:
        ws, xs = zip(*word)
        e = SumExpr.from_atom(Harm(ws, xs))
    return e.shift(offset).synchronize() if offset else e


@lru_cache(maxsize=8192)
def quasi_shuffle(u: tuple, v: tuple) -> dict:
    """Quasi-shuffle of two words as a dict word -> integer multiplicity."""
    if not u:
        return {v: 1}
    if not v:
        return {u: 1}
    (a, x), (b, y) = u[0], v[0]
    out: dict = {}

    def add(prefix, d, sign=1):
        for w, c in d.items():
            key = (prefix,) + w
            out[key] = out.get(key, 0) + sign * c

    add((a, x), quasi_shuffle(u[1:], v))
    add((b, y), quasi_shuffle(u, v[1:]))
    add((a + b, x * y), quasi_shuffle(u[1:], v[1:]), -1)
    return {w: c for w, c in out.items() if c}


def shuffle_product(words_with_mult) -> dict:
    """Product of several words (each may be repeated)."""
    acc = {(): 1}
    for word, mult in words_with_mult:
        for _ in range(mult):
            nxt: dict = {}
            for w, c in acc.items():
                for w2, c2 in quasi_shuffle(w, word).items():
                    nxt[w2] = nxt.get(w2, 0) + c * c2
            acc = {w: c for w, c in nxt.items() if c}
    return acc


def word_sum(coeffs: dict) -> SumExpr:
    out = SumExpr()
    for w, c in coeffs.items():
        out = out + harm_expr(w) * Fraction(c)
    return out


def reduce_products(e: SumExpr, strict: bool = False) -> SumExpr:
    """Expand every product of harmonic sums into single harmonic sums.

    Products involving sums outside the harmonic fragment are kept as they
    are, unless strict is set, in which case NotHarmonicReducible is raised.
    """
    e = e.synchronize()
    out = SumExpr()
    for mono, c in e.terms.items():
        harms, others = [], []
        for atom, k in mono:
            if isinstance(atom, Harm):
                harms.append((atom.word(), k))
            elif isinstance(atom, NSum):
                others.append((NSum(atom.lower, reduce_products(atom.summand, strict), atom.offset), k))
            else:
                others.append((atom, k))
        count = sum(k for _, k in harms)
        nested = [a for a, _ in others if isinstance(a, NSum)]
        if strict and nested and (count or len(nested) > 1 or any(k > 1 for _, k in others)):
            raise NotHarmonicReducible(f"product with opaque sums in {e}")
        rest = SumExpr.const(1)
        for atom, k in others:
            rest = rest * SumExpr.from_atom(atom, k)
        rest = rest.scale(c)
        if count >= 2:
            try:
                harm_part = word_sum(shuffle_product(harms))
            except MixedFieldError:
                harm_part = SumExpr.const(1)
                for w, k in harms:
                    harm_part = harm_part * harm_expr(w) ** k
        elif count == 1:
            harm_part = harm_expr(harms[0][0])
        else:
            harm_part = SumExpr.const(1)
        out = out + rest * harm_part
    return out
