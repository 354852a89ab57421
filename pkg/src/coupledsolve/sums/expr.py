"""Expressions built from nested sums over hypergeometric products.

A :class:`SumExpr` is a function of one integer argument ``N``.  It is stored
as a map from monomials to rational-function coefficients in ``N``.  A
monomial is a sorted tuple of ``(atom, exponent)`` pairs drawn from

* :class:`Harm`  -- S_{a1..ad}(x1..xd; N + offset),
* :class:`Pow`   -- base^N (at most one per monomial),
* :class:`HProd` -- prod_{k=lower}^{N+offset} ratio(k),
* :class:`NSum`  -- sum_{k=lower}^{N+offset} summand(k).

Empty ranges follow the usual conventions: a sum with upper bound below its
lower bound is 0 and such a product is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from ..algebra.poly import Poly, RatFun
from ..algebra.quad import QuadExt, as_number, field_sum
from ..errors import EvalPole, MixedFieldError

VAR = "N"
INDEX_NAMES = ("k", "j", "i", "m", "l", "p", "q", "r")


def index_name(depth: int) -> str:
    if depth < len(INDEX_NAMES):
        return INDEX_NAMES[depth]
    return f"k{depth}"


def _arg_str(var: str, offset: int) -> str:
    if offset == 0:
        return var
    return f"{var}+{offset}" if offset > 0 else f"{var}{offset}"


# -- atoms --------------------------------------------------------------------


@dataclass(frozen=True)
class Harm:
    """S_{weights}(letters; N + offset) with positive weights."""

    weights: tuple
    letters: tuple
    offset: int = 0

    rank = 0

    def __post_init__(self):
        if not self.weights or len(self.weights) != len(self.letters):
            raise ValueError("harmonic sum needs matching nonempty weights and letters")
        if any(a <= 0 for a in self.weights):
            raise ValueError("atom weights must be positive; fold signs into letters")

    @property
    def depth(self) -> int:
        return len(self.weights)

    def plain(self) -> bool:
        return all(x == 1 for x in self.letters)

    def word(self):
        return tuple(zip(self.weights, self.letters))

    def with_offset(self, offset: int) -> "Harm":
        return Harm(self.weights, self.letters, offset)

    def to_str(self, var: str, depth: int = 0) -> str:
        ws = ",".join(str(a) for a in self.weights)
        if self.plain():
            head = f"S[{ws}]"
        else:
            head = "S[{%s},{%s}]" % (ws, ",".join(str(x) for x in self.letters))
        return f"{head}({_arg_str(var, self.offset)})"

    @cached_property
    def sort_key(self):
        return (self.rank, len(self.weights), self.to_str("N"))


@dataclass(frozen=True)
class Pow:
    """base^N for a nonzero number base != 1."""

    base: object

    rank = 3

    offset = 0

    def to_str(self, var: str, depth: int = 0) -> str:
        return f"Pow({self.base},{var})"

    @cached_property
    def sort_key(self):
        return (self.rank, 0, self.to_str("N"))


@dataclass(frozen=True)
class HProd:
    """prod_{k=lower}^{N+offset} ratio(k)."""

    lower: int
    ratio: RatFun
    offset: int = 0

    rank = 1

    def with_offset(self, offset: int) -> "HProd":
        return HProd(self.lower, self.ratio, offset)

    def to_str(self, var: str, depth: int = 0) -> str:
        body = self.ratio.to_str(index_name(depth))
        return f"Prod[{self.lower},{body}]({_arg_str(var, self.offset)})"

    @cached_property
    def sort_key(self):
        return (self.rank, 0, self.to_str("N"))


@dataclass(frozen=True)
class NSum:
    """sum_{k=lower}^{N+offset} summand(k); summand is a SumExpr in its own argument."""

    lower: int
    summand: "SumExpr"
    offset: int = 0

    rank = 2

    def with_offset(self, offset: int) -> "NSum":
        return NSum(self.lower, self.summand, offset)

    def to_str(self, var: str, depth: int = 0) -> str:
        body = self.summand.to_str(index_name(depth), depth + 1)
        return f"Sum[{self.lower},{body}]({_arg_str(var, self.offset)})"

    @cached_property
    def sort_key(self):
        return (self.rank, 0, self.to_str("N"))


def _coeff(value) -> RatFun:
    if isinstance(value, RatFun):
        if value.var != VAR:
            raise TypeError(f"coefficients must be rational functions in {VAR}")
        return value
    if isinstance(value, Poly):
        return RatFun(value)
    return RatFun.const(as_number(value), VAR)


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    """Multiply two monomials, merging root powers into one base and products
    with the same range into one ratio."""
    exps: dict = {}
    prods: dict = {}
    base = None
    for atom, e in m1 + m2:
        if isinstance(atom, Pow):
            base = atom.base if base is None else base * atom.base
        elif isinstance(atom, HProd):
            key = (atom.lower, atom.offset)
            prods[key] = prods[key] * atom.ratio ** e if key in prods else atom.ratio ** e
        else:
            exps[atom] = exps.get(atom, 0) + e
    items = [(a, e) for a, e in exps.items() if e]
    for (lower, offset), ratio in prods.items():
        if not ratio.is_constant():
            items.append((HProd(lower, ratio, offset), 1))
    if base is not None and base != 1:
        items.append((Pow(base), 1))
    items.sort(key=lambda ae: ae[0].sort_key)
    return tuple(items)


class SumExpr:
    """Finite linear combination of monomials with coefficients in K(N)."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = _coeff(c)
                if c:
                    clean[mono] = c
        self.terms = clean
        self._hash = None

    # -- constructors --------------------------------------------------------------
    @classmethod
    def const(cls, c) -> "SumExpr":
        return cls({(): c})

    @classmethod
    def from_atom(cls, atom, exponent: int = 1) -> "SumExpr":
        if isinstance(atom, Pow):
            if atom.base == 1:
                return cls.const(1)
            return cls({((atom, 1),): 1})
        if isinstance(atom, HProd) and exponent != 1:
            return cls({((HProd(atom.lower, atom.ratio ** exponent, atom.offset), 1),): 1})
        return cls({((atom, exponent),): 1})

    @classmethod
    def n(cls) -> "SumExpr":
        return cls({(): RatFun.gen(VAR)})

    # -- queries ----------------------------------------------------------------------
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient_only(self):
        """Return the RatFun if the expression has no atoms, else None."""
        if not self.terms:
            return RatFun.const(0, VAR)
        if len(self.terms) == 1 and () in self.terms:
            return self.terms[()]
        return None

    def atoms(self) -> set:
        out = set()
        for mono in self.terms:
            out.update(a for a, _ in mono)
        return out

    def max_offset(self) -> int:
        out = 0
        for atom in self.atoms():
            out = max(out, -atom.offset)
        return out

    # -- arithmetic ---------------------------------------------------------------------
    @staticmethod
    def lift(value) -> "SumExpr":
        if isinstance(value, SumExpr):
            return value
        return SumExpr.const(value) if not isinstance(value, (RatFun, Poly)) else SumExpr({(): value})

    def __add__(self, other):
        if not isinstance(other, (SumExpr, RatFun, Poly, int, Fraction, QuadExt)):
            return NotImplemented
        other = SumExpr.lift(other)
        terms = dict(self.terms)
        for mono, c in other.terms.items():
            prev = terms.get(mono)
            terms[mono] = c if prev is None else prev + c
        return SumExpr(terms)

    __radd__ = __add__

    def __neg__(self):
        return SumExpr({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, (SumExpr, RatFun, Poly, int, Fraction, QuadExt)):
            return NotImplemented
        return self + (-SumExpr.lift(other))

    def __rsub__(self, other):
        return SumExpr.lift(other) - self

    def scale(self, c) -> "SumExpr":
        c = _coeff(c)
        if not c:
            return SumExpr()
        return SumExpr({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, QuadExt, RatFun, Poly)):
            return self.scale(other)
        if not isinstance(other, SumExpr):
            return NotImplemented
        terms: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = _mono_mul(m1, m2)
                c = c1 * c2
                prev = terms.get(mono)
                terms[mono] = c if prev is None else prev + c
        return SumExpr(terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SumExpr):
            c = other.coefficient_only()
            if c is None:
                raise TypeError("can only divide by a coefficient expression")
            other = c
        if isinstance(other, (RatFun, Poly)):
            return self.scale(_coeff(other).inverse())
        return self.scale(Fraction(1) / as_number(other))

    def __pow__(self, n: int):
        if n < 0:
            c = self.coefficient_only()
            if c is None:
                raise ValueError("negative powers need a coefficient expression")
            return SumExpr({(): c ** n})
        out = SumExpr.const(1)
        for _ in range(n):
            out = out * self
        return out

    def map_coeffs(self, f) -> "SumExpr":
        return SumExpr({m: f(c) for m, c in self.terms.items()})

    # -- argument shifts ------------------------------------------------------------------
    def shift(self, s: int) -> "SumExpr":
        """Return e(N + s) without synchronising atom offsets."""
        if s == 0:
            return self
        terms: dict = {}
        for mono, c in self.terms.items():
            factor = c.shift(s)
            new = []
            for atom, e in mono:
                if isinstance(atom, Pow):
                    factor = factor * atom.base ** s
                    new.append((atom, e))
                else:
                    new.append((atom.with_offset(atom.offset + s), e))
            new.sort(key=lambda ae: ae[0].sort_key)
            mono2 = tuple(new)
            prev = terms.get(mono2)
            terms[mono2] = factor if prev is None else prev + factor
        return SumExpr(terms)

    def synchronize(self) -> "SumExpr":
        """Rewrite so that every sum and product has argument exactly N."""
        if all(atom.offset == 0 for atom in self.atoms()):
            return self
        out = SumExpr()
        for mono, c in self.terms.items():
            term = SumExpr({(): c})
            rest = []
            for atom, e in mono:
                if atom.offset == 0:
                    rest.append((atom, e))
                else:
                    term = term * sync_atom(atom) ** e
            if rest:
                term = term * SumExpr({tuple(rest): 1})
            out = out + term
        return out

    # -- evaluation -------------------------------------------------------------------------
    def __call__(self, n: int):
        return Evaluator().value(self, n)

    def table(self, start: int, stop: int) -> list:
        ev = Evaluator()
        return [ev.value(self, n) for n in range(start, stop)]

    # -- comparison and printing ---------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, SumExpr):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction, QuadExt, RatFun, Poly)):
            return self.terms == SumExpr.lift(other).terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: tuple(a.sort_key + (e,) for a, e in mc[0]))

    def __repr__(self):
        return f"SumExpr({self})"

    def __str__(self):
        return self.to_str()

    def to_str(self, var: str = VAR, depth: int = 0) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, c in self.sorted_terms():
            parts.append(_term_str(c, mono, var, depth))
        out = parts[0]
        for p in parts[1:]:
            out += p if p.startswith("-") else "+" + p
        return out


def _term_str(c: RatFun, mono: tuple, var: str, depth: int) -> str:
    factors = []
    for atom, e in mono:
        s = atom.to_str(var, depth)
        factors.append(s if e == 1 else f"{s}^{e}")
    atoms = "*".join(factors)
    if c.is_constant():
        v = c.constant_value()
        if not atoms:
            return str(v)
        if v == 1:
            return atoms
        if v == -1:
            return "-" + atoms
        return f"{v}*{atoms}"
    text = c.to_str(var)
    if not atoms:
        return text
    return f"({text})*{atoms}"


# -- synchronisation of single atoms ------------------------------------------------------


def harm_expr(word) -> SumExpr:
    """SumExpr of S_word(N); the empty word gives 1."""
    if not word:
        return SumExpr.const(1)
    ws, xs = zip(*word)
    return SumExpr.from_atom(Harm(tuple(ws), tuple(xs)))


def pow_expr(base) -> SumExpr:
    return SumExpr.from_atom(Pow(as_number(base)))


def _inv_power(shift: int, a: int) -> RatFun:
    """1/(N + shift)^a."""
    return RatFun(Poly.const(1, VAR), Poly((shift, 1), VAR) ** a)


def sync_atom(atom) -> SumExpr:
    s = atom.offset
    if isinstance(atom, Harm):
        base = SumExpr.from_atom(atom.with_offset(0))
        (a1, x1) = atom.word()[0]
        rest = atom.word()[1:]
        out = base
        if s > 0:
            steps = [(i, 1) for i in range(1, s + 1)]
        else:
            steps = [(-i, -1) for i in range(0, -s)]
        for i, sign in steps:
            piece = pow_expr(x1).scale(_inv_power(i, a1) * (x1 ** i) * sign)
            if rest:
                piece = piece * sync_atom(Harm(*zip(*rest), offset=i))
            out = out + piece
        return out
    if isinstance(atom, HProd):
        base = SumExpr.from_atom(atom.with_offset(0))
        factor = RatFun.const(1, VAR)
        if s > 0:
            for i in range(1, s + 1):
                factor = factor * atom.ratio.shift(i)
        else:
            for i in range(0, -s):
                factor = factor / atom.ratio.shift(-i)
        return base.scale(factor)
    if isinstance(atom, NSum):
        out = SumExpr.from_atom(atom.with_offset(0))
        if s > 0:
            for i in range(1, s + 1):
                out = out + atom.summand.shift(i).synchronize()
        else:
            for i in range(0, -s):
                out = out - atom.summand.shift(-i).synchronize()
        return out
    return SumExpr.from_atom(atom)


# -- exact evaluation ----------------------------------------------------------------------


def _add(a, b):
    try:
        return a + b
    except MixedFieldError:
        return field_sum([a, b])


class Evaluator:
    """Exact evaluation with per-atom prefix tables shared across calls."""

    def __init__(self):
        self._tables: dict = {}

    def value(self, e: SumExpr, n: int):
        values = []
        for mono, c in e.terms.items():
            v = c(n) if not c.is_constant() else c.constant_value()
            if not v:
                continue
            for atom, k in mono:
                av = self.atom_value(atom, n)
                v = v * (av ** k if k != 1 else av)
                if not v:
                    break
            values.append(v)
        if not values:
            return Fraction(0)
        try:
            total = values[0]
            for v in values[1:]:
                total = total + v
            return total
        except MixedFieldError:
            return field_sum(values)

    def atom_value(self, atom, n: int):
        if isinstance(atom, Pow):
            return atom.base ** n
        m = n + atom.offset
        if isinstance(atom, Harm):
            return self._harm(atom.word(), m)
        if isinstance(atom, HProd):
            return self._prod(atom, m)
        return self._nsum(atom, m)

    def _harm(self, word, m: int):
        if not word:
            return Fraction(1)
        if m <= 0:
            return Fraction(0)
        table = self._tables.get(word)
        if table is None:
            table = [Fraction(0)]
            self._tables[word] = table
        a1, x1 = word[0]
        rest = word[1:]
        for k in range(len(table), m + 1):
            term = x1 ** k / Fraction(k) ** a1
            if rest:
                term = term * self._harm(rest, k)
            table.append(_add(table[-1], term))
        return table[m]

    def _prod(self, atom: HProd, m: int):
        key = ("prod", atom.lower, atom.ratio)
        table = self._tables.get(key)
        if table is None:
            table = [Fraction(1)]
            self._tables[key] = table
        idx = m - atom.lower + 1
        if idx <= 0:
            return Fraction(1)
        for t in range(len(table), idx + 1):
            k = atom.lower + t - 1
            val = atom.ratio(k)
            if not val:
                raise EvalPole(f"product factor {atom.ratio} vanishes at {k}")
            table.append(table[-1] * val)
        return table[idx]

    def _nsum(self, atom: NSum, m: int):
        key = ("sum", atom.lower, atom.summand)
        table = self._tables.get(key)
        if table is None:
            table = [Fraction(0)]
            self._tables[key] = table
        idx = m - atom.lower + 1
        if idx <= 0:
            return Fraction(0)
        for t in range(len(table), idx + 1):
            k = atom.lower + t - 1
            table.append(_add(table[-1], self.value(atom.summand, k)))
        return table[idx]


def eval_at(e: SumExpr, n: int):
    return Evaluator().value(e, n)


def equivalent(a: SumExpr, b: SumExpr, start: int = 0, stop: int = 21) -> bool:
    """Sampling test used for equality of expressions in the nested-sum class."""
    if a == b:
        return True
    ev = Evaluator()
    return all(ev.value(a, n) == ev.value(b, n) for n in range(start, stop))


def hprod(lower: int, ratio) -> SumExpr:
    """prod_{k=lower}^{N} ratio(k), with the constant part split off as a root power."""
    from ..algebra.factor import integer_roots

    ratio = _coeff(ratio)
    if not ratio:
        raise ValueError("product ratio must be nonzero")
    for p in (ratio.num, ratio.den):
        if p.is_rational() and p.degree() > 0 and any(r >= lower for r in integer_roots(p)):
            raise ValueError(f"ratio {ratio} has a zero or pole at an integer >= {lower}")
    c = ratio.num.lc()
    monic = ratio / c
    out = SumExpr.const(1)
    if c != 1:
        out = pow_expr(c).scale(RatFun.const(c ** (1 - lower), VAR))
    if not monic.is_constant():
        out = out * SumExpr.from_atom(HProd(lower, monic))
    return out


def factorial_expr() -> SumExpr:
    """N! as a hypergeometric product."""
    return hprod(1, RatFun.gen(VAR))
