"""Textual form of sum expressions.

    S[2,1](N)               harmonic sum with unit letters
    S[{2,1},{1/2,1}](N+1)   harmonic sum with letters, shifted argument
    Pow(rho,N)              root power; rho may be (a+b*Sqrt[d])/c
    Prod[1,k](N)            hypergeometric product (here N!)
    Sum[1,S[1](k)/k^2](N)   unevaluated nested sum

The summation index of a body is k at the outermost level, then j, i, ...
A harmonic sum written without an argument refers to N.
"""

from __future__ import annotations

from fractions import Fraction

from ..algebra.parse import BinOp, Call, ListNode, Name, Neg, Num, eval_number, int_power, parse_tree
from ..algebra.poly import RatFun
from ..algebra.quad import QuadExt
from ..errors import ParseError
from .expr import VAR, NSum, SumExpr, hprod, index_name, pow_expr
from .harmonic import S


def format_expr(e: SumExpr) -> str:
    return e.to_str(VAR, 0)


def parse_expr(text: str, var: str = VAR) -> SumExpr:
    """Parse an expression in the sum grammar."""
    return _Evaluator(var, 0).expr(parse_tree(text))


def _is_number(v) -> bool:
    return isinstance(v, (Fraction, QuadExt))


class _Evaluator:
    def __init__(self, var: str, depth: int):
        self.var = var
        self.depth = depth

    def expr(self, node) -> SumExpr:
        v = self.eval(node)
        return v if isinstance(v, SumExpr) else SumExpr.const(v)

    def eval(self, node):
        if isinstance(node, Num):
            return Fraction(node.value)
        if isinstance(node, Name):
            if node.name == self.var:
                return SumExpr({(): RatFun.gen(VAR)})
            raise ParseError(f"unknown symbol {node.name!r} (expected {self.var})")
        if isinstance(node, Neg):
            return -self.eval(node.operand)
        if isinstance(node, BinOp):
            return self.binop(node)
        if isinstance(node, Call):
            return self.call(node)
        raise ParseError(f"unexpected construct {node!r}")

    def binop(self, node: BinOp):
        a = self.eval(node.left)
        if node.op == "^":
            return a ** int_power(self.eval(node.right))
        b = self.eval(node.right)
        if node.op == "+":
            return a + b if _is_number(a) and _is_number(b) else SumExpr.lift(a) + b
        if node.op == "-":
            return a - b if _is_number(a) and _is_number(b) else SumExpr.lift(a) - b
        if node.op == "*":
            return a * b if _is_number(a) and _is_number(b) else SumExpr.lift(a) * b
        try:
            if _is_number(a) and _is_number(b):
                return a / b
            return SumExpr.lift(a) / b
        except (TypeError, ZeroDivisionError) as exc:
            raise ParseError(str(exc)) from exc

    def offset(self, node) -> int:
        v = self.eval(node)
        c = v.coefficient_only() if isinstance(v, SumExpr) else RatFun.const(v, VAR)
        if c is None or not c.is_poly() or c.num.degree() != 1 or c.num[1] != 1 or c.num[0].denominator != 1:
            raise ParseError(f"argument must be {self.var}+integer")
        return int(c.num[0])

    def call(self, node: Call):
        name = node.name
        if name == "Sqrt":
            return eval_number(node)
        if name == "S":
            return self.harmonic(node)
        if name == "Pow":
            args = node.parens or ()
            if len(args) != 2 or node.brackets is not None:
                raise ParseError("Pow expects Pow(base, argument)")
            base = self.eval(args[0])
            if not _is_number(base):
                raise ParseError("Pow base must be a number")
            if base == 0:
                raise ParseError("Pow base must be nonzero")
            s = self.offset(args[1])
            return pow_expr(base) * (base ** s)
        if name in ("Prod", "Sum"):
            if not node.brackets or len(node.brackets) != 2:
                raise ParseError(f"{name} expects {name}[lower, body](argument)")
            lower = self.eval(node.brackets[0])
            if not isinstance(lower, Fraction) or lower.denominator != 1:
                raise ParseError("lower bound must be an integer")
            inner = _Evaluator(index_name(self.depth), self.depth + 1)
            body = inner.expr(node.brackets[1])
            s = self.offset(node.parens[0]) if node.parens else 0
            if name == "Prod":
                ratio = body.coefficient_only()
                if ratio is None:
                    raise ParseError("product ratio must be a rational function")
                try:
                    e = hprod(int(lower), ratio)
                except ValueError as exc:
                    raise ParseError(str(exc)) from exc
            else:
                e = SumExpr.from_atom(NSum(int(lower), body))
            return e.shift(s) if s else e
        raise ParseError(f"unknown function {name!r}")

    def harmonic(self, node: Call):
        br = node.brackets or ()
        if br and all(isinstance(b, ListNode) for b in br):
            if len(br) != 2:
                raise ParseError("S[{weights},{letters}] needs two lists")
            weights = [self.integer(w) for w in br[0].items]
            letters = [self.eval(x) for x in br[1].items]
            if not all(_is_number(x) for x in letters):
                raise ParseError("letters must be numbers")
        else:
            weights = [self.integer(w) for w in br]
            letters = None
        if not weights:
            raise ParseError("S needs at least one weight")
        if letters is not None and len(letters) != len(weights):
            raise ParseError("weights and letters have different lengths")
        s = 0
        if node.parens:
            if len(node.parens) != 1:
                raise ParseError("S takes a single argument")
            s = self.offset(node.parens[0])
        e = S(weights, letters)
        if s:
            e = e.shift(s)
        return e

    def integer(self, node) -> int:
        v = self.eval(node)
        if not isinstance(v, Fraction) or v.denominator != 1:
            raise ParseError("weights must be integers")
        return int(v)
