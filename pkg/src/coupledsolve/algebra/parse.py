"""Tokenizer and Pratt parser shared by the rational-function and sum grammars.

The parser only builds a small syntax tree; each grammar supplies its own
evaluator.  Supported syntax: integer literals, identifiers, ``+ - * / ^``,
unary minus, parentheses, calls written ``Name[args]``, ``Name(args)`` or
``Name[args](args)``, and brace lists ``{a, b}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..errors import ParseError
from .poly import Poly, RatFun, to_ratfun
from .quad import sqrt_rational

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class Call:
    name: str
    brackets: tuple | None
    parens: tuple | None


@dataclass(frozen=True)
class ListNode:
    items: tuple


def tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        pos = m.end()
        num, ident, sym = m.groups()
        if num is not None:
            tokens.append(("num", num))
        elif ident is not None:
            tokens.append(("id", ident))
        elif sym is not None and not sym.isspace():
            if sym not in "+-*/^()[]{},":
                raise ParseError(f"unexpected character {sym!r} in {text!r}")
            tokens.append(("op", sym))
    tokens.append(("end", ""))
    return tokens


_BINARY = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, sym: str):
        tok = self.take()
        if tok != ("op", sym):
            raise ParseError(f"expected {sym!r} but found {tok[1]!r} in {self.text!r}")

    def parse(self):
        node = self.expr(0)
        if self.peek()[0] != "end":
            raise ParseError(f"trailing input {self.peek()[1]!r} in {self.text!r}")
        return node

    def expr(self, min_bp: int):
        left = self.prefix()
        while True:
            kind, val = self.peek()
            if kind != "op" or val not in _BINARY:
                return left
            bp = _BINARY[val]
            if bp < min_bp or (bp == min_bp and val != "^"):
                return left
            self.take()
            # ^ is right associative and binds tighter than unary minus on its left
            right = self.expr(bp if val == "^" else bp + 1)
            left = BinOp(val, left, right)

    def prefix(self):
        kind, val = self.take()
        if kind == "num":
            return Num(int(val))
        if kind == "id":
            nxt = self.peek()
            if nxt in (("op", "["), ("op", "(")):
                brackets = parens = None
                if nxt == ("op", "["):
                    self.take()
                    brackets = self.args("]")
                if self.peek() == ("op", "("):
                    self.take()
                    parens = self.args(")")
                return Call(val, brackets, parens)
            return Name(val)
        if (kind, val) == ("op", "-"):
            return Neg(self.expr(30))
        if (kind, val) == ("op", "+"):
            return self.expr(30)
        if (kind, val) == ("op", "("):
            node = self.expr(0)
            self.expect(")")
            return node
        if (kind, val) == ("op", "{"):
            return ListNode(self.args("}"))
        raise ParseError(f"unexpected token {val!r} in {self.text!r}")

    def args(self, close: str) -> tuple:
        items = []
        if self.peek() == ("op", close):
            self.take()
            return ()
        while True:
            items.append(self.expr(0))
            tok = self.take()
            if tok == ("op", close):
                return tuple(items)
            if tok != ("op", ","):
                raise ParseError(f"expected ',' or {close!r} in {self.text!r}")


def parse_tree(text: str):
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression")
    return _Parser(text).parse()


def int_power(value) -> int:
    """Interpret an evaluated exponent as a Python int."""
    if isinstance(value, RatFun):
        if not value.is_constant():
            raise ParseError("exponent must be a constant")
        value = value.constant_value()
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value)
    if isinstance(value, int):
        return value
    raise ParseError(f"exponent {value} is not an integer")


def eval_number(node):
    """Evaluate a constant subtree (rationals and Sqrt[d] surds)."""
    return _RatEval("__none__", ()).eval(node)


class _RatEval:
    def __init__(self, var: str, params: tuple[str, ...]):
        self.var = var
        self.params = params

    def eval(self, node):
        if isinstance(node, Num):
            return Fraction(node.value)
        if isinstance(node, Name):
            if node.name == self.var:
                return RatFun.gen(self.var)
            if node.name in self.params:
                return RatFun.gen(node.name)
            raise ParseError(f"unknown symbol {node.name!r}")
        if isinstance(node, Neg):
            return -self.eval(node.operand)
        if isinstance(node, BinOp):
            a = self.eval(node.left)
            if node.op == "^":
                return a ** int_power(self.eval(node.right))
            b = self.eval(node.right)
            try:
                if node.op == "+":
                    return a + b
                if node.op == "-":
                    return a - b
                if node.op == "*":
                    return a * b
                return a / b
            except ZeroDivisionError as exc:
                raise ParseError(f"division by zero: {exc}") from exc
        if isinstance(node, Call) and node.name == "Sqrt" and node.brackets and len(node.brackets) == 1:
            arg = self.eval(node.brackets[0])
            if isinstance(arg, RatFun):
                if not arg.is_constant():
                    raise ParseError("Sqrt needs a rational constant")
                arg = arg.constant_value()
            if not isinstance(arg, Fraction):
                raise ParseError("Sqrt needs a rational constant")
            return sqrt_rational(arg)
        raise ParseError(f"unsupported construct {node!r} in a rational function")


def parse_ratfun(text: str, var: str = "x", params: tuple[str, ...] = ("eps",)) -> RatFun:
    """Parse a rational function in var, with optional parameter symbols as coefficients."""
    value = _RatEval(var, tuple(p for p in params if p != var)).eval(parse_tree(text))
    return to_ratfun(value, var)


def parse_poly(text: str, var: str = "x") -> Poly:
    r = parse_ratfun(text, var, ())
    if not r.is_poly():
        raise ParseError(f"{text!r} is not a polynomial")
    return r.num
