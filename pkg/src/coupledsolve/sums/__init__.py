"""Nested sums over hypergeometric products and their epsilon expansions."""

from .expr import HProd, Harm, NSum, Pow, SumExpr, equivalent, eval_at, harm_expr, pow_expr
from .harmonic import S, quasi_shuffle, reduce_products
from .summation import simplify, sum_expr

__all__ = [
    "HProd",
    "Harm",
    "NSum",
    "Pow",
    "S",
    "SumExpr",
    "equivalent",
    "eval_at",
    "harm_expr",
    "pow_expr",
    "quasi_shuffle",
    "reduce_products",
    "simplify",
    "sum_expr",
]
