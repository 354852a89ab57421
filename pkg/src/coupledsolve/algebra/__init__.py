"""Exact arithmetic substrate: numbers, polynomials, rational functions."""

from .factor import Factorization, factor_over_q, factor_roots, integer_roots, partial_fractions
from .poly import Poly, RatFun, interpolate, poly_gcd, poly_lcm
from .quad import QuadExt, quad, sqrt_rational

__all__ = [
    "Factorization",
    "Poly",
    "QuadExt",
    "RatFun",
    "factor_over_q",
    "factor_roots",
    "integer_roots",
    "interpolate",
    "partial_fractions",
    "poly_gcd",
    "poly_lcm",
    "quad",
    "sqrt_rational",
]
