from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledsolve.algebra import Poly, QuadExt, RatFun, factor_over_q, partial_fractions, poly_gcd, quad
from coupledsolve.algebra.factor import factor_roots, integer_roots
from coupledsolve.algebra.linalg import det, inverse, matmul, nullspace, row_reduce
from coupledsolve.algebra.parse import parse_poly, parse_ratfun
from coupledsolve.errors import IrreducibleDegreeTooHigh, MixedFieldError, ParseError

x = Poly.gen("x")
one = Poly.const(1)


def test_gcd_examples():
    assert poly_gcd(x**2 - 1, x - 1) == x - 1
    assert poly_gcd(x + 1, x - 1) == one
    g = poly_gcd((1 + x) ** 5 * (2 - x), (1 + x) ** 5 * (3 + x**2))
    assert g == (1 + x) ** 5
    assert not poly_gcd(Poly(()), Poly(()))


def test_factor_golden_denominator():
    fz = factor_over_q(1 - x - x**2)
    assert fz.constant == -1
    assert fz.factors == ((x**2 + x - 1, 1),)
    roots = factor_roots(x**2 + x - 1)
    assert set(roots) == {quad(F(-1, 2), F(1, 2), 5), quad(F(-1, 2), F(-1, 2), 5)}
    for r in roots:
        assert r * r + r - 1 == 0


def test_factor_monomial_and_linear():
    fz = factor_over_q(x**2 * (1 - x))
    assert (fz.nu0, fz.constant, fz.factors) == (2, -1, ((x - 1, 1),))
    fz = factor_over_q((1 - 2 * x) * (1 - x) ** 2)
    assert dict((f, m) for f, m in fz.factors) == {x - F(1, 2): 1, x - 1: 2}
    assert fz.expand() == (1 - 2 * x) * (1 - x) ** 2


def test_roots_of_cubic_factor_are_refused():
    fz = factor_over_q(x**3 - 2)
    assert fz.factors[0][0].degree() == 3
    with pytest.raises(IrreducibleDegreeTooHigh):
        fz.roots()
    with pytest.raises(IrreducibleDegreeTooHigh):
        partial_fractions(RatFun(one, x**3 - 2))


def test_partial_fraction_examples():
    pf = partial_fractions(RatFun(one, (1 - x) * (1 - 2 * x)))
    # -1/(1-x) = 1/(x-1) and 2/(1-2x) = -1/(x-1/2)
    assert {(t.root, t.power): t.coeff for t in pf.terms} == {(1, 1): 1, (F(1, 2), 1): -1}
    pf = partial_fractions(RatFun(one, (1 - x) ** 2))
    assert len(pf.terms) == 1 and pf.terms[0].power == 2
    q = RatFun(one, 1 - x - x**2)
    pf = partial_fractions(q)
    assert all(isinstance(t.coeff, QuadExt) for t in pf.terms)
    assert pf.recombine() == q


def test_integer_roots():
    assert integer_roots((x - 3) * (x + 2) * (2 * x - 1) * x) == [-2, 0, 3]


def test_ratfun_canonical_form():
    r = RatFun(2 * x**2 - 2, 4 * x - 4)
    assert r.den == one and r.num == (x + 1) / 2
    s = RatFun(x, 3 * x + 3)
    assert s.den.lc() == 1
    assert s.shift(1) == RatFun(x + 1, 3 * x + 6)
    assert (s * s.inverse()) == 1


def test_eps_coefficients_nest_inside_x():
    eps = RatFun.gen("eps")
    r = eps / (1 - x)
    assert r.var == "x"
    assert r.num.coeffs[0] == -eps
    with pytest.raises(TypeError):
        RatFun.gen("x") + RatFun.gen("N")


def test_quadext_arithmetic():
    s5 = QuadExt(0, 1, 5)
    assert s5 * s5 == 5
    phi = (1 + s5) / 2
    assert phi * phi - phi - 1 == 0
    assert (phi**-3) * phi**3 == 1
    with pytest.raises(MixedFieldError):
        s5 + QuadExt(0, 1, 2)
    assert quad(1, 2, 9) == 7


def test_linalg_basics():
    a = [[F(1), F(2)], [F(3), F(4)]]
    assert matmul(a, inverse(a)) == [[1, 0], [0, 1]]
    assert det(a) == -2
    assert nullspace([[F(1), F(1)], [F(1), F(1)]]) == [[-1, 1]]
    red, piv, q = row_reduce([[F(0), F(1)], [F(2), F(0)]], transform=True)
    assert matmul(q, [[0, 1], [2, 0]]) == red


def test_parse_print_round_trip_examples():
    for text in ["1/(1-x-x^2)", "(1+eps)/(1-x)", "-x^2+3/2*x", "x^-2", "((1+Sqrt[5])/2)*x"]:
        r = parse_ratfun(text)
        assert parse_ratfun(str(r)) == r
    assert parse_poly("(x+1)^2") == x**2 + 2 * x + 1
    with pytest.raises(ParseError):
        parse_ratfun("x+")
    with pytest.raises(ParseError):
        parse_ratfun("y+1")


small = st.integers(-9, 9)
polys = st.lists(small, min_size=1, max_size=9).map(lambda cs: Poly(cs))


@settings(max_examples=80, deadline=None)
@given(polys, polys)
def test_gcd_divides_and_cofactors_coprime(a, b):
    g = poly_gcd(a, b)
    if not g:
        assert not a and not b
        return
    assert not (a % g) and not (b % g)
    assert poly_gcd(a // g, b // g).degree() == 0


linear_or_quadratic = st.one_of(
    st.tuples(small.filter(bool), small).map(lambda t: Poly((t[1], t[0]))),
    st.tuples(st.integers(1, 5), small, small).map(lambda t: Poly((t[2], t[1], t[0]))),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(linear_or_quadratic, min_size=1, max_size=4), st.integers(-5, 5).filter(bool))
def test_factorization_recombines(factors, c):
    p = Poly.const(c)
    for f in factors:
        p = p * f
    assert factor_over_q(p).expand() == p


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=3), st.lists(small, min_size=1, max_size=5))
def test_partial_fractions_recombine(roots, num):
    den = one
    for r in roots:
        den = den * (1 - r * x)
    q = RatFun(Poly(num), den)
    assert partial_fractions(q).recombine() == q


fracs = st.fractions(max_denominator=50).filter(lambda f: abs(f) < 100)


@given(fracs, fracs, fracs, fracs, st.sampled_from([2, 3, 5, -1, 7]))
def test_quadext_exactness(a1, b1, a2, b2, d):
    u, v = quad(a1, b1, d), quad(a2, b2, d)
    assert (u + v) - v == u
    if v != 0:
        assert (u * v) / v == u
