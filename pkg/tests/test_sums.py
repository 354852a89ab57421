from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledsolve.algebra import RatFun
from coupledsolve.algebra.parse import parse_ratfun
from coupledsolve.errors import EmptyWindow, EvalPole
from coupledsolve.sums import S, SumExpr, equivalent, eval_at, pow_expr, reduce_products, sum_expr
from coupledsolve.sums.eps import EpsLaurent, SeriesTable
from coupledsolve.sums.expr import factorial_expr
from coupledsolve.sums.grammar import format_expr, parse_expr
from coupledsolve.sums.summation import simplify

N = RatFun.gen("N")


def direct_harmonic(weights, letters, n):
    """Independent oracle: the defining nested sum, unrolled recursively."""
    if not weights:
        return F(1)
    a, x = weights[0], letters[0]
    sign = 1
    if a < 0:
        a, sign = -a, -1
    return sum(F(sign) ** k * F(x) ** k / F(k) ** a * direct_harmonic(weights[1:], letters[1:], k) for k in range(1, n + 1))


def test_eval_examples():
    assert eval_at(S([1]), 3) == F(11, 6)
    assert eval_at(S([2, 1]), 2) == F(11, 8)
    assert eval_at(S([2, 1], [F(1, 2), 1]), 2) == F(19, 32)
    assert eval_at(S([-1]), 2) == F(-1, 2)


def test_quasi_shuffle_examples():
    for n in range(1, 11):
        assert eval_at(reduce_products(S([1]) * S([1])), n) == eval_at(2 * S([1, 1]) - S([2]), n)
    assert reduce_products(S([1]) * S([1])) == 2 * S([1, 1]) - S([2])
    assert reduce_products(S([1]) * 1) == S([1])
    half = F(1, 2)
    want = S([2, 1], [half, 1]) + S([1, 2], [1, half]) - S([3], [half])
    assert reduce_products(S([2], [half]) * S([1])) == want
    assert all(eval_at(S([2], [half]) * S([1]), n) == eval_at(want, n) for n in range(1, 11))


def test_reduce_products_examples():
    assert reduce_products(S([1]) ** 2 - 2 * S([1, 1]) + S([2])) == 0
    assert reduce_products(S([2, 1])) == S([2, 1])
    e = (S([1]) * S([2])).scale(N + 1)
    want = (S([1, 2]) + S([2, 1]) - S([3])).scale(N + 1)
    assert reduce_products(e) == want


def test_synchronize_examples():
    assert S([1]).shift(1).synchronize() == S([1]) + SumExpr({(): 1 / (N + 1)})
    got = S([2, 1]).shift(1).synchronize()
    want = S([2, 1]) + (S([1]) + SumExpr({(): 1 / (N + 1)})).scale(1 / (N + 1) ** 2)
    assert got == want
    assert S([1]).shift(0) == S([1])


def test_shifted_harmonic_matches_oracle():
    e = S([2, -1], [F(1, 3), 1]).shift(-2).synchronize()
    for n in range(2, 12):
        assert eval_at(e, n) == direct_harmonic([2, -1], [F(1, 3), 1], n - 2)


def test_eps_arithmetic_examples():
    a = EpsLaurent(-1, [1, S([1])])
    assert a + EpsLaurent(0, [2]) == EpsLaurent(-1, [1, S([1]) + 2])
    prod = EpsLaurent(-1, [1], exact=True) * EpsLaurent(1, [S([2])])
    assert (prod.lo, prod.top, prod[0]) == (0, 0, S([2]))
    scaled = a.scale(parse_ratfun("1+2*eps", "eps"))
    assert (scaled.lo, scaled.top) == (-1, 0)
    assert scaled[0] == S([1]) + 2
    with pytest.raises(EmptyWindow):
        a.truncate(3)


def test_eps_laurent_of_rational_function():
    r = parse_ratfun("1/(eps*(1-eps))", "eps")
    s = EpsLaurent.from_ratfun(r, 4)
    assert s.lo == -1 and s.coeffs == [1, 1, 1, 1]


def test_series_table_mixes_with_expressions():
    t = SeriesTable.from_expr(S([1]), 0, 5)
    assert (t + S([2]))(3) == eval_at(S([1]) + S([2]), 3)


def test_factorial_and_products():
    f = factorial_expr()
    assert [eval_at(f, n) for n in range(6)] == [1, 1, 2, 6, 24, 120]
    g = parse_expr("Prod[1,2*k](N)")
    assert [eval_at(g, n) for n in range(4)] == [1, 2, 8, 48]


def test_eval_pole_is_reported():
    e = SumExpr({(): 1 / (N - 3)})
    with pytest.raises(EvalPole):
        eval_at(e, 3)


@pytest.mark.parametrize("a", [3, 2, -2, 5])
def test_indefinite_sum_with_root_power(a):
    got = sum_expr(pow_expr(F(1, a)) * S([2, 1])) * pow_expr(a)
    want = pow_expr(a) * S([2, 1], [F(1, a), 1]) * F(a, a - 1) - S([2, 1]) * F(1, a - 1)
    assert equivalent(got, want, 0, 26)


@pytest.mark.parametrize(
    "summand, lower, upper",
    [
        ("S[2,1](N)", 1, 0),
        ("S[2,1](N)", 0, 2),
        ("S[2,1](N)/(N+2)", 1, 0),
        ("3*N^2*S[2,1](N)/(N+2)^2", 3, 1),
        ("S[{1,2},{1/2,-1}](N)*Pow(2/3,N)", 2, -1),
        ("S[1](N)^2", 1, 0),
        ("N*S[1](N-1)", 1, 0),
        ("Pow(-1,N)*S[-2,1](N)/(N+1)^2", 1, 0),
    ],
)
def test_indefinite_sum_matches_direct_summation(summand, lower, upper):
    e = parse_expr(summand)
    r = sum_expr(e, lower, upper)
    assert not any(type(a).__name__ == "NSum" for a in r.atoms())
    start = max(0, lower - upper - 1, 1 if "N-1" in summand else 0)
    for n in range(start, 16):
        assert eval_at(r, n) == sum(eval_at(e, k) for k in range(lower, n + upper + 1))


def test_sum_with_non_integer_pole_stays_unevaluated():
    r = sum_expr(parse_expr("S[2,1](N)/(N+1/2)"))
    assert type(next(iter(r.atoms()))).__name__ == "NSum"
    assert simplify(parse_expr("Sum[1,1/k](N)")) == S([1])


def test_zero_weight_is_rewritten():
    e = S([1, 0])
    for n in range(8):
        assert eval_at(e, n) == sum(F(1, k) * k for k in range(1, n + 1))


@pytest.mark.parametrize(
    "text",
    [
        "S[2,1](N)",
        "S[{2,1},{1/2,1}](N)",
        "(N+1)*S[2,1](N)-1/2*S[2](N)-1/2*S[1](N)^2",
        "Pow((1+Sqrt[5])/2,N)*S[{2,1},{(-1+Sqrt[5])/2,1}](N)",
        "Prod[1,k](N+1)",
        "Sum[1,Sum[1,1/j](k)/(k+1/2)](N)",
        "S[1](N+2)-3/(N+1)^2",
    ],
)
def test_grammar_round_trip(text):
    e = parse_expr(text)
    assert parse_expr(format_expr(e)) == e


# -- properties -----------------------------------------------------------------

letter = st.sampled_from([F(1), F(-1), F(1, 2), F(2), F(-1, 3)])
word = st.lists(st.tuples(st.integers(1, 3), letter), min_size=1, max_size=2)


def expr_of(w):
    return S([a for a, _ in w], [x for _, x in w])


@settings(max_examples=30, deadline=None)
@given(word, word, word)
def test_quasi_shuffle_commutative_and_associative(u, v, w):
    a, b, c = expr_of(u), expr_of(v), expr_of(w)
    ab = reduce_products(a * b)
    assert ab == reduce_products(b * a)
    left = reduce_products(ab * c)
    right = reduce_products(a * reduce_products(b * c))
    assert left == right
    for n in range(1, 9):
        assert eval_at(left, n) == eval_at(a, n) * eval_at(b, n) * eval_at(c, n)


@settings(max_examples=30, deadline=None)
@given(word, st.integers(-3, 3))
def test_shift_round_trip(w, s):
    e = expr_of(w)
    back = e.shift(s).synchronize().shift(-s).synchronize()
    start = abs(s)
    assert all(eval_at(back, n) == eval_at(e, n) for n in range(start, start + 10))


@settings(max_examples=30, deadline=None)
@given(word)
def test_evaluation_matches_definition(w):
    e = expr_of(w)
    for n in range(0, 7):
        assert eval_at(e, n) == direct_harmonic([a for a, _ in w], [x for _, x in w], n)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=3), st.lists(st.integers(-3, 3), min_size=1, max_size=3),
       st.lists(st.integers(-3, 3), min_size=1, max_size=3))
def test_eps_laurent_ring_laws(p, q, r):
    a, b, c = EpsLaurent(-1, p), EpsLaurent(0, q), EpsLaurent(1, r, exact=True)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
