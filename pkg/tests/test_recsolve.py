from fractions import Fraction as F
from math import factorial

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledsolve.algebra import quad
from coupledsolve.algebra.parse import parse_ratfun
from coupledsolve.algebra.poly import Poly, RatFun
from coupledsolve.errors import InsufficientInitialValues, OutsideClass
from coupledsolve.recsolve import (
    apply_op,
    dalembertSolve,
    epsSolve,
    eps_residual,
    hyperSolutions,
    polySolutions,
    residual_values,
)
from coupledsolve.sums import S, SumExpr, eval_at, reduce_products
from coupledsolve.sums.eps import EpsLaurent
from coupledsolve.sums.grammar import parse_expr

from oracles import harmonic


def N(text):
    return parse_ratfun(str(text), "N")


def rec(*coeffs):
    return [N(c) for c in coeffs]


def passes_25(coeffs, y, rhs=None, start=0):
    return not any(residual_values(coeffs, y, rhs, start, 25))


# -- polySolutions --------------------------------------------------------------------------------


@pytest.mark.parametrize("coeffs,want", [
    (("-1", "1"), ["1"]),
    (("-(N+2)", "N+1"), ["N+1"]),
    (("1", "-2", "1"), ["1", "N"]),
    (("1", "-3", "3", "-1"), ["1", "N", "N^2"]),
    (("-2", "1"), []),
    (("-N-1", "N"), ["N"]),
    (("-1", "N+1"), []),
])
def test_poly_solutions_dimension(coeffs, want):
    basis = polySolutions(rec(*coeffs))
    assert len(basis) == len(want)
    for p in basis:
        assert passes_25(rec(*coeffs), SumExpr({(): RatFun(Poly(p.coeffs, "N"))}))
    # the span is the expected one: each wanted polynomial is a combination
    if want:
        span = sympy.Matrix([[sympy.Rational(str(c)) for c in p.coeffs] + [0] * (4 - len(p.coeffs)) for p in basis])
        for w in want:
            wp = N(w).num
            row = sympy.Matrix([[sympy.Rational(str(c)) for c in wp.coeffs] + [0] * (4 - len(wp.coeffs))])
            assert span.rank() == span.col_join(row).rank()


# -- hyperSolutions --------------------------------------------------------------------------------


def ratios(coeffs, quadratic=False):
    return {str(h.ratio) for h in hyperSolutions(coeffs, quadratic)}


def test_hyper_characteristic_roots():
    assert ratios(rec("2", "-3", "1")) == {"1", "2"}


def test_hyper_factorial():
    hs = hyperSolutions(rec("-(N+1)", "1"))
    assert [str(h.ratio) for h in hs] == ["N+1"]
    y, start = hs[0].closed_form()
    assert start == 0
    assert [eval_at(y, n) / eval_at(y, 0) for n in range(10)] == [factorial(n) for n in range(10)]


def test_hyper_harmonic_operator_contains_one():
    assert "1" in ratios(rec("N+1", "-(2*N+3)", "N+2"))


def test_hyper_fibonacci_needs_quadratic():
    coeffs = rec("-1", "-1", "1")
    assert ratios(coeffs) == set()
    got = {h.ratio.constant_value() for h in hyperSolutions(coeffs, quadratic=True)}
    r5 = quad(0, 1, 5)
    assert got == {(1 + r5) / 2, (1 - r5) / 2}


@settings(max_examples=15, deadline=None)
@given(st.integers(-3, 3).filter(bool), st.integers(-3, 3).filter(bool), st.integers(0, 2))
def test_hyper_solutions_pass_substitution(a, b, k):
    # (S - a)(S - b (N+k+1)): the right factor gives a solution with ratio b(N+k+1)
    inner = N(f"-{b}*(N+{k}+1)")
    coeffs = [-N(a) * inner, inner.shift(1) - N(a), N(1)]
    hs = hyperSolutions(coeffs)
    assert any(str(h.ratio) == str(N(f"{b}*(N+{k}+1)")) for h in hs)
    for h in hs:
        y, start = h.closed_form()
        assert passes_25(coeffs, y, start=start)


# -- dalembertSolve --------------------------------------------------------------------------------


def test_dalembert_telescoping():
    res = dalembertSolve(rec("-1", "1"), parse_expr("1/(N+1)"))
    assert res.complete
    y = res.particular
    assert all(eval_at(y, n) - eval_at(y, 0) == harmonic([1], n) for n in range(26))


def test_dalembert_recovers_s1_from_order_two():
    coeffs = rec("N+1", "-(2*N+3)", "N+2")
    res = dalembertSolve(coeffs)
    assert res.complete and len(res.basis) == 2
    for b in res.basis:
        assert passes_25(coeffs, b)
    # S_1 lies in the span of the basis
    m = sympy.Matrix([[eval_at(b, n) for b in res.basis] for n in range(5)])
    want = sympy.Matrix([harmonic([1], n) for n in range(5)])
    sol = m.solve_least_squares(want)
    assert all(sum(F(str(sol[i])) * eval_at(b, n) for i, b in enumerate(res.basis)) == harmonic([1], n)
               for n in range(26))


def test_dalembert_nested_particular():
    coeffs = rec("-1", "1")
    res = dalembertSolve(coeffs, parse_expr("S[1](N)/(N+1)^2"))
    y = res.particular
    assert passes_25(coeffs, y, parse_expr("S[1](N)/(N+1)^2"))
    # with y(0) fixed to 0 this is S_{2,1}(N) - S_3(N)
    d = [eval_at(y, n) - eval_at(y, 0) for n in range(26)]
    assert d == [harmonic([2, 1], n) - harmonic([3], n) for n in range(26)]


def test_dalembert_fibonacci_unsolved():
    res = dalembertSolve(rec("-1", "-1", "1"))
    assert res.unsolved_order == 2 and not res.basis
    res = dalembertSolve(rec("-1", "-1", "1"), quadratic=True)
    assert res.complete and len(res.basis) == 2
    for b in res.basis:
        assert passes_25(rec("-1", "-1", "1"), b)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(-2, 2), st.sampled_from(["1/(N+1)", "S[1](N)", "Pow(2,N)", "N"]))
def test_first_order_variation_of_constants(a, c, f_text):
    # y(N+1) = a(N) y(N) + f(N) with a(N) = (N + a)/(N + 1)... iterated directly
    ratio = N(f"(N+{a})/(N+1)")
    coeffs = [-ratio, N(1)]
    f = parse_expr(f_text)
    res = dalembertSolve(coeffs, f)
    y = reduce_products(res.particular + res.basis[0].scale(N(c)))
    seq = [eval_at(y, res.valid_from)]
    for n in range(res.valid_from, res.valid_from + 25):
        seq.append(ratio(n) * seq[-1] + eval_at(f, n))
    assert [eval_at(y, n) for n in range(res.valid_from, res.valid_from + 26)] == seq


def test_apply_op_on_expression():
    out = reduce_products(apply_op(rec("-1", "1"), S([1])))
    assert all(eval_at(out, n) == F(1, n + 1) for n in range(20))


# -- epsSolve ---------------------------------------------------------------------------------------


E = parse_ratfun("eps", "eps")


def test_eps_telescoping():
    coeffs = rec("-1", "1")
    rhs = EpsLaurent(0, [SumExpr(), parse_expr("1/(N+1)")])
    sol = epsSolve(coeffs, rhs, {0: EpsLaurent(0, [0, 0])}, (0, 1))
    assert sol.order(0) == SumExpr()
    assert sol.order(1) == S([1])


def product_oracle(top, stop):
    """eps coefficients of prod_{k=1}^{n} 1/(1 + eps/k), by truncated series products."""
    out, cur = [], [F(1)] + [F(0)] * top
    for n in range(stop):
        out.append(list(cur))
        k = n + 1
        factor = [F(-1, k) ** i for i in range(top + 1)]
        cur = [sum((cur[i] * factor[j - i] for i in range(j + 1)), F(0)) for j in range(top + 1)]
    return out


def test_eps_product_window_two():
    coeffs = [N("-(N+1)"), parse_ratfun("N+1+eps", "N")]
    sol = epsSolve(coeffs, None, {0: EpsLaurent(0, [1, 0, 0])}, (0, 2))
    assert sol.order(0) == reduce_products(SumExpr.lift(1))
    assert sol.order(1) == -S([1])
    assert reduce_products(sol.order(2)) == reduce_products(S([1]) * S([1]) * F(1, 2) + S([2]) * F(1, 2))
    truth = product_oracle(2, 25)
    assert all(sol.value(j, n) == truth[n][j] for n in range(25) for j in range(3))
    assert not any(v for row in eps_residual(coeffs, sol, None, 0, 25) for v in row)


def test_eps_insufficient_initial_values():
    coeffs = rec("N+1", "-(2*N+3)", "N+2")
    with pytest.raises(InsufficientInitialValues) as info:
        epsSolve(coeffs, None, {0: 0}, (0, 0))
    assert 1 in info.value.indices


def test_eps_supplied_values_take_precedence():
    coeffs = rec("N+1", "-(2*N+3)", "N+2")
    sol = epsSolve(coeffs, None, {0: 0, 1: 1, 2: F(3, 2)}, (0, 0))
    assert sol.order(0) == S([1])
    with pytest.raises(ValueError):
        epsSolve(coeffs, None, {0: 0, 1: 1, 2: 7}, (0, 0))


def test_eps_low_window_start():
    # eps^3 I(N+1) - eps^3 I(N) = rhs with rhs starting at eps^0: solution window starts at eps^-3
    coeffs = [-E ** 3 * N(1), E ** 3 * N(1)]
    rhs = EpsLaurent(0, [parse_expr("1/(N+1)")])
    sol = epsSolve(coeffs, rhs, {0: EpsLaurent(-3, [0])}, (-3, -3))
    assert sol.lo == -3
    assert sol.order(-3) == S([1])


def test_eps_outside_class():
    with pytest.raises(OutsideClass):
        epsSolve(rec("-1", "-1", "1"), None, {0: 0, 1: 1}, (0, 0))
