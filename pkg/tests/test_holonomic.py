import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledsolve.algebra.parse import parse_ratfun
from coupledsolve.errors import NonPolynomialRhs
from coupledsolve.holonomic import ScalarODE, gcdReduce, odeToRec, rec_from_operator
from coupledsolve.ore import SHIFT, LinearForm, OreOp
from coupledsolve.recsolve import epsSolve

from oracles import harmonic


def X(text):
    return parse_ratfun(str(text), "x")


def N(text):
    return parse_ratfun(str(text), "N")


def ode(*coeffs, rhs=None):
    return ScalarODE([X(c) for c in coeffs], rhs or LinearForm({}, "x"))


# -- series helpers, written out independently ---------------------------------------------------


def poly_coeffs(p):
    return [F(c) for c in p.num.coeffs]


def derivative(series, k):
    out = list(series)
    for _ in range(k):
        out = [(n + 1) * out[n + 1] for n in range(len(out) - 1)]
    return out


def apply_ode(e, series, stop):
    """Coefficients of x^0..x^stop of sum_i a_i(x) D^i f for the truncated f."""
    out = [F(0)] * (stop + 1)
    for i, a in enumerate(e.coeffs):
        d = derivative(series, i)
        for j, c in enumerate(poly_coeffs(a)):
            for n in range(stop + 1 - j):
                if n < len(d):
                    out[n + j] += c * d[n]
    return out


def rec_lhs(rec, seq, n):
    return sum((c(n) * seq[n + k] for k, c in enumerate(rec.coeffs) if c), F(0))


# -- examples ------------------------------------------------------------------------------------


def test_ode_to_rec_examples():
    assert [str(c) for c in odeToRec(ode("-1", "1-x")).coeffs] == ["-N-1", "N+1"]
    assert [str(c) for c in odeToRec(ode("-1", "1")).coeffs] == ["-1", "N+1"]
    rec = odeToRec(ode("-1", "x", "x^2", rhs=LinearForm.symbol("b", 0, "x")))
    assert [str(c) for c in rec.coeffs] == ["N^2-1"]
    assert rec.rhs == LinearForm.symbol("b", 0, "N")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_coefficient_comparison_identity(seed):
    rng = random.Random(seed)
    order = rng.randint(1, 3)
    coeffs = ["+".join(f"({rng.randint(-3, 3)})*x^{j}" for j in range(rng.randint(1, 3))) for _ in range(order)]
    coeffs.append(f"1+({rng.randint(-2, 2)})*x")
    e = ode(*coeffs)
    rec = odeToRec(e)
    seq = [F(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(60)]
    lhs = apply_ode(e, seq, 40)
    bound = max(c.num.degree() for c in e.coeffs) + e.order
    assert rec.order <= bound
    for n in range(rec.n_min, 30):
        assert rec_lhs(rec, seq, n) == lhs[n + rec.x_shift]


def test_rhs_bookkeeping():
    rhs = LinearForm.symbol("b", 1, "x", X("x")) + LinearForm.symbol("b", 0, "x", X("2+x^2"))
    e = ode("1", "x", rhs=rhs)
    rec = odeToRec(e)
    b = [F(k * k - 3, k + 1) for k in range(50)]

    def at(i):
        return b[i] if i >= 0 else F(0)

    # coefficient of x^n in x D b + (2 + x^2) b
    want = [n * b[n] + 2 * b[n] + at(n - 2) for n in range(40)]
    got = [sum((c(n) * at(n + k) for (_, k), c in rec.rhs.terms.items()), F(0)) for n in range(30)]
    assert got == [want[n + rec.x_shift] for n in range(30)]


def test_non_polynomial_rhs():
    e = ode("1", "1", rhs=LinearForm.symbol("b", 0, "x", X("1/(1-x)")))
    with pytest.raises(NonPolynomialRhs):
        odeToRec(e)
    rec = odeToRec(e, allow_rational_rhs=True)
    assert rec.rhs_x == LinearForm.symbol("b", 0, "x", X("1/(1-x)"))
    assert not rec.rhs


def test_negative_index_side_constraints():
    # x^3 f + D f: the x^3 term gives s_min = -3, so N = -3..-1 are side relations
    rec = odeToRec(ode("x^3", "1"))
    assert rec.n_min == 0
    assert [n for n, _ in rec.side_constraints] == [-3, -2, -1]


# -- gcdReduce -----------------------------------------------------------------------------------


def test_gcd_reduce_examples():
    red, d = gcdReduce(ode("(1+x)^5", "(1+x)^5*x"))
    assert [str(c) for c in red.coeffs] == ["1", "x"]
    assert d == X("(1+x)^5").num
    original = ode("1-x", "x")
    same, d = gcdReduce(original)
    assert same.coeffs == original.coeffs
    assert d.degree() == 0


def test_gcd_reduce_divides_rhs():
    rhs = LinearForm.symbol("b", 0, "x", X("1-2*x"))
    red, d = gcdReduce(ode("(1-2*x)^2", "(1-2*x)*x", rhs=rhs))
    # d is normalized monic: x - 1/2
    assert d == X("x-1/2").num
    assert [str(c) for c in red.coeffs] == ["4*x-2", "-2*x"]
    assert red.rhs == LinearForm.symbol("b", 0, "x", -2)


def test_gcd_order_drop_with_cubic_factor():
    # ((1-x)^2 D^2 - 3(1-x) D + 1) f = 0 has the solution f = sum S_1(N) x^N
    base = ["1", "-3*(1-x)", "(1-x)^2"]
    inflated = ode(*[f"({c})*(1-2*x)^3" for c in base])
    raw = odeToRec(inflated)
    red, d = gcdReduce(inflated)
    rec = odeToRec(red)
    assert d == X("(x-1/2)^3").num
    assert raw.order - rec.order == 3
    truth = [harmonic([1], n) for n in range(40)]
    for r in (raw, rec):
        for n in range(r.n_min, 30):
            assert rec_lhs(r, truth, n) == 0
        sol = epsSolve(r, None, {n: truth[n] for n in range(12)}, (0, 0))
        assert all(sol.value(0, n) == truth[n] for n in range(30))


def test_rec_from_operator_clears_denominators():
    op = OreOp(SHIFT, "N", [N("-1/(N+1)"), N("1/(N+2)")])
    rec = rec_from_operator(op, LinearForm.symbol("b", 0, "N"), n_min=2)
    assert [str(c) for c in rec.coeffs] == ["-N-2", "N+1"]
    assert rec.rhs == LinearForm.symbol("b", 0, "N", N("(N+1)*(N+2)"))
    assert rec.n_min == 2
    with pytest.raises(ValueError):
        rec_from_operator(OreOp("derivative", "x", [1, 1]), LinearForm({}, "x"))
