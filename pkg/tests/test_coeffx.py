from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledsolve.algebra.parse import parse_ratfun
from coupledsolve.algebra.poly import Poly
from coupledsolve.coeffx import (
    HatExpr,
    cancelBadClusters,
    cauchyCoeff,
    clusterBadDenominators,
    expandRational,
    parse_hat,
)
from coupledsolve.errors import ParseError
from coupledsolve.sums import S, SumExpr, eval_at, pow_expr, reduce_products
from coupledsolve.sums.grammar import parse_expr

from oracles import cauchy, harmonic, rational_series


def X(text):
    return parse_ratfun(text, "x")


SERIES = {
    "S[1](N)": lambda n: harmonic([1], n),
    "S[2](N)": lambda n: harmonic([2], n),
    "S[2,1](N)": lambda n: harmonic([2, 1], n),
    "1/(N+1)": lambda n: F(1, n + 1),
    "1": lambda n: F(1),
}


def oracle(q_text, g_text, stop=25):
    g = SERIES[g_text]
    return cauchy(rational_series(q_text, stop), [g(n) for n in range(stop + 1)])


# -- expandRational ---------------------------------------------------------------------------


@pytest.mark.parametrize("text", [
    "1/(1-x)", "1/(1-x)^3", "x^2/(1+2*x)", "(1+x^4)/((1-x)*(1-2*x))", "1/(1-x-x^2)",
    "(3-x)/((1+x)^2*(1-3*x))", "x^5+x+1", "1/(2-x)",
])
def test_expand_rational_recombination(text):
    exp = expandRational(X(text))
    want = rational_series(text, 30)
    got = [exp.coefficient(n) for n in range(31)]
    assert got == want


def test_expand_rational_poles_at_zero():
    exp = expandRational(X("1/(x^2*(1-x))"))
    assert exp.mu == -2
    assert [exp.coefficient(n) for n in range(-2, 5)] == [1] * 7


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=4), st.sampled_from([-2, -1, 1, 2, 3]),
       st.integers(1, 3), st.sampled_from([-1, 1, 2]))
def test_expand_rational_random(num, a, k, b):
    num_text = "+".join(f"({c})*x^{i}" for i, c in enumerate(num))
    text = f"({num_text})/((1-({a})*x)^{k}*(1-({b})*x))"
    if not X(text):
        return
    exp = expandRational(X(text))
    assert [exp.coefficient(n) for n in range(31)] == rational_series(text, 30)


# -- cauchyCoeff -------------------------------------------------------------------------------


def coefficient(text):
    res = cauchyCoeff(parse_hat(text))
    return reduce_products(res.expr), res.valid_from


@pytest.mark.parametrize("q_text,g_text", [
    ("1/(1-x)", "S[1](N)"),
    ("1/(1+x)", "S[2,1](N)"),
    ("x/(1-x)^2", "S[2](N)"),
    ("(1+x^2)/(1-2*x)", "1/(N+1)"),
    ("1/(1-3*x)", "S[1](N)"),
    ("x^3+2*x", "S[2](N)"),
    ("1/(1-x-x^2)", "1"),
])
def test_cauchy_coeff_matches_series(q_text, g_text):
    h, start = coefficient(f"({q_text})*GF[{g_text}]")
    want = oracle(q_text, g_text)
    assert start <= 4
    assert all(eval_at(h, n) == want[n] for n in range(start, 26))


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([0, -1, 1, 2, -2, 3]), st.integers(1, 2), st.sampled_from(sorted(SERIES)),
       st.integers(0, 2))
def test_cauchy_coeff_random(a, k, g_text, shift):
    q_text = f"x^{shift}/(1-({a})*x)^{k}"
    h, start = coefficient(f"({q_text})*GF[{g_text}]")
    want = oracle(q_text, g_text)
    assert all(eval_at(h, n) == want[n] for n in range(start, 26))


def test_geometric_identity_case():
    h, start = coefficient("GF[S[2,1](N)]")
    assert h == S([2, 1]) and start == 0


def test_family_minus_one():
    # 1/(1+x) * GF[S_{2,1}]: a = -1 in a^(N+1)/(a-1) S_{2,1}(1/a,1;N) - S_{2,1}(N)/(a-1)
    h, _ = coefficient("1/(1+x) * GF[S[2,1]]")
    a = F(-1)
    want = reduce_products(pow_expr(a).scale(parse_ratfun(str(a / (a - 1)), "N")) * S([2, 1], [1 / a, 1])
                           - S([2, 1]) * (1 / (a - 1)))
    assert all(eval_at(h, n) == eval_at(want, n) for n in range(26))


# -- clustering --------------------------------------------------------------------------------


def hat(*pairs):
    return HatExpr([(X(q), None if g is None else parse_expr(g)) for q, g in pairs])


def test_cluster_nice_only():
    c = clusterBadDenominators(hat(("1/(1-x)^2", "S[1]"), ("1/((1-x)*(1+x))", "S[2]")))
    assert len(c.nice) == 2 and not c.bad


def test_cluster_shared_bad_factor():
    c = clusterBadDenominators(hat(("1/((1-3*x)*(1-x))", "S[1]"), ("1/(1-3*x)^2", "S[2]")))
    assert not c.nice
    assert len(c.bad) == 1
    factors, members = c.bad[0]
    assert [str(f) for f in factors] == ["x-1/3"]
    assert len(members) == 2


def test_cluster_disjoint_bad_factors():
    c = clusterBadDenominators(hat(("1/(1-x-x^2)", "S[1]"), ("1/(1-5*x)", "S[1]"), ("1/(1-x)", "S[2]")))
    assert len(c.nice) == 1
    assert sorted(str(f[0][0]) for f in c.bad) == ["x-1/5", "x^2+x-1"]


def test_cluster_whitelist_is_configurable():
    h = hat(("1/(1-3*x)", "S[1]"))
    assert not clusterBadDenominators(h, ("1-x", "1-3*x")).bad


def test_cancel_exact_cancellation():
    h = HatExpr([(X("1/(1-3*x)"), S([1])), (X("-1/(1-3*x)"), S([1]))])
    assert not h


# (1-x) GF[S_1] = x GF[1/(N+1)], so this pair is zero but looks like two bad summands
HIDDEN_ZERO = (("(1-x)/(1-3*x)", "S[1]"), ("-x/(1-3*x)", "1/(N+1)"))


def test_cancel_hidden_zero_cluster():
    h = hat(*HIDDEN_ZERO)
    assert len(h) == 2
    assert h.series(40) == [0] * 41
    res = cancelBadClusters(clusterBadDenominators(h))
    assert not res.bad_sums_survive
    assert not res.expr


def test_cancel_reconstructs_nice_part():
    h = hat(*HIDDEN_ZERO, ("1/(1-x)", "S[2]"), ("x/((1-3*x)*(1-x))", "S[2]"), ("-x/(1-3*x)", "S[2]"),
            ("-x^2/((1-3*x)*(1-x))", "S[2]"))
    clusters = clusterBadDenominators(h)
    assert len(clusters.bad) == 1 and len(clusters.bad[0][1]) >= 3
    res = cancelBadClusters(clusters)
    assert not res.bad_sums_survive
    assert res.expr.series(60) == h.series(60)
    for q, _ in res.expr.summands:
        assert all(str(f) in ("x-1", "x+1", "x") for f in _den_factors(q))
    got = cauchyCoeff(res.expr)
    partial = [sum((harmonic([2], k) for k in range(n + 1)), F(0)) for n in range(26)]
    assert all(eval_at(got.expr, n) == partial[n] for n in range(got.valid_from, 26))


def _den_factors(q):
    from coupledsolve.algebra import factor_over_q

    if q.den.degree() <= 0:
        return []
    fz = factor_over_q(q.den)
    return [f for f, _ in fz.factors] + ([Poly.gen("x")] if fz.nu0 else [])


def test_cancel_genuine_bad_sum_survives():
    h = hat(("1/(1-5*x)", "S[1]"))
    res = cancelBadClusters(clusterBadDenominators(h))
    assert res.bad_sums_survive
    assert res.expr.series(40) == h.series(40)
    assert [o.describe()["outcome"] for o in res.outcomes] == ["BadSumsSurvive"]


@settings(max_examples=10, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3), st.sampled_from(["1-3*x", "1-5*x", "1-x-x^2"]))
def test_cancel_is_conservative(c0, c1, bad):
    h = hat((f"({c0}+{c1}*x)/(({bad})*(1-x))", "S[1]"), (f"1/({bad})", "S[2]"), ("1/(1+x)", "S[1]"))
    res = cancelBadClusters(clusterBadDenominators(h), truncation=30)
    assert res.expr.series(30) == h.series(30)


# -- grammar -----------------------------------------------------------------------------------


def test_parse_hat_examples():
    h = parse_hat("1/(1-x-x^2) * GF[S[2,1]] + x * GF[S[1]]")
    assert len(h) == 2
    assert parse_hat("GF[1/(N+1)] - GF[1/(N+1)]").summands == []
    assert parse_hat("x^2/(1-x)").summands[0][1] is None
    h = parse_hat("GF[S[1]]/(1+2*x)")
    assert h.summands[0][0] == X("1/(1+2*x)")


@pytest.mark.parametrize("bad", ["GF[S[1]] * GF[S[2]]", "1/GF[S[1]]", "GF[S[1]", "y * GF[S[1]]", "GF[S[1]]^2"])
def test_parse_hat_errors(bad):
    with pytest.raises(ParseError):
        parse_hat(bad)


def test_hat_merges_on_series_and_denominator():
    h = HatExpr([(X("1/(1-x)"), S([1])), (X("x/(1-x)"), S([1])), (X("1/(1+x)"), S([1]))])
    assert len(h) == 2
    assert isinstance(h.summands[0][1], SumExpr)
