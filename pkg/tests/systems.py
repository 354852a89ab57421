"""Constructed differential systems with known series solutions.

A base system D F = B F has the solution vector F made of generating
functions of known sequences.  A polynomial gauge matrix T turns it into
D I = (T B T^-1 + T' T^-1) I with solution I = T F, so the coefficients of
every unknown follow from F by convolution.  The F sequences are evaluated
straight from their defining sums, independently of the package.
"""

from fractions import Fraction as F

from coupledsolve.algebra.linalg import inverse, matmul
from coupledsolve.algebra.parse import parse_ratfun
from coupledsolve.algebra.poly import RatFun
from coupledsolve.ore import DERIVATIVE, CoupledSystem, zero_form
from coupledsolve.pipeline import ProblemSpec

# sequence, and the row of B: {other base name: coefficient}
BASE = {
    "F1": {"F1": "1/(1-x)"},
    "F2": {"F1": "1/(1-x)", "F2": "1/(1-x)"},
    "F3": {"F2": "1/x", "F3": "1/(1-x)"},
    "F4": {"F2": "1/(x*(1-x))", "F4": "1/(1-x)"},
}


def harmonic(n: int, weight: int) -> F:
    return sum((F(1, k ** weight) for k in range(1, n + 1)), F(0))


def s11(n: int) -> F:
    return sum((F(1, i) * harmonic(i, 1) for i in range(1, n + 1)), F(0))


SEQUENCES = {
    "F1": lambda n: F(1),
    "F2": lambda n: harmonic(n, 1),
    "F3": lambda n: harmonic(n, 2),
    "F4": s11,
}


def _ratfun(text) -> RatFun:
    return parse_ratfun(str(text), "x")


def build(gauge, base, names=None, initial_points=4):
    """The transformed system for gauge T (rows of strings) over the base names.

    Returns (ProblemSpec, truth) where truth maps each unknown to a function
    n -> exact coefficient of x^n.
    """
    for f in base:
        if not set(BASE[f]) <= set(base):
            raise ValueError(f"{f} needs {sorted(set(BASE[f]) - set(base))} in the base")
    r = len(base)
    names = names or [f"I{i + 1}" for i in range(r)]
    b = [[_ratfun(BASE[f].get(g, 0)) for g in base] for f in base]
    t = [[_ratfun(c) for c in row] for row in gauge]
    for row in t:
        for c in row:
            if not c.is_poly():
                raise ValueError("the gauge must be polynomial for I = T F to be a power series")
    t_inv = inverse(t)
    dt = [[c.derivative() for c in row] for row in t]
    a = matmul(matmul(t, b), t_inv)
    g = matmul(dt, t_inv)
    m = [[a[i][j] + g[i][j] for j in range(r)] for i in range(r)]

    def coefficient(i):
        def value(n):
            total = F(0)
            for j, f in enumerate(base):
                for k, c in enumerate(t[i][j].num.coeffs):
                    if c and k <= n:
                        total += F(c) * SEQUENCES[f](n - k)
            return total

        return value

    truth = {names[i]: coefficient(i) for i in range(r)}
    system = CoupledSystem.first_order(DERIVATIVE, m, [zero_form("x") for _ in range(r)], names)
    initial = {nm: {n: truth[nm](n) for n in range(initial_points)} for nm in names}
    return ProblemSpec(system, {}, initial, (0, 0)), truth


# dimensions 2 to 4, some gauges mixing unknowns with x-dependent entries
CASES = {
    "s1-shear": (["F1", "F2"], [["1", "0"], ["1", "1"]]),
    "s2-x-gauge": (["F1", "F2", "F3"], [["1", "0", "0"], ["x", "1", "0"], ["0", "1", "1"]]),
    "s11-mix": (["F1", "F2", "F4"], [["1", "1", "0"], ["0", "1", "0"], ["0", "x", "1"]]),
    "full-4": (
        ["F1", "F2", "F3", "F4"],
        [["1", "0", "0", "0"], ["0", "1", "1", "0"], ["0", "0", "1", "0"], ["1", "0", "0", "1"]],
    ),
    "x-poly-2": (["F1", "F2"], [["1+x", "0"], ["x", "1"]]),
    "polylog-3": (["F1", "F2", "F3"], [["1", "0", "0"], ["0", "1", "0"], ["1", "0", "1"]]),
}
