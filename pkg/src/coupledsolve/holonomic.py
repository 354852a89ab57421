"""From scalar ODEs with polynomial coefficients to recurrences for the
power-series coefficients, plus the gcd order reduction."""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra.poly import Poly, RatFun, falling_factorial, poly_gcd, poly_lcm, to_ratfun
from .errors import InvariantViolation, NonPolynomialRhs
from .ore import DERIVATIVE, SHIFT, LinearForm, OreOp, zero_form

XVAR = "x"
NVAR = "N"


@dataclass
class ScalarODE:
    """sum_i coeffs[i](x) D^i f = rhs, rhs a derivative-kind LinearForm in x."""

    coeffs: list
    rhs: LinearForm = field(default_factory=lambda: zero_form(XVAR))
    name: str = "f"

    def __post_init__(self):
        self.coeffs = [to_ratfun(c, XVAR) for c in self.coeffs]
        while len(self.coeffs) > 1 and not self.coeffs[-1]:
            self.coeffs.pop()

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_equation(cls, op: OreOp, rhs: LinearForm, name: str = "f") -> "ScalarODE":
        """Clear denominators of an operator equation op(f) = rhs."""
        den = Poly.const(1, XVAR)
        for c in op.coeffs:
            den = poly_lcm(den, c.den)
        d = RatFun(den, reduced=True)
        return cls([c * d for c in op.coeffs], rhs.scale(d), name)

    def poly_coeffs(self) -> list:
        for c in self.coeffs:
            if not c.is_poly():
                raise ValueError("clear denominators before converting")
        return [c.num for c in self.coeffs]


@dataclass
class ScalarRec:
    """sum_k coeffs[k](N) f(N+k) = rhs(N), valid for N >= n_min.

    rhs is a shift-kind LinearForm in N over named sequences.  rhs_x holds
    parts whose coefficient extraction is delegated: the contribution at N is
    the coefficient of x^(N + x_shift) of rhs_x.  side_constraints lists
    relations at negative N (indices below zero vanish).
    """

    coeffs: list
    rhs: LinearForm = field(default_factory=lambda: zero_form(NVAR))
    rhs_x: LinearForm = field(default_factory=lambda: zero_form(XVAR))
    x_shift: int = 0
    n_min: int = 0
    side_constraints: list = field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def op(self) -> OreOp:
        return OreOp(SHIFT, NVAR, self.coeffs)

    def bitsize(self) -> int:
        return sum(c.bitsize() for c in self.coeffs)


def gcdReduce(ode: ScalarODE) -> tuple[ScalarODE, Poly]:
    """Divide the operator by d(x) = gcd of its coefficients.

    Returns the reduced ODE and d.  The rhs coefficients are divided as well
    and may become genuinely rational.
    """
    polys = ode.poly_coeffs()
    d = Poly((), XVAR)
    for p in polys:
        d = poly_gcd(d, p)
    if d.degree() <= 0:
        return ode, Poly.const(1, XVAR)
    dr = RatFun(d, reduced=True)
    coeffs = [RatFun(p.exact_div(d)) for p in polys]
    return ScalarODE(coeffs, ode.rhs.scale(dr.inverse()), ode.name), d


def odeToRec(ode: ScalarODE, allow_rational_rhs: bool = False) -> ScalarRec:
    """Coefficient comparison for f = sum_n c(n) x^n.

    x^a D^i contributes (n+k)^(falling i) c(n+k) with k = i - a - s_min at
    the recurrence index n = M + s_min, where M is the power of x compared.
    """
    polys = ode.poly_coeffs()
    terms = []
    for i, p in enumerate(polys):
        for a, c in enumerate(p.coeffs):
            if c:
                terms.append((i, a, c))
    if not terms:
        raise ValueError("zero operator")
    s_min = min(i - a for i, a, _ in terms)
    s_max = max(i - a for i, a, _ in terms)
    order = s_max - s_min
    n_poly = Poly.gen(NVAR)
    coeffs = [Poly((), NVAR) for _ in range(order + 1)]
    for i, a, c in terms:
        k = i - a - s_min
        coeffs[k] = coeffs[k] + falling_factorial(n_poly + k, i) * c
    bound = max(p.degree() for p in polys) + len(polys) - 1
    if order > bound:
        raise InvariantViolation(f"recurrence order {order} exceeds the bound {bound}")
    # rhs: coefficient of x^M, M = N - s_min
    rhs = zero_form(NVAR)
    rhs_x = zero_form(XVAR)
    for (name, k), d in ode.rhs.terms.items():
        if not d.is_poly():
            if not allow_rational_rhs:
                raise NonPolynomialRhs(f"coefficient {d} of D^{k} {name} is not a polynomial")
            rhs_x = rhs_x + LinearForm.symbol(name, k, XVAR, d)
            continue
        for a, c in enumerate(d.num.coeffs):
            if not c:
                continue
            # x^a D^k b = sum_n (n+k)^(k) b(n+k) x^(n+a); at x^M: n = M - a
            shift = k - a - s_min
            factor = falling_factorial(n_poly + shift, k) * c
            rhs = rhs + LinearForm.symbol(name, shift, NVAR, RatFun(factor))
    side = []
    for n in range(s_min, 0):
        side.append((n, [c(n) for c in coeffs]))
    rec = ScalarRec(coeffs, rhs, rhs_x, -s_min, max(0, s_min), side)
    return _trim(rec)


def _trim(rec: ScalarRec) -> ScalarRec:
    """Drop vanishing trailing coefficients by re-indexing N."""
    coeffs = list(rec.coeffs)
    while len(coeffs) > 1 and not coeffs[-1]:
        coeffs.pop()
    low = 0
    while low < len(coeffs) - 1 and not coeffs[low]:
        low += 1
    if low == 0:
        rec.coeffs = coeffs
        return rec
    # f(N+k) with k >= low: substitute N -> N - low
    new = [c.shift(-low) for c in coeffs[low:]]
    return ScalarRec(
        new,
        rec.rhs.sigma(SHIFT, -low),
        rec.rhs_x,
        rec.x_shift - low,
        rec.n_min + low,
        rec.side_constraints,
    )


def rec_from_operator(op: OreOp, rhs: LinearForm, n_min: int = 0) -> ScalarRec:
    """Clear denominators of a shift-operator equation op(f) = rhs."""
    if op.kind != SHIFT:
        raise ValueError("expected a shift operator")
    den = Poly.const(1, op.var)
    for c in op.coeffs:
        den = poly_lcm(den, c.den)
    d = RatFun(den, reduced=True)
    coeffs = [(c * d).num for c in op.coeffs]
    return _trim(ScalarRec(coeffs, rhs.scale(d), zero_form(XVAR), 0, n_min))


__all__ = ["ScalarODE", "ScalarRec", "gcdReduce", "odeToRec", "rec_from_operator", "DERIVATIVE"]
