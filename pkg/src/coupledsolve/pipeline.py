"""End-to-end solving of D I = A I + b for power-series unknowns.

Two routes are offered.  tactic1 compares coefficients first and uncouples
the resulting difference system; tactic2 uncouples the differential system,
turns each scalar ODE into a recurrence and extracts the coefficients of the
remaining unknowns from their generating functions.  Every closed form is
checked against an independent series oracle that iterates the system
directly from the supplied initial values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra.linalg import inverse, row_reduce
from .algebra.poly import Poly, RatFun, falling_factorial, poly_lcm, to_ratfun
from .coeffx import (
    DEFAULT_TRUNCATION,
    DEFAULT_WHITELIST,
    HatExpr,
    _low,
    cancelBadClusters,
    cauchyCoeff,
    clusterBadDenominators,
    series_coeffs,
)
from .errors import (
    EmptyWindow,
    EvalPole,
    InsufficientInitialValues,
    InvariantViolation,
    MismatchDetected,
    OutsideClass,
)
from .holonomic import ScalarODE, gcdReduce, odeToRec, rec_from_operator
from .ore import DERIVATIVE, SHIFT, CoupledSystem, LinearForm, regularize, toFirstOrder, uncouple, zero_form
from .recsolve import _lower_eps, epsSolve
from .sums.eps import EpsLaurent, SeriesTable, _is_zero, expand_in_eps
from .sums.expr import Evaluator, SumExpr
from .sums.grammar import format_expr, parse_expr
from .sums.harmonic import reduce_products
from .sums.summation import simplify

NVAR = "N"
XVAR = "x"
DEFAULT_SERIES_ORDER = 30
COMPARE_POINTS = 26
ZERO = EpsLaurent(0, [], exact=True)
# the oracle runs this far past the requested series order so that the
# closed-form matching never has to iterate a recurrence from the left
ORACLE_MARGIN = 40
# closed forms must agree with the series on at least this many final points
MIN_VERIFIED = 30


@dataclass
class Options:
    whitelist: tuple = DEFAULT_WHITELIST
    truncation: int = DEFAULT_TRUNCATION
    quadratic: bool = False
    series_order: int = DEFAULT_SERIES_ORDER
    use_gcd: bool = True


@dataclass
class ProblemSpec:
    """D I = A I + b with b_j = sum_N b_j(N) x^N given in closed form.

    rhs maps each b name to an EpsLaurent whose coefficients are SumExprs in
    N (valid for N >= 0).  initial maps unknown names to {n: EpsLaurent}.
    """

    system: CoupledSystem
    rhs: dict
    initial: dict
    window: tuple
    options: Options = field(default_factory=Options)

    def __post_init__(self):
        sys = self.system
        if sys.kind != DERIVATIVE or sys.order != 1:
            raise ValueError("the input must be a first-order differential system")
        lo, top = self.window
        if top < lo:
            raise ValueError("empty eps window")
        used = set()
        for row in sys.rhs:
            used |= row.names()
        missing = used - set(self.rhs)
        if missing:
            raise ValueError(f"no expansion given for {sorted(missing)}")
        clash = set(self.rhs) & set(sys.names)
        if clash:
            raise ValueError(f"names used both as unknowns and rhs: {sorted(clash)}")
        for name in self.initial:
            if name not in sys.names:
                raise ValueError(f"initial values for unknown {name!r} which is not in the system")
        self.initial = {
            name: {int(n): _numeric_value(v) for n, v in table.items()} for name, table in self.initial.items()
        }
        for name, series in self.rhs.items():
            if series.top is not None and series.top < top:
                raise ValueError(f"expansion of {name} stops at eps^{series.top}, below the window")

    @property
    def names(self) -> list:
        return list(self.system.names)


# -- the series oracle -------------------------------------------------------------------


def _as_number(c):
    if isinstance(c, SumExpr):
        r = c.coefficient_only()
        if r is None or not r.is_constant():
            raise ValueError(f"initial value {c} is not a number")
        return r.constant_value()
    if isinstance(c, RatFun) and c.is_constant():
        return c.constant_value()
    return c


def _numeric_value(v) -> EpsLaurent:
    if isinstance(v, EpsLaurent):
        return v.map(_as_number)
    return EpsLaurent.constant(_as_number(v))


def _point_value(ev: Evaluator, e, n: int):
    if isinstance(e, SumExpr):
        return ev.value(e, n)
    if isinstance(e, SeriesTable):
        return e(n)
    return e


def _lift_value(v) -> EpsLaurent:
    return v if isinstance(v, EpsLaurent) else EpsLaurent.constant(v)


def _mul(c, v: EpsLaurent) -> EpsLaurent:
    if _is_zero(c) or (v.exact and not v.coeffs):
        return ZERO
    return v * c


def _value_is_zero(v: EpsLaurent) -> bool:
    return all(_is_zero(c) for c in v.coeffs)


class SeriesOracle:
    """Exact coefficients I(n) of the power-series solution, order by order.

    At x^(n-1) the system reads (n - A_{-1}) I(n) = sum_{i>=0} A_i I(n-1-i)
    + b_{n-1}.  Supplied initial values take precedence; undetermined
    components raise InsufficientInitialValues.
    """

    def __init__(self, p: ProblemSpec):
        self.p = p
        self.a, self.rows = p.system.explicit()
        self.r = len(self.a)
        for row in self.a:
            for c in row:
                if c and _low(c) < -1:
                    raise ValueError("poles of order above one at x = 0 are outside the series ansatz")
        self.ev = Evaluator()
        self._b: dict = {}
        self._tables: dict = {n: [] for n in p.names}
        self._stop = -1

    def b_value(self, name: str, n: int) -> EpsLaurent:
        if n < 0:
            return ZERO
        key = (name, n)
        if key not in self._b:
            series = self.p.rhs[name]
            self._b[key] = series.map(lambda e: _point_value(self.ev, e, n))
        return self._b[key]

    def _beta(self, i: int, m: int, cache: dict) -> EpsLaurent:
        """[x^m] of row i of the rhs."""
        out = ZERO
        for (name, k), c in self.rows[i].terms.items():
            low = _low(c)
            key = (i, name, k)
            if key not in cache or len(cache[key]) < m - low + 1:
                cache[key] = series_coeffs(c, 2 * max(m, 8), low)
            ser = cache[key]
            for a in range(low, m + 1):
                ca = ser[a - low]
                if not ca:
                    continue
                idx = m - a
                ff = 1
                for t in range(k):
                    ff *= idx + k - t
                if ff:
                    out = out + _mul(ca * ff, self.b_value(name, idx + k))
        return out

    def tables(self, stop: int) -> dict:
        """Values for n = 0..stop of every unknown."""
        if stop <= self._stop:
            return {n: t[: stop + 1] for n, t in self._tables.items()}
        names = self.p.names
        r = self.r
        acoef = [[series_coeffs(c, stop + 2, -1) if c else None for c in row] for row in self.a]
        vals = {n: [] for n in names}
        cache: dict = {}
        for n in range(stop + 1):
            rhs = []
            for i in range(r):
                acc = self._beta(i, n - 1, cache)
                for j in range(r):
                    ser = acoef[i][j]
                    if ser is None:
                        continue
                    for ii in range(0, n):
                        c = ser[ii + 1]
                        if c:
                            acc = acc + _mul(c, vals[names[j]][n - 1 - ii])
                rhs.append(acc)
            mat = [[(Fraction(n) if i == j else Fraction(0)) - (acoef[i][j][0] if acoef[i][j] else 0)
                    for j in range(r)] for i in range(r)]
            given = {j: self.p.initial[names[j]][n] for j in range(r)
                     if names[j] in self.p.initial and n in self.p.initial[names[j]]}
            sol = self._solve_step(n, mat, rhs, given)
            for j in range(r):
                vals[names[j]].append(sol[j])
        self._tables, self._stop = vals, stop
        return {k: list(v) for k, v in vals.items()}

    def _solve_step(self, n: int, mat, rhs, given: dict) -> list:
        r = self.r
        unknown = [j for j in range(r) if j not in given]
        adj = []
        for i in range(r):
            acc = rhs[i]
            for j, v in given.items():
                acc = acc - _mul(mat[i][j], _lift_value(v))
            adj.append(acc)
        out = [None] * r
        for j, v in given.items():
            out[j] = _lift_value(v)
        if unknown:
            sub = [[mat[i][j] for j in unknown] for i in range(r)]
            transposed = [[sub[i][c] for i in range(r)] for c in range(len(unknown))]
            _, pivots = row_reduce(transposed)
            if len(pivots) < len(unknown):
                names = [self.p.names[j] for j in unknown]
                raise InsufficientInitialValues([n], f"initial values needed at N = {n} for some of {names}")
            inv = inverse([sub[i] for i in pivots])
            for a, j in enumerate(unknown):
                acc = ZERO
                for b, i in enumerate(pivots):
                    acc = acc + _mul(inv[a][b], adj[i])
                out[j] = acc
        for i in range(r):
            res = rhs[i]
            for j in range(r):
                res = res - _mul(mat[i][j], out[j])
            if not _value_is_zero(res):
                raise ValueError(f"initial values are inconsistent with the system at N = {n}")
        return out


def system_residual(p: ProblemSpec, values: dict, order: int) -> list:
    """Nonzero entries (row, n, value) of the coefficient residual of the system.

    values maps unknown names to lists of EpsLaurent for n = 0..order.
    """
    oracle = SeriesOracle(p)
    names = p.names
    r = oracle.r
    acoef = [[series_coeffs(c, order + 2, -1) if c else None for c in row] for row in oracle.a]
    cache: dict = {}
    bad = []
    for n in range(order + 1):
        for i in range(r):
            res = _lift_value(values[names[i]][n]) * Fraction(n) - oracle._beta(i, n - 1, cache)
            for j in range(r):
                ser = acoef[i][j]
                if ser is None:
                    continue
                for ii in range(-1, n):
                    c = ser[ii + 1]
                    if c:
                        res = res - _mul(c, _lift_value(values[names[j]][n - 1 - ii]))
            if not _value_is_zero(res):
                bad.append((i, n, res))
    return bad


# -- closed forms and their instantiation ---------------------------------------------------


@dataclass
class Closed:
    """An eps-expansion with SumExpr coefficients, valid for N >= start."""

    series: EpsLaurent
    start: int


def _integer_pole_bound(c: RatFun) -> int:
    """1 + the largest nonnegative integer pole of c, or 0."""
    from .recsolve import _integer_roots_any

    den = c.den
    if den.degree() <= 0:
        return 0
    roots = [x for x in _integer_roots_any(den) if x >= 0]
    return max(roots) + 1 if roots else 0


def _clean(e) -> SumExpr:
    e = SumExpr.lift(e)
    return simplify(reduce_products(e))


def instantiate(form: LinearForm, closed: dict, top: int) -> Closed:
    """Closed form of sum c(N, eps) X(N+k) for a shift-kind form."""
    total = ZERO
    start = 0
    for (name, k), c in form.sorted_terms():
        x = closed.get(name)
        if x is None:
            raise ValueError(f"{name} is known only as a table; the tactics need closed forms")
        xs = x.series.map(lambda e: SumExpr.lift(e).shift(k).synchronize())
        head = expand_in_eps(c, NVAR, 1)
        vc = head.lo
        count = max(1, top - (x.series.lo + vc) + 1)
        ce = expand_in_eps(c, NVAR, count)
        total = total + xs * ce
        start = max(start, x.start - k)
        for t in ce.orders():
            coeff = ce[t]
            if isinstance(coeff, RatFun):
                start = max(start, _integer_pole_bound(coeff))
    if total.exact and not total.coeffs:
        return Closed(ZERO, start)
    return Closed(total.map(_clean), start)


def _orders(series: EpsLaurent, lo: int, top: int) -> list:
    return [SumExpr.lift(series[j]) for j in range(lo, top + 1)]


# -- per-unknown results -------------------------------------------------------------------


@dataclass
class UnknownSolution:
    """Closed forms for eps^lo..eps^top with exact head values below the start."""

    name: str
    lo: int
    top: int
    exprs: list
    starts: list
    heads: list

    def value(self, j: int, n: int):
        idx = j - self.lo
        if n < self.starts[idx]:
            return self.heads[idx][n]
        return self.exprs[idx](n)

    def laurent(self, n: int) -> EpsLaurent:
        return EpsLaurent(self.lo, [self.value(j, n) for j in range(self.lo, self.top + 1)])

    def closed(self) -> Closed:
        return Closed(EpsLaurent(self.lo, list(self.exprs)), max(self.starts))

    def to_dict(self) -> dict:
        return {
            "orders": [
                {
                    "order": j,
                    "closed_form": format_expr(e),
                    "valid_from": s,
                    "head": [_fmt_number(v) for v in h],
                }
                for j, e, s, h in zip(range(self.lo, self.top + 1), self.exprs, self.starts, self.heads)
            ]
        }

    @classmethod
    def from_dict(cls, name: str, data: dict) -> "UnknownSolution":
        orders = data["orders"]
        lo = orders[0]["order"]
        return cls(
            name,
            lo,
            lo + len(orders) - 1,
            [parse_expr(o["closed_form"]) for o in orders],
            [int(o["valid_from"]) for o in orders],
            [[_parse_number(v) for v in o["head"]] for o in orders],
        )

    def __str__(self):
        parts = []
        for j, e, s in zip(range(self.lo, self.top + 1), self.exprs, self.starts):
            cond = f"  (N >= {s})" if s else ""
            parts.append(f"  eps^{j}: {format_expr(e)}{cond}")
        return f"{self.name}(N) =\n" + "\n".join(parts)


def _fmt_number(v) -> str:
    return str(v)


def _parse_number(text: str):
    e = parse_expr(text)
    c = e.coefficient_only()
    if c is None or not c.is_constant():
        raise ValueError(f"not a number: {text!r}")
    return c.constant_value()


@dataclass
class UnknownReport:
    name: str
    status: str
    solution: UnknownSolution | None = None
    message: str = ""
    residual_order: int | None = None

    def to_dict(self) -> dict:
        out = {"status": self.status}
        if self.solution is not None:
            out.update(self.solution.to_dict())
        if self.message:
            out["message"] = self.message
        if self.residual_order is not None:
            out["residual_order"] = self.residual_order
        return out

    @classmethod
    def from_dict(cls, name: str, data: dict) -> "UnknownReport":
        sol = UnknownSolution.from_dict(name, data) if "orders" in data else None
        return cls(name, data["status"], sol, data.get("message", ""), data.get("residual_order"))


@dataclass
class SolutionReport:
    tactic: str
    window: tuple
    unknowns: dict
    solved_subset: list
    diagnostics: dict
    series_check: dict
    elapsed: float = 0.0

    @property
    def complete(self) -> bool:
        return all(u.status == "solved" for u in self.unknowns.values())

    @property
    def bad_sums_survive(self) -> bool:
        return any(o["outcome"] == "BadSumsSurvive" for o in self.diagnostics.get("clusters", []))

    def to_dict(self) -> dict:
        return {
            "format": "coupledsolve-report",
            "version": 1,
            "tactic": self.tactic,
            "window": list(self.window),
            "solved_subset": list(self.solved_subset),
            "unknowns": {n: u.to_dict() for n, u in self.unknowns.items()},
            "diagnostics": self.diagnostics,
            "series_check": self.series_check,
            "elapsed": round(self.elapsed, 3),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SolutionReport":
        unknowns = {n: UnknownReport.from_dict(n, d) for n, d in data["unknowns"].items()}
        return cls(
            data["tactic"],
            tuple(data["window"]),
            unknowns,
            list(data["solved_subset"]),
            data.get("diagnostics", {}),
            data.get("series_check", {}),
            data.get("elapsed", 0.0),
        )

    def summary(self) -> str:
        lines = [f"tactic {self.tactic}, eps window {self.window[0]}..{self.window[1]}"]
        for u in self.unknowns.values():
            if u.solution is not None:
                lines.append(str(u.solution))
            else:
                lines.append(f"{u.name}: {u.status} ({u.message})")
        check = self.series_check
        if check:
            verdict = "passed" if check.get("passed") else "FAILED"
            lines.append(f"series residual check to order {check.get('order')}: {verdict}")
        for o in self.diagnostics.get("clusters", []):
            where = f" in {o['site']}" if o.get("site") else ""
            lines.append(f"cluster {', '.join(o['factors'])}{where}: {o['outcome']}")
        return "\n".join(lines)


# -- shared machinery ---------------------------------------------------------------------


class _Context:
    """Truth tables, closed forms and diagnostics threaded through a tactic."""

    def __init__(self, p: ProblemSpec):
        self.p = p
        self.opts = p.options
        self.oracle = SeriesOracle(p)
        self.depth = max(self.opts.series_order, DEFAULT_SERIES_ORDER) + ORACLE_MARGIN
        self.truth = self.oracle.tables(self.depth)
        self.forward: dict = {}
        self.closed: dict = {
            name: Closed(series.map(SumExpr.lift), 0)
            for name, series in p.rhs.items()
            if not any(isinstance(c, SeriesTable) for c in series.coeffs)
        }
        self.solutions: dict = {}
        self.equations: list = []
        self.failures: dict = {}
        self.final: dict = {}

    def value(self, name: str, n: int):
        """Exact value of a named sequence at n, or None if out of reach."""
        if n < 0:
            return ZERO
        if name in self.truth:
            t = self.truth[name]
            return t[n] if n < len(t) else None
        if name in self.p.rhs:
            return self.oracle.b_value(name, n)
        form = self.forward.get(name)
        if form is None:
            return None
        acc = ZERO
        for (nm, k), c in form.terms.items():
            try:
                cv = c(n)
            except (EvalPole, ZeroDivisionError):
                return None
            v = self.value(nm, n + k)
            if v is None:
                return None
            acc = acc + _mul(cv, _lift_value(v))
        return acc

    def table(self, name: str) -> dict:
        out = {}
        for n in range(self.depth + 1):
            v = self.value(name, n)
            if v is not None:
                out[n] = v
        return out

    def solve_scalar(self, name: str, rec, rhs: Closed, tactic_info: dict) -> None:
        """epsSolve one scalar recurrence and register its closed form."""
        table = self.table(name)
        n_min = max(rec.n_min, 0)
        while n_min <= self.depth and any(n not in table for n in range(n_min, n_min + rec.order + 1)):
            n_min += 1
        values = [table[n] for n in table if n >= n_min]
        nonzero = [v.valuation() for v in values if not _value_is_zero(v)]
        lo = min([self.p.window[0]] + nonzero)
        tops = [v.top for v in values if v.top is not None]
        top = min(tops) if tops else self.p.window[1]
        v_shift = min((_lower_eps(c) for c in rec.coeffs if c), default=0)
        if rhs.series.top is not None:
            top = min(top, rhs.series.top - v_shift)
        if top < lo:
            raise EmptyWindow(f"no eps orders left for {name}")
        sol = epsSolve(rec, rhs.series, {n: table[n] for n in table if n >= n_min}, (lo, top),
                       quadratic=self.opts.quadratic, rhs_valid_from=rhs.start, n_min=n_min)
        heads = [[table[n][j] for n in range(s)] for j, s in zip(range(lo, top + 1), sol.starts)]
        self.solutions[name] = UnknownSolution(name, lo, top, list(sol.exprs), list(sol.starts), heads)
        self.closed[name] = Closed(EpsLaurent(lo, list(sol.exprs)), max(sol.starts))
        tactic_info["initial_values"] = {
            "requested": sol.required,
            "consumed": len(sol.required),
        }
        tactic_info["solved_window"] = [lo, top]
        self.equations.append(tactic_info)

    def finalize(self, name: str, closed: Closed) -> UnknownSolution:
        """Check a closed form against the oracle; its start is one past the
        last disagreement, and head values below it come from the series."""
        lo, top = self.p.window
        exprs = _orders(closed.series, lo, top)
        table = self.truth[name]
        starts, heads = [], []
        ev = Evaluator()
        for j, e in zip(range(lo, top + 1), exprs):
            s = 0
            for n in range(self.depth, -1, -1):
                try:
                    ok = ev.value(e, n) == table[n][j]
                except (EvalPole, ZeroDivisionError):
                    ok = False
                if not ok:
                    s = n + 1
                    break
            if s > max(closed.start, self.depth - MIN_VERIFIED):
                raise InvariantViolation(f"{name}, eps^{j}: closed form disagrees with the series at N={s - 1}")
            starts.append(s)
            heads.append([table[n][j] for n in range(s)])
        return UnknownSolution(name, lo, top, exprs, starts, heads)

    def validity_start(self, name: str, rec) -> int:
        """Smallest n from which rec holds on the series of name."""
        m = rec.order
        bad = -1
        for n in range(0, self.depth - m + 1):
            res = self._rec_residual(name, rec, n)
            if res is not None and not _value_is_zero(res):
                bad = n
        if bad > self.depth - MIN_VERIFIED:
            raise InvariantViolation(f"the scalar recurrence for {name} does not hold on the series")
        return bad + 1

    def _rec_residual(self, name: str, rec, n: int):
        acc = ZERO
        for k, c in enumerate(rec.coeffs):
            if not c:
                continue
            v = self.value(name, n + k)
            if v is None:
                return None
            acc = acc + _mul(c(n), _lift_value(v))
        for (nm, k), c in rec.rhs.terms.items():
            try:
                cv = c(n)
            except (EvalPole, ZeroDivisionError):
                return None
            v = self.value(nm, n + k)
            if v is None:
                return None
            acc = acc - _mul(cv, _lift_value(v))
        return acc

    def restrict(self, sol: UnknownSolution) -> UnknownSolution:
        """Cut a solved unknown down to the problem window, with table heads."""
        lo, top = self.p.window
        if sol.top < top:
            raise EmptyWindow(f"{sol.name} is known only up to eps^{sol.top}")
        # orders below sol.lo vanish identically in the table
        exprs = [sol.exprs[j - sol.lo] if j >= sol.lo else SumExpr() for j in range(lo, top + 1)]
        starts = [sol.starts[j - sol.lo] if j >= sol.lo else 0 for j in range(lo, top + 1)]
        return self.finalize(sol.name, Closed(EpsLaurent(lo, exprs), max(starts)))

    def report(self, tactic: str, solved: list, diagnostics: dict, t0: float) -> SolutionReport:
        unknowns = {}
        for name in self.p.names:
            if name in self.final:
                unknowns[name] = UnknownReport(name, "solved", self.final[name])
            else:
                err = self.failures.get(name)
                status = type(err).__name__ if err is not None else "unsolved"
                unknowns[name] = UnknownReport(name, status, None, str(err or ""),
                                               getattr(err, "residual_order", None))
        diagnostics["equations"] = self.equations
        diagnostics["initial_values"] = {
            "consumed": sum(e["initial_values"]["consumed"] for e in self.equations if "initial_values" in e),
            "sum_of_orders": sum(e["order"] for e in self.equations),
        }
        check = series_check(self.p, self.final, self.truth, self.opts.series_order)
        return SolutionReport(tactic, tuple(self.p.window), unknowns, solved, diagnostics, check,
                              time.perf_counter() - t0)


def series_check(p: ProblemSpec, solutions: dict, truth: dict, order: int) -> dict:
    """Residual of the system with the reported values (oracle values for gaps)."""
    values = {}
    for name in p.names:
        sol = solutions.get(name)
        if sol is None:
            values[name] = truth[name][: order + 1]
        else:
            values[name] = [sol.laurent(n) for n in range(order + 1)]
    bad = system_residual(p, values, order)
    return {
        "order": order,
        "passed": not bad,
        "nonzero": [[i, n, str(v)] for i, n, v in bad],
    }


# -- tactic 1: compare coefficients, then uncouple ----------------------------------------------


def coefficient_system(p: ProblemSpec) -> CoupledSystem:
    """The recurrence system for the series coefficients.

    With q the common denominator, q D I = (qA) I + q b is compared at x^n
    and written in N = n - d with shifts 0..d+1.
    """
    a, rows = p.system.explicit()
    r = len(a)
    q = Poly.const(1, XVAR)
    for row in a:
        for c in row:
            q = poly_lcm(q, c.den)
    for row in rows:
        for c in row.terms.values():
            q = poly_lcm(q, c.den)
    qr = RatFun(q, reduced=True)
    pm = [[(c * qr).num for c in row] for row in a]
    d = max([q.degree() - 1, 0] + [c.degree() for row in pm for c in row if c])
    n_poly = Poly.gen(NVAR)
    matrices = []
    for t in range(d + 2):
        m = []
        for i in range(r):
            row = []
            for j in range(r):
                v = Poly((), NVAR)
                if i == j:
                    v = v + (n_poly + t) * q[d + 1 - t]
                if d - t >= 0:
                    v = v - Poly.const(pm[i][j][d - t], NVAR)
                row.append(RatFun(v))
            m.append(row)
        matrices.append(m)
    rhs = []
    for row in rows:
        form = zero_form(NVAR)
        for (name, k), c in row.terms.items():
            dc = (c * qr).num
            for aa, ca in enumerate(dc.coeffs):
                if not ca:
                    continue
                sh = d - aa + k
                coef = falling_factorial(n_poly + sh, k) * ca
                form = form + LinearForm.symbol(name, sh, NVAR, RatFun(coef))
        rhs.append(form)
    while len(matrices) > 1 and all(not c for row in matrices[-1] for c in row):
        matrices.pop()
    return CoupledSystem(SHIFT, NVAR, matrices, rhs, list(p.names))


def tactic1(p: ProblemSpec) -> SolutionReport:
    """Coefficient comparison, reduction to an invertible first-order system,
    uncoupling of the difference system and order-by-order solving."""
    t0 = time.perf_counter()
    ctx = _Context(p)
    shift_sys = coefficient_system(p)
    fo = toFirstOrder(shift_sys)
    reg = regularize(fo.system)
    unc = uncouple(reg.system)
    ctx.forward = {n: f.substitute(fo.forward, SHIFT) for n, f in reg.forward.items()}
    for n, f in fo.forward.items():
        ctx.forward.setdefault(n, f)
    if unc.combination:
        j_form = zero_form(NVAR)
        for n, lam in unc.combination.items():
            j_form = j_form + ctx.forward.get(n, LinearForm.symbol(n, 0, NVAR)).scale(lam)
        ctx.forward["J"] = j_form
    for eq in unc.equations:
        info = {"unknown": eq.name}
        if any(n in ctx.failures for n in eq.rhs.names()):
            ctx.failures[eq.name] = OutsideClass("depends on an unsolved unknown")
            continue
        rec = rec_from_operator(eq.op, eq.rhs, n_min=0)
        rec.n_min = ctx.validity_start(eq.name, rec)
        info["valid_from"] = rec.n_min
        info["order"] = rec.order
        info["bitsize"] = rec.bitsize()
        try:
            rhs = instantiate(rec.rhs, ctx.closed, p.window[1] + 8)
            ctx.solve_scalar(eq.name, rec, rhs, info)
        except OutsideClass as exc:
            ctx.failures[eq.name] = exc
            info["outside_class"] = str(exc)
            info["initial_values"] = {"requested": [], "consumed": 0}
            ctx.equations.append(info)
    # originals in terms of solved scalar unknowns and rhs shifts
    ctx.final = {}
    for name in p.names:
        form = fo.back_map[name].substitute(reg.output_map, SHIFT).substitute(unc.rules, SHIFT)
        blocked = [n for n in form.names() if n in ctx.failures]
        if blocked:
            ctx.failures[name] = ctx.failures[blocked[0]]
            continue
        closed = instantiate(form, ctx.closed, p.window[1])
        ctx.final[name] = ctx.finalize(name, closed)
    diagnostics = {
        "recurrence_system": {"order": shift_sys.order, "dimension": shift_sys.dim},
        "first_order_dimension": fo.system.dim,
        "regularized_dimension": reg.system.dim,
        "scalar_unknowns": [eq.name for eq in unc.equations],
        "combination": {k: str(v) for k, v in (unc.combination or {}).items()},
        "orders": [e.get("order") for e in ctx.equations],
        "bitsize": sum(e.get("bitsize", 0) for e in ctx.equations),
    }
    return ctx.report("1", [eq.name for eq in unc.equations], diagnostics, t0)


# -- tactic 2: uncouple the ODE system, then extract coefficients -----------------------------------


def _series_hat(ctx: _Context, name: str, k: int, j: int):
    """Summands for D^k of the generating function of the eps^j part of name."""
    x = ctx.closed.get(name)
    if x is None:
        raise ValueError(f"{name} is known only as a table; the tactics need closed forms")
    g = SumExpr.lift(x.series[j])
    s = max(0, x.start - k)
    n_sym = SumExpr.n()
    factor = SumExpr.const(1)
    for i in range(1, k + 1):
        factor = factor * (n_sym + i)
    gk = (factor * g.shift(k)).synchronize()
    body = gk.shift(s).synchronize() if s else gk
    head = []
    for n in range(s):
        v = ctx.value(name, n + k)
        ff = 1
        for i in range(1, k + 1):
            ff *= n + i
        head.append(v[j] * ff if v is not None else None)
    if any(h is None for h in head):
        raise InsufficientInitialValues([n for n, h in enumerate(head) if h is None])
    xpow = RatFun(Poly([Fraction(0)] * s + [Fraction(1)], XVAR))
    head_poly = RatFun(Poly(head, XVAR)) if head else RatFun.const(0, XVAR)
    return xpow, body, head_poly


def hat_order(ctx: _Context, form: LinearForm, j: int) -> HatExpr:
    """eps^j part of sum c(x, eps) D^k X-hat as a HatExpr."""
    summands = []
    width = ctx.p.window[1] - ctx.p.window[0] + 8
    for (name, k), c in form.sorted_terms():
        ce = expand_in_eps(c, XVAR, width)
        x = ctx.closed.get(name)
        if x is None:
            raise ValueError(f"{name} is known only as a table; the tactics need closed forms")
        for t in ce.orders():
            jj = j - t
            if jj < x.series.lo:
                continue
            ct = to_ratfun(ce[t], XVAR)
            if not ct:
                continue
            xpow, body, head_poly = _series_hat(ctx, name, k, jj)
            if body:
                summands.append((ct * xpow, body))
            if head_poly:
                summands.append((ct * head_poly, None))
    return HatExpr(summands)


def extract(ctx: _Context, h: HatExpr, clusters_log: list, site: str = "") -> tuple[SumExpr, int]:
    """[x^N] of h after the bad-denominator clustering and cancellation.

    Every cluster outcome is appended to clusters_log, tagged with site."""
    opts = ctx.opts
    clusters = clusterBadDenominators(h, opts.whitelist)
    cancelled = cancelBadClusters(clusters, opts.truncation, opts.whitelist)
    clusters_log.extend(dict(o.describe(), site=site) for o in cancelled.outcomes)
    res = cauchyCoeff(cancelled.expr)
    return _clean(res.expr), res.valid_from


def tactic2(p: ProblemSpec, use_gcd: bool | None = None) -> SolutionReport:
    """Uncoupling of the differential system, conversion of the scalar ODEs
    to recurrences, and coefficient extraction for the remaining unknowns."""
    t0 = time.perf_counter()
    use_gcd = p.options.use_gcd if use_gcd is None else use_gcd
    ctx = _Context(p)
    unc = uncouple(p.system)
    if unc.combination:
        j_form = zero_form(NVAR)
        for n, lam in unc.combination.items():
            j_form = j_form + LinearForm.symbol(n, 0, NVAR, lam)
        ctx.forward["J"] = j_form
    clusters_log: list = []
    lo, top = p.window
    for eq in unc.equations:
        info = {"unknown": eq.name}
        if any(n in ctx.failures for n in eq.rhs.names()):
            ctx.failures[eq.name] = OutsideClass("depends on an unsolved unknown")
            continue
        ode = ScalarODE.from_equation(eq.op, eq.rhs, eq.name)
        raw = odeToRec(ode, allow_rational_rhs=True)
        info["order_before_gcd"] = raw.order
        if use_gcd:
            ode, d = gcdReduce(ode)
            info["gcd"] = str(d)
        rec = odeToRec(ode, allow_rational_rhs=True)
        info["order"] = rec.order
        info["bitsize"] = rec.bitsize()
        try:
            rhs = instantiate(rec.rhs, ctx.closed, top + 8)
            if rec.rhs_x:
                rhs = _add_closed(rhs, _rhs_x_closed(ctx, rec, clusters_log, eq.name))
            ctx.solve_scalar(eq.name, rec, rhs, info)
        except OutsideClass as exc:
            ctx.failures[eq.name] = exc
            info["outside_class"] = str(exc)
            info["initial_values"] = {"requested": [], "consumed": 0}
            ctx.equations.append(info)
    ctx.final = {}
    for name in p.names:
        if name in ctx.solutions:
            ctx.final[name] = ctx.restrict(ctx.solutions[name])
            continue
        form = unc.rules[name]
        blocked = [n for n in form.names() if n in ctx.failures]
        if blocked:
            ctx.failures[name] = ctx.failures[blocked[0]]
            continue
        exprs, start = [], 0
        for j in range(lo, top + 1):
            e, s = extract(ctx, hat_order(ctx, form, j), clusters_log, f"{name} at eps^{j}")
            exprs.append(e)
            start = max(start, s)
        ctx.final[name] = ctx.finalize(name, Closed(EpsLaurent(lo, exprs), start))
    diagnostics = {
        "scalar_unknowns": [eq.name for eq in unc.equations],
        "combination": {k: str(v) for k, v in (unc.combination or {}).items()},
        "orders": [e.get("order") for e in ctx.equations],
        "orders_before_gcd": [e.get("order_before_gcd") for e in ctx.equations],
        "use_gcd": use_gcd,
        "bitsize": sum(e.get("bitsize", 0) for e in ctx.equations),
        "clusters": clusters_log,
    }
    return ctx.report("2", [eq.name for eq in unc.equations], diagnostics, t0)


def _add_closed(a: Closed, b: Closed) -> Closed:
    return Closed((a.series + b.series).map(_clean), max(a.start, b.start))


def _rhs_x_closed(ctx: _Context, rec, clusters_log: list, name: str = "") -> Closed:
    """The rhs part [x^(N + x_shift)] of rec.rhs_x, as a closed form in N."""
    lo, top = ctx.p.window
    missing = [n for n in rec.rhs_x.names() if n not in ctx.closed]
    if missing:
        raise ValueError(f"{missing[0]} is known only as a table; the tactics need closed forms")
    low = min(ctx.closed[n].series.lo for n in rec.rhs_x.names())
    exprs, start = [], 0
    v_shift = min((_lower_eps(c) for c in rec.coeffs if c), default=0)
    first = min(lo + v_shift, low)
    for j in range(first, top + v_shift + 1):
        e, s = extract(ctx, hat_order(ctx, rec.rhs_x, j), clusters_log, f"rhs of {name} at eps^{j}")
        exprs.append(e.shift(rec.x_shift).synchronize() if rec.x_shift else e)
        start = max(start, s - rec.x_shift)
    return Closed(EpsLaurent(first, exprs), max(start, 0))


# -- both tactics ---------------------------------------------------------------------------


@dataclass
class Comparison:
    reports: dict
    agreement: bool
    metrics: dict

    def to_dict(self) -> dict:
        return {
            "agreement": self.agreement,
            "metrics": self.metrics,
            "reports": {k: r.to_dict() for k, r in self.reports.items()},
        }


def compareTactics(p: ProblemSpec, points: int = COMPARE_POINTS) -> Comparison:
    """Run both tactics and check that their solutions agree pointwise."""
    r1 = tactic1(p)
    r2 = tactic2(p)
    lo, top = p.window
    compared = []
    for name in p.names:
        s1, s2 = r1.unknowns[name].solution, r2.unknowns[name].solution
        if s1 is None or s2 is None:
            continue
        compared.append(name)
        for j in range(lo, top + 1):
            for n in range(points):
                if s1.value(j, n) != s2.value(j, n):
                    raise MismatchDetected(f"{name}, eps^{j}, N={n}: {s1.value(j, n)} != {s2.value(j, n)}")
    metrics = {
        "compared": compared,
        "orders": {"1": r1.diagnostics["orders"], "2": r2.diagnostics["orders"]},
        "orders_before_gcd": r2.diagnostics["orders_before_gcd"],
        "bitsize": {"1": r1.diagnostics["bitsize"], "2": r2.diagnostics["bitsize"]},
        "seconds": {"1": round(r1.elapsed, 3), "2": round(r2.elapsed, 3)},
    }
    return Comparison({"1": r1, "2": r2}, True, metrics)


def verify_report(p: ProblemSpec, report: SolutionReport, order: int | None = None) -> dict:
    """Re-check the closed forms of a report against the system's series."""
    order = order or p.options.series_order
    oracle = SeriesOracle(p)
    truth = oracle.tables(order)
    sols = {n: u.solution for n, u in report.unknowns.items() if u.solution is not None}
    mismatches = []
    for name, sol in sols.items():
        for j in range(sol.lo, sol.top + 1):
            for n in range(order + 1):
                if sol.value(j, n) != truth[name][n][j]:
                    mismatches.append([name, j, n])
    out = series_check(p, sols, truth, order)
    out["mismatches"] = mismatches
    out["passed"] = out["passed"] and not mismatches
    return out


__all__ = [
    "Closed",
    "Comparison",
    "Options",
    "ProblemSpec",
    "SeriesOracle",
    "SolutionReport",
    "UnknownReport",
    "UnknownSolution",
    "coefficient_system",
    "compareTactics",
    "instantiate",
    "series_check",
    "system_residual",
    "tactic1",
    "tactic2",
    "verify_report",
]
