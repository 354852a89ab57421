"""Command-line front end.

    coupledsolve solve PROBLEM.json [--tactic 1|2|both] [--series-check N]
    coupledsolve uncouple PROBLEM.json [--kind derivative|shift]
    coupledsolve coeff "1/(1-x-x^2) * GF[S[2,1]]"
    coupledsolve recsolve "{N+1, -2*N-3, N+2} . I = 0" --initial "[0, 1]"
    coupledsolve check PROBLEM.json REPORT.json

Exit codes: 0 success, 1 parse or validation failure, 2 a solution outside
the class or surviving bad sums (partial results are still written), 3 an
internal invariant violation or a failed check.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import jsonschema

from .algebra.parse import parse_ratfun
from .coeffx import DEFAULT_TRUNCATION, DEFAULT_WHITELIST, cancelBadClusters, cauchyCoeff, clusterBadDenominators, parse_hat
from .errors import (
    CoupledSolveError,
    DegenerateSystem,
    InsufficientInitialValues,
    IrreducibleDegreeTooHigh,
    InvariantViolation,
    MismatchDetected,
    OutsideClass,
    ParseError,
)
from .holonomic import ScalarRec
from .ore import DERIVATIVE, CoupledSystem, LinearForm, regularize, toFirstOrder, uncouple, zero_form
from .pipeline import (
    DEFAULT_SERIES_ORDER,
    Options,
    ProblemSpec,
    SolutionReport,
    coefficient_system,
    compareTactics,
    tactic1,
    tactic2,
    verify_report,
)
from .recsolve import CHECK_POINTS, epsSolve, eps_residual
from .sums.eps import EpsLaurent, SeriesTable
from .sums.expr import Evaluator
from .sums.grammar import format_expr, parse_expr

TRUNCATION_ENV = "COUPLEDSOLVE_TRUNCATION"

EXIT_OK, EXIT_PARSE, EXIT_CLASS, EXIT_INVARIANT = 0, 1, 2, 3

_STRING_LIST = {"type": "array", "items": {"type": "string"}}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "coupledsolve problem",
    "type": "object",
    "required": ["format", "version", "unknowns", "matrix", "window", "initial"],
    "additionalProperties": False,
    "properties": {
        "format": {"const": "coupledsolve-problem"},
        "version": {"const": 1},
        "unknowns": {"type": "array", "items": {"type": "string", "pattern": "^[A-Za-z][A-Za-z0-9_]*$"},
                     "minItems": 1},
        "matrix": {"type": "array", "items": _STRING_LIST},
        "rhs": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "string"},
                    {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["name"],
                            "additionalProperties": False,
                            "properties": {
                                "name": {"type": "string"},
                                "coeff": {"type": "string"},
                                "derivative": {"type": "integer", "minimum": 0},
                            },
                        },
                    },
                ]
            },
        },
        "expansions": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["lo"],
                "additionalProperties": False,
                "properties": {
                    "lo": {"type": "integer"},
                    "orders": _STRING_LIST,
                    "table": {"type": "array", "items": _STRING_LIST},
                    "exact": {"type": "boolean"},
                },
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "patternProperties": {"^[0-9]+$": _STRING_LIST},
                "additionalProperties": False,
            },
        },
        "window": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tactic": {"enum": ["1", "2", "both"]},
                "whitelist": _STRING_LIST,
                "truncation": {"type": "integer", "minimum": 4},
                "quadratic": {"type": "boolean"},
                "series_order": {"type": "integer", "minimum": 1},
                "use_gcd": {"type": "boolean"},
            },
        },
    },
}


class ProblemFileError(ParseError):
    pass


def default_truncation() -> int:
    raw = os.environ.get(TRUNCATION_ENV)
    if not raw:
        return DEFAULT_TRUNCATION
    try:
        value = int(raw)
    except ValueError:
        raise ProblemFileError(f"{TRUNCATION_ENV} must be an integer, got {raw!r}") from None
    if value < 4:
        raise ProblemFileError(f"{TRUNCATION_ENV} must be at least 4")
    return value


def _number(text: str):
    e = parse_expr(text)
    c = e.coefficient_only()
    if c is None or not c.is_constant():
        raise ProblemFileError(f"expected a number, got {text!r}")
    return c.constant_value()


def _row_form(row, unknowns) -> LinearForm:
    if isinstance(row, str):
        row = row.strip()
        if row == "0":
            return zero_form("x")
        return LinearForm.symbol(row, 0, "x")
    form = zero_form("x")
    for term in row:
        coeff = parse_ratfun(term.get("coeff", "1"), "x")
        form = form + LinearForm.symbol(term["name"], term.get("derivative", 0), "x", coeff)
    return form


def _expansion(data: dict) -> EpsLaurent:
    lo = data["lo"]
    if "orders" in data and "table" in data:
        raise ProblemFileError("an expansion has either closed-form orders or a table, not both")
    if "orders" in data:
        coeffs = [parse_expr(s) for s in data["orders"]]
    elif "table" in data:
        coeffs = [SeriesTable(0, [_number(v) for v in col]) for col in data["table"]]
    else:
        raise ProblemFileError("an expansion needs orders or a table")
    if not coeffs:
        raise ProblemFileError("an expansion needs at least one order")
    return EpsLaurent(lo, coeffs, exact=data.get("exact", False))


def problem_from_dict(data: dict, overrides: dict | None = None) -> ProblemSpec:
    """Validate a problem document and build the ProblemSpec."""
    try:
        jsonschema.validate(data, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ProblemFileError(f"problem file: {exc.message}") from None
    names = data["unknowns"]
    r = len(names)
    matrix = data["matrix"]
    if len(matrix) != r or any(len(row) != r for row in matrix):
        raise ProblemFileError("the matrix must be square with one row per unknown")
    try:
        a = [[parse_ratfun(c, "x") for c in row] for row in matrix]
        rows = data.get("rhs", ["0"] * r)
        if len(rows) != r:
            raise ProblemFileError("one rhs row per unknown is required")
        rhs_forms = [_row_form(row, names) for row in rows]
        expansions = {n: _expansion(e) for n, e in data.get("expansions", {}).items()}
        lo, top = data["window"]
        initial = {}
        for name, table in data["initial"].items():
            initial[name] = {int(n): EpsLaurent(lo, [_number(v) for v in vals]) for n, vals in table.items()}
        opts = dict(data.get("options", {}))
        opts.update({k: v for k, v in (overrides or {}).items() if v is not None})
        opts.pop("tactic", None)
        options = Options(
            whitelist=tuple(opts.get("whitelist", DEFAULT_WHITELIST)),
            truncation=opts.get("truncation", default_truncation()),
            quadratic=opts.get("quadratic", False),
            series_order=opts.get("series_order", DEFAULT_SERIES_ORDER),
            use_gcd=opts.get("use_gcd", True),
        )
        system = CoupledSystem.first_order(DERIVATIVE, a, rhs_forms, names, "x")
        return ProblemSpec(system, expansions, initial, (lo, top), options)
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ProblemFileError):
            raise
        raise ProblemFileError(str(exc)) from exc


def load_problem(path: str, overrides: dict | None = None) -> tuple[ProblemSpec, dict]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFileError(f"cannot read {path}: {exc}") from None
    return problem_from_dict(data, overrides), data


# -- subcommands ------------------------------------------------------------------------


def _write_json(doc: dict, path: str, out) -> None:
    text = json.dumps(doc, indent=2)
    if path == "-":
        out.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")
        out.write(f"report written to {path}\n")


def _default_output(problem: str) -> str:
    p = Path(problem)
    return str(p.with_name(p.stem + ".report.json"))


def _report_exit(report: SolutionReport) -> int:
    if not report.series_check.get("passed", True):
        return EXIT_INVARIANT
    if not report.complete or report.bad_sums_survive:
        return EXIT_CLASS
    return EXIT_OK


def _strip_timing(doc: dict) -> dict:
    doc.pop("elapsed", None)
    return doc


def cmd_solve(args, out) -> int:
    overrides = {
        "quadratic": True if args.quadratic else None,
        "truncation": args.truncation,
        "series_order": args.series_check,
        "use_gcd": False if args.no_gcd else None,
    }
    p, data = load_problem(args.problem, overrides)
    args.output = args.output or _default_output(args.problem)
    tactic = args.tactic or data.get("options", {}).get("tactic", "both")
    if tactic == "both":
        comparison = compareTactics(p)
        doc = comparison.to_dict()
        if not args.timing:
            doc["metrics"].pop("seconds", None)
            for r in doc["reports"].values():
                _strip_timing(r)
        for key in ("1", "2"):
            out.write(comparison.reports[key].summary() + "\n\n")
        m = comparison.metrics
        names = ", ".join(m["compared"]) or "none"
        out.write(f"agreement on N = 0..25: {'yes' if comparison.agreement else 'no'} (compared: {names})\n")
        out.write(f"recurrence orders: tactic 1 {m['orders']['1']}, tactic 2 {m['orders']['2']} "
                  f"(before gcd {m['orders_before_gcd']})\n")
        out.write(f"coefficient bit sizes: tactic 1 {m['bitsize']['1']}, tactic 2 {m['bitsize']['2']}\n")
        if args.timing:
            out.write(f"seconds: tactic 1 {m['seconds']['1']}, tactic 2 {m['seconds']['2']}\n")
        _write_json(doc, args.output, out)
        codes = [_report_exit(r) for r in comparison.reports.values()]
        return max(codes)
    report = tactic1(p) if tactic == "1" else tactic2(p)
    doc = report.to_dict()
    if not args.timing:
        _strip_timing(doc)
    out.write(report.summary() + "\n")
    _write_json(doc, args.output, out)
    return _report_exit(report)


def cmd_uncouple(args, out) -> int:
    p, _ = load_problem(args.problem)
    if args.kind == "derivative":
        sys_ = p.system
    else:
        shift_sys = coefficient_system(p)
        fo = toFirstOrder(shift_sys)
        reg = regularize(fo.system)
        out.write(f"coefficient system: order {shift_sys.order}, first-order dimension {fo.system.dim}, "
                  f"after regularization {reg.system.dim}\n")
        sys_ = reg.system
    kind = sys_.kind
    res = uncouple(sys_)
    if res.combination:
        comb = " + ".join(f"{c}*{n}" for n, c in res.combination.items())
        out.write(f"J = {comb}\n")
    for eq in res.equations:
        out.write(f"[{eq.name}] ({eq.op}) {eq.name} = {eq.rhs.to_str(kind)}\n")
    for name, form in res.rules.items():
        out.write(f"{name} = {form.to_str(kind)}\n")
    return EXIT_OK


def cmd_coeff(args, out) -> int:
    h = parse_hat(args.expression)
    truncation = args.truncation or default_truncation()
    whitelist = tuple(args.whitelist) if args.whitelist else DEFAULT_WHITELIST
    clusters = clusterBadDenominators(h, whitelist)
    cancelled = cancelBadClusters(clusters, truncation, whitelist)
    res = cauchyCoeff(cancelled.expr)
    out.write(format_expr(res.expr) + "\n")
    if res.valid_from:
        out.write(f"valid for N >= {res.valid_from}\n")
    for o in cancelled.outcomes:
        d = o.describe()
        out.write(f"cluster {', '.join(d['factors'])}: {d['outcome']} (truncation {d['truncation']})\n")
    series = h.series(args.check)
    ev = Evaluator()
    bad = [n for n in range(res.valid_from, args.check + 1) if ev.value(res.expr, n) != series[n]]
    if bad:
        out.write(f"series check FAILED at N = {bad}\n")
        return EXIT_INVARIANT
    out.write(f"series check passed for N = {res.valid_from}..{args.check}\n")
    return EXIT_CLASS if cancelled.bad_sums_survive else EXIT_OK


def _initial_pairs(items, lo: int, n_min: int) -> dict:
    """Initial values from n=v[,v..] items or JSON lists starting at n_min."""
    out = {}
    for item in items or []:
        if item.lstrip().startswith("["):
            try:
                values = json.loads(item)
            except json.JSONDecodeError as exc:
                raise ProblemFileError(f"bad initial value list {item!r}: {exc}") from None
            for n, v in enumerate(values, n_min):
                orders = v if isinstance(v, list) else [v]
                out[n] = EpsLaurent(lo, [_number(str(w)) for w in orders])
            continue
        if "=" not in item:
            raise ProblemFileError(f"initial values look like n=v, n=v0,v1,... or a JSON list; got {item!r}")
        n, vals = item.split("=", 1)
        out[int(n)] = EpsLaurent(lo, [_number(v) for v in vals.split(",")])
    return out


def _split_top(text: str) -> list:
    """Split at commas outside brackets."""
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return [q.strip() for q in parts]


def parse_recurrence(text: str) -> tuple[list, str | None]:
    """Read "{c_0(N), ..., c_m(N)} . I = rhs" into coefficient strings and the rhs text."""
    lhs, eq, rhs = text.partition("=")
    lhs = lhs.strip()
    if not lhs.startswith("{") or "}" not in lhs:
        raise ProblemFileError(f"expected {{c_0, ..., c_m}} . I = rhs; got {text!r}")
    body, _, tail = lhs[1:].rpartition("}")
    if tail.strip().replace(" ", "") not in (".I", "I", ""):
        raise ProblemFileError(f"unexpected text after the coefficient list: {tail.strip()!r}")
    rhs = rhs.strip() if eq else ""
    return _split_top(body), (rhs if rhs and rhs != "0" else None)


def cmd_recsolve(args, out) -> int:
    texts = list(args.coeff or [])
    rhs_texts = list(args.rhs or [])
    if args.equation:
        if texts:
            raise ProblemFileError("give the recurrence either as text or with --coeff, not both")
        texts, rhs_text = parse_recurrence(args.equation)
        if rhs_text is not None:
            rhs_texts.insert(0, rhs_text)
    coeffs = [parse_ratfun(c, "N") for c in texts]
    if len(coeffs) < 2:
        raise ProblemFileError("a recurrence needs at least two coefficients")
    lo, top = args.window
    rhs = EpsLaurent(args.rhs_lo, [parse_expr(t) for t in rhs_texts]) if rhs_texts else None
    rec = ScalarRec(coeffs, n_min=args.n_min)
    initial = _initial_pairs(args.initial, lo, args.n_min)
    sol = epsSolve(rec, rhs, initial, (lo, top), quadratic=args.quadratic, n_min=args.n_min)
    for j in range(lo, top + 1):
        e = sol.order(j)
        start = sol.starts[j - lo]
        prefix = f"eps^{j}: " if (lo, top) != (0, 0) else ""
        suffix = f"  (N >= {start})" if start > args.n_min else ""
        out.write(f"{prefix}{format_expr(e)}{suffix}\n")
    residual = eps_residual(rec, sol, rhs, max(sol.starts), CHECK_POINTS)
    if any(v for row in residual for v in row):
        out.write("substitution check FAILED\n")
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_check(args, out) -> int:
    p, _ = load_problem(args.problem, {"series_order": args.order})
    try:
        doc = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFileError(f"cannot read {args.report}: {exc}") from None
    docs = [doc["reports"][k] for k in sorted(doc["reports"])] if "reports" in doc else [doc]
    code = EXIT_OK
    for d in docs:
        try:
            report = SolutionReport.from_dict(d)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProblemFileError(f"malformed report: {exc}") from None
        result = verify_report(p, report, args.order)
        verdict = "passed" if result["passed"] else "FAILED"
        out.write(f"tactic {report.tactic}: series check to order {result['order']} {verdict}\n")
        for name, j, n in result["mismatches"]:
            out.write(f"  {name}, eps^{j}, N={n}: value differs from the series\n")
        if not result["passed"]:
            code = EXIT_INVARIANT
    return code


# -- entry point ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coupledsolve", description="Exact solver for coupled linear ODE systems "
                                     "with power-series unknowns.")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run tactic 1, tactic 2 or both")
    s.add_argument("problem")
    s.add_argument("--tactic", choices=["1", "2", "both"])
    s.add_argument("--series-check", type=int, metavar="ORDER", help="series residual check order")
    s.add_argument("--truncation", type=int, help="truncation order for the cluster test")
    s.add_argument("--quadratic", action="store_true", help="allow quadratic extensions for roots")
    s.add_argument("--no-gcd", action="store_true", help="skip the gcd order reduction")
    s.add_argument("--timing", action="store_true", help="include wall times in the outputs")
    s.add_argument("-o", "--output", help="report document path ('-' for stdout; default PROBLEM.report.json)")
    s.set_defaults(func=cmd_solve)

    u = sub.add_parser("uncouple", help="print scalar operators and complement rules")
    u.add_argument("problem")
    u.add_argument("--kind", choices=["derivative", "shift"], default="derivative")
    u.set_defaults(func=cmd_uncouple)

    c = sub.add_parser("coeff", help="N-th coefficient of q(x) * GF[g] expressions")
    c.add_argument("expression")
    c.add_argument("--truncation", type=int)
    c.add_argument("--whitelist", nargs="*")
    c.add_argument("--check", type=int, default=25, metavar="ORDER")
    c.set_defaults(func=cmd_coeff)

    r = sub.add_parser("recsolve", help="solve sum_k c_k(N) I(N+k) = rhs")
    r.add_argument("equation", nargs="?", help='recurrence text "{c_0(N), ..., c_m(N)} . I = rhs"')
    r.add_argument("--coeff", action="append", help="c_0, c_1, ... in order (repeat); alternative to the text")
    r.add_argument("--rhs", action="append", help="rhs in the sum grammar, one per eps order (repeat)")
    r.add_argument("--rhs-lo", type=int, default=0)
    r.add_argument("--initial", action="append", help="n=v, n=v_lo,...,v_top per eps order, or a JSON list of values from --n-min on")
    r.add_argument("--window", type=int, nargs=2, default=(0, 0), metavar=("LO", "TOP"))
    r.add_argument("--n-min", type=int, default=0)
    r.add_argument("--quadratic", action="store_true")
    r.set_defaults(func=cmd_recsolve)

    k = sub.add_parser("check", help="check a report against the series of the system")
    k.add_argument("problem")
    k.add_argument("report")
    k.add_argument("--order", type=int, default=DEFAULT_SERIES_ORDER)
    k.set_defaults(func=cmd_check)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except (ParseError, InsufficientInitialValues, DegenerateSystem) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OutsideClass, IrreducibleDegreeTooHigh) as exc:
        print(f"outside the solution class: {exc}", file=sys.stderr)
        return EXIT_CLASS
    except (InvariantViolation, MismatchDetected) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except CoupledSolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
