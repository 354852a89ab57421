"""Scalar Ore operators, coupled systems, first-order reduction, and uncoupling.

Two operator kinds are supported: the derivative D in x and the shift
N -> N+1 in N.  Symbolic right-hand sides and expression rules are
:class:`LinearForm` objects: finite sums  c(var) * sigma^k(name).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra.linalg import det, identity, inverse, row_reduce, solve
from .algebra.poly import Poly, RatFun, poly_lcm, to_ratfun
from .errors import DegenerateSystem, InvariantViolation, PivotFailure

DERIVATIVE = "derivative"
SHIFT = "shift"


def _zero(var: str) -> RatFun:
    return RatFun.const(0, var)


def _one(var: str) -> RatFun:
    return RatFun.const(1, var)


# -- linear forms ---------------------------------------------------------------


class LinearForm:
    """sum c_{name,k}(var) * sigma^k(name); sigma is D or the forward shift."""

    __slots__ = ("terms", "var")

    def __init__(self, terms=None, var: str = "x"):
        self.var = var
        clean = {}
        for key, c in (terms or {}).items():
            c = to_ratfun(c, var)
            if c:
                clean[key] = c
        self.terms = clean

    @classmethod
    def symbol(cls, name: str, k: int = 0, var: str = "x", coeff=1) -> "LinearForm":
        return cls({(name, k): coeff}, var)

    def __bool__(self):
        return bool(self.terms)

    def names(self) -> set:
        return {n for n, _ in self.terms}

    def __add__(self, other: "LinearForm") -> "LinearForm":
        terms = dict(self.terms)
        for key, c in other.terms.items():
            prev = terms.get(key)
            terms[key] = c if prev is None else prev + c
        return LinearForm(terms, self.var)

    def __neg__(self):
        return LinearForm({k: -c for k, c in self.terms.items()}, self.var)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return self + (-other)

    def scale(self, c) -> "LinearForm":
        c = to_ratfun(c, self.var)
        if not c:
            return LinearForm({}, self.var)
        return LinearForm({k: v * c for k, v in self.terms.items()}, self.var)

    def sigma(self, kind: str, times: int = 1) -> "LinearForm":
        """Apply D (times >= 0) or the shift by times (any sign)."""
        if times == 0:
            return self
        if kind == SHIFT:
            return LinearForm({(n, k + times): c.shift(times) for (n, k), c in self.terms.items()}, self.var)
        if times < 0:
            raise ValueError("negative derivative order")
        out = self
        for _ in range(times):
            terms: dict = {}
            for (n, k), c in out.terms.items():
                for key, v in (((n, k), c.derivative()), ((n, k + 1), c)):
                    if v:
                        prev = terms.get(key)
                        terms[key] = v if prev is None else prev + v
            out = LinearForm(terms, self.var)
        return out

    def substitute(self, mapping: dict, kind: str) -> "LinearForm":
        """Replace names by forms (sigma^k of a name becomes sigma^k of its form)."""
        out = LinearForm({}, self.var)
        for (n, k), c in self.terms.items():
            if n in mapping:
                out = out + mapping[n].sigma(kind, k).scale(c)
            else:
                out = out + LinearForm({(n, k): c}, self.var)
        return out

    def restrict(self, names) -> "LinearForm":
        names = set(names)
        return LinearForm({key: c for key, c in self.terms.items() if key[0] in names}, self.var)

    def map_coeffs(self, f, var: str | None = None) -> "LinearForm":
        return LinearForm({k: f(c) for k, c in self.terms.items()}, var or self.var)

    def __eq__(self, other):
        return isinstance(other, LinearForm) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0], kv[0][1]))

    def to_str(self, kind: str) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (n, k), c in self.sorted_terms():
            if kind == SHIFT:
                atom = f"{n}({self.var}{'+' if k > 0 else ''}{k if k else ''})" if k else f"{n}({self.var})"
            else:
                atom = f"D^{k}[{n}]" if k > 1 else (f"D[{n}]" if k == 1 else n)
            if c == 1:
                parts.append(atom)
            elif c == -1:
                parts.append("-" + atom)
            else:
                parts.append(f"({c})*{atom}")
        out = parts[0]
        for p in parts[1:]:
            out += p if p.startswith("-") else "+" + p
        return out

    def __repr__(self):
        return f"LinearForm({self.to_str(SHIFT if self.var == 'N' else DERIVATIVE)})"


def zero_form(var: str) -> LinearForm:
    return LinearForm({}, var)


# -- scalar operators --------------------------------------------------------------


@dataclass
class OreOp:
    """sum_i coeffs[i] * sigma^i with RatFun coefficients; coeffs[-1] != 0."""

    kind: str
    var: str
    coeffs: list

    def __post_init__(self):
        self.coeffs = [to_ratfun(c, self.var) for c in self.coeffs]
        while len(self.coeffs) > 1 and not self.coeffs[-1]:
            self.coeffs.pop()

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def clear_denominators(self) -> "OreOp":
        """Multiply by the lcm of denominators so every coefficient is a polynomial."""
        den = Poly.const(1, self.var)
        for c in self.coeffs:
            den = poly_lcm(den, c.den)
        d = RatFun(den, reduced=True)
        return OreOp(self.kind, self.var, [c * d for c in self.coeffs])

    def poly_coeffs(self) -> list:
        op = self.clear_denominators()
        return [c.num for c in op.coeffs]

    def apply_form(self, form: LinearForm) -> LinearForm:
        out = zero_form(self.var)
        for i, c in enumerate(self.coeffs):
            if c:
                out = out + form.sigma(self.kind, i).scale(c)
        return out

    def __str__(self):
        sym = "S" if self.kind == SHIFT else "D"
        parts = [f"({c})*{sym}^{i}" for i, c in enumerate(self.coeffs) if c]
        return " + ".join(parts) or "0"


# -- coupled systems ------------------------------------------------------------------


@dataclass
class CoupledSystem:
    """sum_{i=0}^{m} A_i sigma^i I = rhs, for unknown names and rhs forms.

    First-order explicit systems sigma I = A I + b are stored with
    matrices [-A, Id]; use :meth:`first_order` to build them.
    """

    kind: str
    var: str
    matrices: list
    rhs: list
    names: list = field(default_factory=list)

    def __post_init__(self):
        r = len(self.rhs)
        self.matrices = [[[to_ratfun(c, self.var) for c in row] for row in m] for m in self.matrices]
        if not self.names:
            self.names = [f"I{i + 1}" for i in range(r)]
        for m in self.matrices:
            if len(m) != r or any(len(row) != r for row in m):
                raise ValueError("matrix dimensions do not match the rhs length")
        if len(self.names) != r:
            raise ValueError("one name per unknown is required")

    @classmethod
    def first_order(cls, kind: str, a, rhs, names=None, var: str | None = None) -> "CoupledSystem":
        var = var or ("N" if kind == SHIFT else "x")
        r = len(a)
        minus_a = [[-to_ratfun(c, var) for c in row] for row in a]
        ident = identity(r, _one(var), _zero(var))
        return cls(kind, var, [minus_a, ident], list(rhs), list(names or []))

    @property
    def dim(self) -> int:
        return len(self.rhs)

    @property
    def order(self) -> int:
        return len(self.matrices) - 1

    def explicit(self):
        """(A, b) with sigma I = A I + b for a first-order system."""
        if self.order != 1:
            raise ValueError("explicit form needs a first-order system")
        a1, a0 = self.matrices[1], self.matrices[0]
        inv = inverse(a1)
        a = [[-sum((inv[i][k] * a0[k][j] for k in range(self.dim)), _zero(self.var)) for j in range(self.dim)]
             for i in range(self.dim)]
        b = [sum((self.rhs[k].scale(inv[i][k]) for k in range(self.dim) if inv[i][k]), zero_form(self.var))
             for i in range(self.dim)]
        return a, b

    def residual_forms(self) -> list:
        """Row forms sum_j sum_i A_i[r][j] sigma^i(name_j) - rhs_r."""
        rows = []
        for r in range(self.dim):
            form = zero_form(self.var)
            for i, m in enumerate(self.matrices):
                for j in range(self.dim):
                    if m[r][j]:
                        form = form + LinearForm.symbol(self.names[j], i, self.var, m[r][j])
            rows.append(form - self.rhs[r])
        return rows


# -- first-order reduction of shift systems -------------------------------------------------


@dataclass
class FirstOrderResult:
    """The reduced system, original unknowns in terms of states (back_map),
    and states in terms of original unknowns (forward)."""

    system: CoupledSystem
    back_map: dict
    forward: dict = field(default_factory=dict)


def toFirstOrder(sys: CoupledSystem, max_rounds: int | None = None) -> FirstOrderResult:
    """Reduce a higher-order shift system to y(N+1) = A y(N) + b.

    State y_{j,t} stands for I_j(N+t), 0 <= t < n_j.  Unknowns that never
    appear shifted are eliminated algebraically.  Singular leading matrices are
    handled by combining rows and shifting the combination forward.
    """
    if sys.kind != SHIFT:
        raise ValueError("toFirstOrder works on shift systems")
    var = sys.var
    r = sys.dim
    if sys.order == 1 and sys.matrices[1] == identity(r, _one(var), _zero(var)):
        same = {n: LinearForm.symbol(n, 0, var) for n in sys.names}
        return FirstOrderResult(sys, same, dict(same))
    rows = []
    for i in range(r):
        coeffs = {}
        for t, m in enumerate(sys.matrices):
            for j in range(r):
                if m[i][j]:
                    coeffs[(j, t)] = m[i][j]
        rows.append((coeffs, sys.rhs[i]))
    rows = [_normalize_row(c, b) for c, b in rows]
    limit = max_rounds or 4 * r * (sys.order + 2) + 8
    for _ in range(limit):
        n = _max_shifts(rows, r)
        lead = [[c.get((j, n[j]), _zero(var)) if n[j] >= 0 else _zero(var) for j in range(r)] for c, _ in rows]
        if any(nj < 0 for nj in n):
            raise DegenerateSystem("some unknown does not occur in the system")
        left_null = _left_null_vector(lead)
        if left_null is None:
            break
        pick = max((i for i in range(r) if left_null[i]), key=lambda i: (max(t for (_, t) in rows[i][0]), -i))
        comb_c, comb_b = {}, zero_form(var)
        for i in range(r):
            if not left_null[i]:
                continue
            c_i, b_i = rows[i]
            for key, v in c_i.items():
                prev = comb_c.get(key)
                comb_c[key] = v * left_null[i] if prev is None else prev + v * left_null[i]
            comb_b = comb_b + b_i.scale(left_null[i])
        comb_c = {k: v for k, v in comb_c.items() if v}
        if not comb_c:
            raise DegenerateSystem("the equations are linearly dependent" if not comb_b else "inconsistent system")
        rows[pick] = _shift_row(comb_c, comb_b, 1)
    else:
        raise DegenerateSystem("leading matrix stays singular after row elimination")
    n = _max_shifts(rows, r)
    lead = [[c.get((j, n[j]), _zero(var)) for j in range(r)] for c, _ in rows]
    inv = inverse(lead)
    # top_j = sum_i inv[j][i] * (rhs_i - lower_i)
    states = [(j, t) for j in range(r) for t in range(n[j])]
    state_names = [f"y{j + 1}_{t}" for j, t in states]
    index = {s: k for k, s in enumerate(states)}
    tops = []
    for j in range(r):
        vec = {}
        form = zero_form(var)
        for i, (c, b) in enumerate(rows):
            w = inv[j][i]
            if not w:
                continue
            form = form + b.scale(w)
            for (jj, t), v in c.items():
                if t == n[jj]:
                    continue
                vec[(jj, t)] = vec.get((jj, t), _zero(var)) - w * v
        tops.append((vec, form))
    # Unknowns with n_j == 0 are algebraic: substitute their expressions.
    def resolve(vec, form, depth=0):
        if depth > r + 1:
            raise DegenerateSystem("algebraic unknowns depend on each other cyclically")
        out_vec, out_form = {}, form
        for (jj, t), v in vec.items():
            if n[jj] == 0:
                sub_vec, sub_form = resolve(*_shift_top(tops[jj], t), depth + 1)
                out_form = out_form + sub_form.scale(v)
                for key, w in sub_vec.items():
                    out_vec[key] = out_vec.get(key, _zero(var)) + v * w
            else:
                out_vec[(jj, t)] = out_vec.get((jj, t), _zero(var)) + v
        return out_vec, out_form

    dim = len(states)
    a = [[_zero(var)] * dim for _ in range(dim)]
    b = [zero_form(var) for _ in range(dim)]
    for (j, t), k in index.items():
        if t + 1 < n[j]:
            a[k][index[(j, t + 1)]] = _one(var)
        else:
            vec, form = resolve(*tops[j])
            for key, v in vec.items():
                a[k][index[key]] = a[k][index[key]] + v
            b[k] = form
    back = {}
    for j in range(r):
        if n[j] > 0:
            back[sys.names[j]] = LinearForm.symbol(state_names[index[(j, 0)]], 0, var)
        else:
            vec, form = resolve(*tops[j])
            f = form
            for key, v in vec.items():
                f = f + LinearForm.symbol(state_names[index[key]], 0, var, v)
            back[sys.names[j]] = f
    out = CoupledSystem.first_order(SHIFT, a, b, state_names, var)
    forward = {state_names[k]: LinearForm.symbol(sys.names[j], t, var) for (j, t), k in index.items()}
    return FirstOrderResult(out, back, forward)


def _max_shifts(rows, r):
    """Largest shift of each unknown over all rows (-1 if absent)."""
    n = [-1] * r
    for c, _ in rows:
        for j, t in c:
            n[j] = max(n[j], t)
    return n


def _normalize_row(coeffs: dict, rhs: LinearForm):
    low = min(t for (_, t) in coeffs)
    return _shift_row(coeffs, rhs, -low) if low else (coeffs, rhs)


def _shift_row(coeffs: dict, rhs: LinearForm, s: int):
    return {(j, t + s): v.shift(s) for (j, t), v in coeffs.items()}, rhs.sigma(SHIFT, s)


def _shift_top(top, t: int):
    vec, form = top
    if t == 0:
        return vec, form
    return {(j, tt + t): v.shift(t) for (j, tt), v in vec.items()}, form.sigma(SHIFT, t)


def _left_null_vector(m):
    """A nonzero v with v M = 0, or None when M is invertible."""
    r = len(m)
    mt = [[m[i][j] for i in range(r)] for j in range(r)]
    red, pivots = row_reduce(mt)
    if len(pivots) == r:
        return None
    free = next(c for c in range(r) if c not in pivots)
    v = [Fraction(0)] * r
    v[free] = Fraction(1)
    for i, pc in enumerate(pivots):
        if red[i][free]:
            v[pc] = -red[i][free]
    return v


# -- invertibility preprocessing -----------------------------------------------------------------


@dataclass
class RegularizeResult:
    """The invertible system, old unknowns in terms of new ones (output_map),
    and new unknowns in terms of old ones (forward)."""

    system: CoupledSystem
    output_map: dict
    forward: dict = field(default_factory=dict)


def regularize(sys: CoupledSystem) -> RegularizeResult:
    """Turn y(N+1) = A y(N) + b with singular A into an invertible smaller system.

    The output map writes every original unknown as a combination of the new
    unknowns (unshifted) and shifted rhs symbols.
    """
    if sys.kind != SHIFT or sys.order != 1:
        raise ValueError("regularize works on first-order shift systems")
    var = sys.var
    a, b = sys.explicit()
    names = list(sys.names)
    if det(a):
        same = {n: LinearForm.symbol(n, 0, var) for n in names}
        return RegularizeResult(sys, same, dict(same))
    return _regularize(a, b, names, var, 0)


def _regularize(a, b, names, var, depth):
    r = len(a)
    red, pivots, q = row_reduce(a, transform=True)
    q = [[to_ratfun(c, var) for c in row] for row in q]
    rp = len(pivots)
    a1 = red[:rp]
    qb = [sum((b[k].scale(q[i][k]) for k in range(r) if q[i][k]), zero_form(var)) for i in range(r)]
    # P(N) = Q(N-1)^{-1}
    q_prev = [[c.shift(-1) for c in row] for row in q]
    p = inverse(q_prev)
    j2 = [f.sigma(SHIFT, -1) for f in qb[rp:]]
    new_names = [f"z{depth}_{i + 1}" for i in range(rp)]
    a_new = [[sum((a1[i][k] * p[k][j] for k in range(r)), _zero(var)) for j in range(rp)] for i in range(rp)]
    b_new = []
    for i in range(rp):
        f = qb[i]
        for jj in range(r - rp):
            w = sum((a1[i][k] * p[k][rp + jj] for k in range(r)), _zero(var))
            if w:
                f = f + j2[jj].scale(w)
        b_new.append(f)
    back = {}
    for i, n in enumerate(names):
        f = zero_form(var)
        for j in range(rp):
            if p[i][j]:
                f = f + LinearForm.symbol(new_names[j], 0, var, p[i][j])
        for jj in range(r - rp):
            if p[i][rp + jj]:
                f = f + j2[jj].scale(p[i][rp + jj])
        back[n] = f
    # z(N) = (Q(N-1) y(N))_1
    forward = {}
    for i in range(rp):
        f = zero_form(var)
        for k, n in enumerate(names):
            if q_prev[i][k]:
                f = f + LinearForm.symbol(n, 0, var, q_prev[i][k])
        forward[new_names[i]] = f
    if rp == 0:
        return RegularizeResult(CoupledSystem.first_order(SHIFT, [], [], [], var), back, forward)
    if not det(a_new):
        inner = _regularize(a_new, b_new, new_names, var, depth + 1)
        back = {n: f.substitute(inner.output_map, SHIFT) for n, f in back.items()}
        fwd = {n: f.substitute(forward, SHIFT) for n, f in inner.forward.items()}
        return RegularizeResult(inner.system, back, fwd)
    return RegularizeResult(CoupledSystem.first_order(SHIFT, a_new, b_new, new_names, var), back, forward)


# -- uncoupling ---------------------------------------------------------------------------------------


@dataclass
class ScalarEquation:
    """op(name) = rhs, where rhs may mention rhs symbols and earlier solved names."""

    name: str
    op: OreOp
    rhs: LinearForm


@dataclass
class UncoupleResult:
    kind: str
    var: str
    equations: list
    rules: dict
    solved: list
    combination: dict | None = None

    @property
    def orders(self) -> list:
        return [eq.op.order for eq in self.equations]


def _chain_step(u, beta: LinearForm, a, b, kind, var):
    r = len(a)
    if kind == DERIVATIVE:
        base = [c.derivative() for c in u]
        u_next = [base[j] + sum((u[k] * a[k][j] for k in range(r) if u[k] and a[k][j]), _zero(var)) for j in range(r)]
        beta_next = beta.sigma(DERIVATIVE, 1)
        for k in range(r):
            if u[k]:
                beta_next = beta_next + b[k].scale(u[k])
        return u_next, beta_next
    us = [c.shift(1) for c in u]
    u_next = [sum((us[k] * a[k][j] for k in range(r) if us[k] and a[k][j]), _zero(var)) for j in range(r)]
    beta_next = beta.sigma(SHIFT, 1)
    for k in range(r):
        if us[k]:
            beta_next = beta_next + b[k].scale(us[k])
    return u_next, beta_next


def _express(basis, u):
    """Coefficients c with u = sum c_k basis_k, or None."""
    if not basis:
        return None if any(u) else []
    r = len(u)
    mat = [[basis[k][j] for k in range(len(basis))] for j in range(r)]
    return solve(mat, u)


def _chain(start, a, b, kind, var, prior):
    """Grow the chain of start until it depends on prior vectors plus itself."""
    r = len(a)
    vectors, betas = [start], [zero_form(var)]
    while True:
        u, beta = _chain_step(vectors[-1], betas[-1], a, b, kind, var)
        basis = [v for v, _ in prior] + vectors
        coeffs = _express(basis, u)
        if coeffs is not None:
            return vectors, betas, u, beta, coeffs
        vectors.append(u)
        betas.append(beta)
        if len(vectors) + len(prior) > r:
            raise PivotFailure("chain vectors exceed the dimension")


def uncouple(sys: CoupledSystem, seed: int = 20240917, allow_triangular: bool = True) -> UncoupleResult:
    """Uncouple sigma I = A I + b into scalar equations plus expression rules."""
    if sys.order != 1:
        raise ValueError("uncouple needs a first-order system")
    kind, var = sys.kind, sys.var
    a, b = sys.explicit()
    r = sys.dim
    names = sys.names
    one, zero = _one(var), _zero(var)
    units = [[one if i == j else zero for j in range(r)] for i in range(r)]
    # 1. a single unknown with a full-length chain
    for i in range(r):
        vectors, betas, u, beta, coeffs = _chain(units[i], a, b, kind, var, [])
        if len(vectors) == r:
            return _finish(kind, var, names, [(names[i], vectors, betas, u, beta, coeffs)], b, r)
    # 2. invariant blocks, each equation independent of the others
    blocks = _blocks(units, a, b, kind, var, names)
    if all(_is_scalar_block(blk, k, blocks) for k, blk in enumerate(blocks)):
        return _finish(kind, var, names, blocks, b, r)
    # 3. random constant combination as cyclic vector candidate
    rng = random.Random(seed)
    for _ in range(5):
        lam = [Fraction(rng.randint(1, 9)) for _ in range(r)]
        start = [to_ratfun(c, var) for c in lam]
        vectors, betas, u, beta, coeffs = _chain(start, a, b, kind, var, [])
        if len(vectors) == r:
            res = _finish(kind, var, names, [("J", vectors, betas, u, beta, coeffs)], b, r)
            res.combination = {n: lam[k] for k, n in enumerate(names)}
            return res
    if not allow_triangular:
        raise PivotFailure("no cyclic vector and the block structure is not diagonal")
    # 4. triangular blocks: later equations mention earlier unknowns
    return _finish(kind, var, names, blocks, b, r)


def _blocks(units, a, b, kind, var, names):
    r = len(a)
    blocks, prior = [], []
    for i in range(r):
        if _express([v for v, _ in prior], units[i]) is not None:
            continue
        vectors, betas, u, beta, coeffs = _chain(units[i], a, b, kind, var, prior)
        blocks.append((names[i], vectors, betas, u, beta, coeffs))
        prior = prior + list(zip(vectors, betas))
        if len(prior) == r:
            break
    return blocks


def _is_scalar_block(block, k, blocks):
    coeffs = block[5]
    earlier = sum(len(blk[1]) for blk in blocks[:k])
    return all(not c for c in coeffs[:earlier])


def _finish(kind, var, names, blocks, b, r):
    equations = []
    all_vectors, all_exprs = [], []
    for idx, (name, vectors, betas, u, beta, coeffs) in enumerate(blocks):
        d = len(vectors)
        earlier = len(all_vectors)
        # sigma^d name = u.I + beta,  u = sum_{prior} c v + sum_k c_k sigma^k-vectors
        op_coeffs = [-coeffs[earlier + k] for k in range(d)] + [RatFun.const(1, var)]
        rhs = beta
        for k in range(d):
            c = coeffs[earlier + k]
            if c:
                rhs = rhs - betas[k].scale(c)
        for k in range(earlier):
            c = coeffs[k]
            if c:
                rhs = rhs + all_exprs[k].scale(c)
        equations.append(ScalarEquation(name, OreOp(kind, var, op_coeffs), rhs))
        for k in range(d):
            all_vectors.append(vectors[k])
            all_exprs.append(LinearForm.symbol(name, k, var) - betas[k])
    if len(all_vectors) != r:
        raise PivotFailure("chain vectors do not span the system")
    if sum(eq.op.order for eq in equations) > r:
        raise InvariantViolation("scalar orders exceed the system dimension")
    # all_vectors[k] . I = all_exprs[k]  =>  I = U^{-1} exprs
    u_inv = inverse(all_vectors)
    rules = {}
    solved = [eq.name for eq in equations]
    for j, n in enumerate(names):
        if n in solved:
            continue
        f = zero_form(var)
        for k in range(r):
            if u_inv[j][k]:
                f = f + all_exprs[k].scale(u_inv[j][k])
        rules[n] = f
    return UncoupleResult(kind, var, equations, rules, solved)
