"""Dense Gaussian elimination over an exact field.

Matrices are lists of rows.  Entries may be Fractions, QuadExt numbers or
RatFun objects; only field operations and truthiness are used.
"""

from __future__ import annotations

from fractions import Fraction

from .poly import size_of

ZERO = Fraction(0)
ONE = Fraction(1)


def identity(n: int, one=ONE, zero=ZERO):
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def zeros(r: int, c: int, zero=ZERO):
    return [[zero] * c for _ in range(r)]


def matmul(a, b):
    inner = len(b)
    cols = len(b[0]) if b else 0
    out = []
    for row in a:
        new = []
        for j in range(cols):
            acc = ZERO
            for k in range(inner):
                if row[k] and b[k][j]:
                    acc = acc + row[k] * b[k][j]
            new.append(acc)
        out.append(new)
    return out


def matvec(a, v):
    out = []
    for row in a:
        acc = ZERO
        for x, y in zip(row, v):
            if x and y:
                acc = acc + x * y
        out.append(acc)
    return out


def transpose(a):
    return [list(col) for col in zip(*a)] if a else []


def _pick_pivot(m, col, start):
    best, best_size = None, None
    for i in range(start, len(m)):
        if m[i][col]:
            s = size_of(m[i][col])
            if best is None or s < best_size:
                best, best_size = i, s
    return best


def row_reduce(m, transform: bool = False):
    """Reduced row echelon form.

    Returns (R, pivots) or (R, pivots, Q) with Q*M == R when transform is set.
    Pivots are chosen by smallest coefficient size, then lowest row index.
    """
    m = [list(r) for r in m]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    q = identity(rows) if transform else None
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = _pick_pivot(m, c, r)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        if q is not None:
            q[r], q[p] = q[p], q[r]
        inv = ONE / m[r][c]
        m[r] = [x * inv if x else x for x in m[r]]
        if q is not None:
            q[r] = [x * inv if x else x for x in q[r]]
        for i in range(rows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y if y else x for x, y in zip(m[i], m[r])]
                if q is not None:
                    q[i] = [x - f * y if y else x for x, y in zip(q[i], q[r])]
        pivots.append(c)
        r += 1
    if transform:
        return m, pivots, q
    return m, pivots


def rank(m) -> int:
    return len(row_reduce(m)[1])


def nullspace(m):
    """Basis of {v : M v = 0}."""
    cols = len(m[0]) if m else 0
    red, pivots = row_reduce(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * cols
        v[f] = ONE
        for i, pc in enumerate(pivots):
            if red[i][f]:
                v[pc] = -red[i][f]
        basis.append(v)
    return basis


def solve(a, b):
    """One solution of A x = b, or None if inconsistent."""
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    cols = len(a[0]) if a else 0
    red, pivots = row_reduce(aug)
    if cols in pivots:
        return None
    x = [ZERO] * cols
    for i, pc in enumerate(pivots):
        x[pc] = red[i][cols]
    return x


def inverse(a):
    n = len(a)
    aug = [list(row) + e for row, e in zip(a, identity(n))]
    red, pivots = row_reduce(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in red]


def det(a):
    m = [list(r) for r in a]
    n = len(m)
    out = ONE
    for c in range(n):
        p = _pick_pivot(m, c, c)
        if p is None:
            return ZERO
        if p != c:
            m[c], m[p] = m[p], m[c]
            out = -out
        out = out * m[c][c]
        inv = ONE / m[c][c]
        for i in range(c + 1, n):
            if m[i][c]:
                f = m[i][c] * inv
                m[i] = [x - f * y if y else x for x, y in zip(m[i], m[c])]
    return out
