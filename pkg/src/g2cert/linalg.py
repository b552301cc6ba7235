"""Exact linear algebra over rational-function fields.

``bareiss_inverse`` clears row denominators and runs fraction-free
Gauss-Jordan elimination on the polynomial matrix, cancelling the row
content after every step so all divisions are exact polynomial divisions.  ``row_reduce``
is plain Gauss-Jordan elimination on canonical :class:`RationalExpr` entries
(each step is gcd-normalized by the kernel).
"""
from __future__ import annotations

from .symcore import Context, RationalExpr
from .symcore.core import _from_pair


class SingularMatrix(ArithmeticError):
    pass


def _poly_rows(ctx: Context, rows):
    ring = ctx.ring
    out, mults = [], []
    for row in rows:
        lcm = ring.one
        for e in row:
            if e.den != 1:
                lcm = lcm.lcm(e.den)
        lcm = lcm.monic() if lcm != 1 else lcm
        out.append([e.num * lcm.exquo(e.den) if e.den != 1 else e.num * lcm for e in row])
        mults.append(lcm)
    return out, mults


def _row_content(row, ring):
    g = ring.zero
    for e in row:
        if e:
            g = e if not g else g.gcd(e)
            if g == 1:
                break
    return g


def bareiss_inverse(ctx: Context, rows) -> list[list[RationalExpr]]:
    """Inverse of a square matrix of expressions, via fraction-free elimination.

    Each elimination step is cross-multiplication followed by removal of the
    row content (gcd of its entries).  Pivots are chosen over all remaining
    rows and columns, sparsest entry first, which keeps the nearly triangular
    Jacobians of the catalog charts from filling in.
    """
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    a, mults = _poly_rows(ctx, rows)
    ring = ctx.ring
    m = [a[i] + [ring.one if j == i else ring.zero for j in range(n)] for i in range(n)]
    free_cols = list(range(n))
    used_rows: list[int] = []
    pivot_row = {}
    for _ in range(n):
        cands = [(len(m[r][c]), r, c) for r in range(n) if r not in used_rows for c in free_cols if m[r][c]]
        if not cands:
            raise SingularMatrix(f"matrix is singular (rank {len(used_rows)})")
        _, k, col = min(cands)
        free_cols.remove(col)
        used_rows.append(k)
        pivot_row[col] = k
        pk, row_k = m[k][col], m[k]
        for i in range(n):
            mik = m[i][col]
            if i == k or not mik:
                continue
            g = pk.gcd(mik)
            a_, b_ = pk.exquo(g), mik.exquo(g)
            row_i = [a_ * x - b_ * y if y else a_ * x for x, y in zip(m[i], row_k)]
            row_i[col] = ring.zero
            c = _row_content(row_i, ring)
            if c != 1 and c:
                row_i = [x.exquo(c) if x else x for x in row_i]
            m[i] = row_i
    # row pivot_row[c] reads  d_c * e_c | d_c * (row c of the inverse of the row-scaled matrix)
    inv = [None] * n
    for col, k in pivot_row.items():
        inv[col] = [_from_pair(ctx, m[k][n + j] * mults[j], m[k][col]) for j in range(n)]
    return inv


def determinant(ctx: Context, rows) -> RationalExpr:
    n = len(rows)
    a, mults = _poly_rows(ctx, rows)
    ring = ctx.ring
    m = [list(r) for r in a]
    prev = ring.one
    sign = 1
    for k in range(n - 1):
        cands = [r for r in range(k, n) if m[r][k]]
        if not cands:
            return ctx.zero
        piv = min(cands, key=lambda r: (len(m[r][k]), r))
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                v = m[k][k] * m[i][j] - m[i][k] * m[k][j]
                m[i][j] = v.exquo(prev) if prev != 1 and v else v
            m[i][k] = ring.zero
        prev = m[k][k]
    d = m[n - 1][n - 1]
    den = ring.one
    for mu in mults:
        den *= mu
    return _from_pair(ctx, d * sign, den)


def row_reduce(rows, pivot_order=None):
    """Reduced row echelon form of a list of expression rows.

    Returns ``(rref_rows, pivot_columns)``; rows are lists of expressions of
    one context.  ``pivot_order`` optionally gives the column preference.
    """
    rows = [list(r) for r in rows]
    if not rows:
        return [], []
    ncols = len(rows[0])
    order = list(pivot_order) if pivot_order is not None else list(range(ncols))
    pivots = []
    r = 0
    for c in order:
        cand = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if cand is None:
            continue
        rows[r], rows[cand] = rows[cand], rows[r]
        inv = rows[r][c].inverse()
        rows[r] = [e * inv if e else e for e in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y if y else x for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(rows) -> int:
    return len(row_reduce(rows)[1])
