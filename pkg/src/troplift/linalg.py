"""Dense exact linear algebra over the rationals (lists of Fractions)."""

from __future__ import annotations

from fractions import Fraction

Matrix = list[list[Fraction]]


def rref(rows: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns; input is not mutated."""
    m = [list(map(Fraction, r)) for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = m[r][c]
        m[r] = [x / inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return [row for row in m if any(x != 0 for x in row)], pivots


def rank(rows: Matrix) -> int:
    return len(rref(rows)[0])


def nullspace(rows: Matrix, ncols: int | None = None) -> Matrix:
    """Canonical basis of the right kernel of the matrix."""
    if not rows:
        if not ncols:
            return []
        return [[Fraction(i == j) for j in range(ncols)] for i in range(ncols)]
    ncols = ncols if ncols is not None else len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        vec = [Fraction(0)] * ncols
        vec[fcol] = Fraction(1)
        for r, pcol in enumerate(pivots):
            vec[pcol] = -red[r][fcol]
        basis.append(vec)
    return basis


def in_row_space(rows: Matrix, vec: list[Fraction]) -> bool:
    base = rank(rows)
    return rank(rows + [list(vec)]) == base


def same_row_space(a: Matrix, b: Matrix) -> bool:
    return rref(a)[0] == rref(b)[0]


def solve(rows: Matrix, rhs: list[Fraction]) -> list[Fraction] | None:
    """One solution of ``rows @ x = rhs`` or None when inconsistent."""
    if not rows:
        return None if any(x != 0 for x in rhs) else []
    ncols = len(rows[0])
    aug = [list(map(Fraction, r)) + [Fraction(v)] for r, v in zip(rows, rhs)]
    red, pivots = rref(aug)
    for row in red:
        if all(x == 0 for x in row[:-1]) and row[-1] != 0:
            return None
    x = [Fraction(0)] * ncols
    for r, pcol in enumerate(pivots):
        if pcol == ncols:
            return None
        x[pcol] = red[r][-1]
    return x
