"""Small dense matrices of expressions (n <= 4 in practice)."""

from __future__ import annotations

from itertools import permutations
from typing import Sequence

from .expr import ONE, ZERO, Expr

Matrix = list[list[Expr]]


def _sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def det(m: Matrix) -> Expr:
    """Leibniz formula; exact, no pivoting decisions on symbolic entries."""
    n = len(m)
    if n == 0:
        return ONE
    total = ZERO
    for perm in permutations(range(n)):
        term = ONE
        for i, j in enumerate(perm):
            if m[i][j].is_zero:
                term = ZERO
                break
            term = term * m[i][j]
        if term:
            total = total + term if _sign(perm) > 0 else total - term
    return total


def minor(m: Matrix, row: int, col: int) -> Matrix:
    return [[v for j, v in enumerate(r) if j != col] for i, r in enumerate(m) if i != row]


def adjugate(m: Matrix) -> Matrix:
    n = len(m)
    cof = [[(ONE if (i + j) % 2 == 0 else -ONE) * det(minor(m, i, j)) for j in range(n)] for i in range(n)]
    return transpose(cof)


def inverse(m: Matrix) -> tuple[Matrix, Expr]:
    """(adj(m)/det(m), det(m)); raises ZeroDivisionError when det is zero."""
    d = det(m)
    if d.is_zero:
        raise ZeroDivisionError("singular matrix")
    inv_d = d**-1
    return [[v * inv_d for v in row] for row in adjugate(m)], d


def transpose(m: Matrix) -> Matrix:
    return [list(col) for col in zip(*m)] if m else []


def matmul(a: Matrix, b: Matrix) -> Matrix:
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), ZERO) for j in range(len(b[0]))] for i in range(len(a))]


def matvec(a: Matrix, v: Sequence[Expr]) -> list[Expr]:
    return [sum((a[i][k] * v[k] for k in range(len(v))), ZERO) for i in range(len(a))]


def identity(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def replace_row(m: Matrix, i: int, row: Sequence[Expr]) -> Matrix:
    out = [list(r) for r in m]
    out[i] = list(row)
    return out
