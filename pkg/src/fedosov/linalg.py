"""Small exact rational matrices.

Matrices are tuples of row tuples of ``mpq`` so they hash and compare exactly.
Inverse, determinant and nullspace are delegated to sympy.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import sympy
from gmpy2 import mpq

from .errors import StructuralError
from .scalar import rational

Matrix = tuple[tuple[mpq, ...], ...]


def matrix(rows) -> Matrix:
    out = tuple(tuple(rational(v) for v in row) for row in rows)
    if out and any(len(r) != len(out[0]) for r in out):
        raise StructuralError("ragged matrix")
    return out


def identity(n: int) -> Matrix:
    return tuple(tuple(mpq(int(i == j)) for j in range(n)) for i in range(n))


def shape(m: Matrix) -> tuple[int, int]:
    return (len(m), len(m[0]) if m else 0)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if shape(a)[1] != shape(b)[0]:
        raise StructuralError(f"cannot multiply {shape(a)} by {shape(b)}")
    cols = list(zip(*b))
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), mpq(0)) for col in cols) for row in a)


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def scale(a: Matrix, c) -> Matrix:
    c = rational(c)
    return tuple(tuple(c * v for v in row) for row in a)


def sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(r, s)) for r, s in zip(a, b))


def mat_vec(a: Matrix, v) -> tuple[mpq, ...]:
    return tuple(sum((x * y for x, y in zip(row, v)), mpq(0)) for row in a)


def _to_sympy(a: Matrix) -> sympy.Matrix:
    return sympy.Matrix(
        [[sympy.Rational(int(v.numerator), int(v.denominator)) for v in row] for row in a]
    )


def _from_sympy(m: sympy.Matrix) -> Matrix:
    return tuple(
        tuple(mpq(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])) for v in m.row(i))
        for i in range(m.rows)
    )


@lru_cache(maxsize=4096)
def det(a: Matrix) -> mpq:
    if not a:
        return mpq(1)
    d = _to_sympy(a).det()
    num, den = sympy.fraction(d)
    return mpq(int(num), int(den))


@lru_cache(maxsize=1024)
def inverse(a: Matrix) -> Matrix:
    n, m = shape(a)
    if n != m:
        raise StructuralError(f"non-square matrix {shape(a)} has no inverse")
    if det(a) == 0:
        raise StructuralError("singular matrix")
    return _from_sympy(_to_sympy(a).inv())


def nullspace(a: Matrix, ncols: int | None = None) -> list[tuple[mpq, ...]]:
    """Basis of {v : a v = 0}. ``ncols`` is needed when ``a`` has no rows."""
    if not a:
        return [tuple(mpq(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    return [tuple(_from_sympy(v.T)[0]) for v in _to_sympy(a).nullspace()]


def rank(a: Matrix) -> int:
    if not a:
        return 0
    return _to_sympy(a).rank()


@lru_cache(maxsize=64)
def standard_symplectic(dim: int) -> Matrix:
    """omega_{j,n+j} = 1, omega_{n+j,j} = -1."""
    if dim % 2 or dim <= 0:
        raise StructuralError(f"symplectic dimension must be even and positive, got {dim}")
    n = dim // 2
    rows = [[0] * dim for _ in range(dim)]
    for j in range(n):
        rows[j][n + j] = 1
        rows[n + j][j] = -1
    return matrix(rows)


def is_symplectic(g: Matrix) -> bool:
    w = standard_symplectic(len(g))
    return matmul(matmul(transpose(g), w), g) == w


@lru_cache(maxsize=65536)
def exterior_power_row(a: Matrix, rows: tuple[int, ...]) -> tuple[tuple[tuple[int, ...], mpq], ...]:
    """Nonzero minors det(a[rows, cols]) over increasing column tuples.

    This is the image of dx_{rows[0]} ^ ... ^ dx_{rows[-1]} when every dx_j is
    replaced by sum_k a[j][k] dx_k.
    """
    n = shape(a)[1]
    out = []
    for cols in combinations(range(n), len(rows)):
        d = det(tuple(tuple(a[r][c] for c in cols) for r in rows))
        if d:
            out.append((cols, d))
    return tuple(out)


def format_matrix(a: Matrix) -> list[list[str]]:
    return [[str(v) for v in row] for row in a]
