"""Exact matrices over the rationals and prime fields.

A thin layer over sympy's ``DomainMatrix``: constructors that accept plain
Python numbers and ``"a/b"`` strings, and the block operations that bundles
need (direct sums, Kronecker products) with zero-sized blocks handled.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from sympy import GF, QQ
from sympy.polys.matrices import DomainMatrix

Matrix = DomainMatrix


def field(q: int | None = None):
    """``QQ`` for ``None``, otherwise the prime field ``GF(q)``."""
    if q is None:
        return QQ
    if q < 2 or any(q % d == 0 for d in range(2, int(q ** 0.5) + 1)):
        raise ValueError(f"GF({q}) is not a prime field")
    return GF(q)


def field_name(K) -> str:
    return "QQ" if K == QQ else f"GF({K.characteristic()})"


def scalar(x, K):
    """Convert an int, Fraction or ``"a/b"`` string to an element of ``K``."""
    if isinstance(x, str):
        x = Fraction(x.strip())
    if isinstance(x, Fraction):
        if K == QQ:
            return QQ(x.numerator, x.denominator)
        return K(x.numerator) / K(x.denominator)
    return K(int(x)) if K != QQ else QQ(int(x))


def matrix(rows: Sequence[Sequence], K, shape: tuple[int, int] | None = None) -> Matrix:
    rows = [list(r) for r in rows]
    if shape is None:
        shape = (len(rows), len(rows[0]) if rows else 0)
    if shape[0] == 0:
        return DomainMatrix([], (0, shape[1]), K)
    return DomainMatrix([[scalar(x, K) for x in r] for r in rows], shape, K)


def zeros(m: int, n: int, K) -> Matrix:
    return DomainMatrix.zeros((m, n), K).to_dense()


def eye(n: int, K) -> Matrix:
    return DomainMatrix.eye(n, K).to_dense()


def equal(a: Matrix, b: Matrix) -> bool:
    """Entrywise equality (``==`` on ``DomainMatrix`` also compares the storage format)."""
    return a.shape == b.shape and a.domain == b.domain and entries(a) == entries(b)


def entries(a: Matrix) -> list[list]:
    return a.to_list() if a.shape[0] else []


def block_diag(blocks: Sequence[Matrix], K) -> Matrix:
    m = sum(b.shape[0] for b in blocks)
    n = sum(b.shape[1] for b in blocks)
    rows = [[K.zero] * n for _ in range(m)]
    r0 = c0 = 0
    for b in blocks:
        for i, row in enumerate(entries(b)):
            rows[r0 + i][c0:c0 + b.shape[1]] = row
        r0 += b.shape[0]
        c0 += b.shape[1]
    return DomainMatrix(rows, (m, n), K) if m else DomainMatrix([], (0, n), K)


def hstack(blocks: Sequence[Matrix], K, rows: int) -> Matrix:
    n = sum(b.shape[1] for b in blocks)
    out = [[] for _ in range(rows)]
    for b in blocks:
        for i, row in enumerate(entries(b)):
            out[i].extend(row)
    return DomainMatrix(out, (rows, n), K) if rows else DomainMatrix([], (0, n), K)


def vstack(blocks: Sequence[Matrix], K, cols: int) -> Matrix:
    out = [row for b in blocks for row in entries(b)]
    return DomainMatrix(out, (len(out), cols), K) if out else DomainMatrix([], (0, cols), K)


def kron(a: Matrix, b: Matrix, K) -> Matrix:
    (m, n), (p, q) = a.shape, b.shape
    ea, eb = entries(a), entries(b)
    rows = [[ea[i][j] * eb[k][l] for j in range(n) for l in range(q)] for i in range(m) for k in range(p)]
    return DomainMatrix(rows, (m * p, n * q), K) if rows else DomainMatrix([], (0, n * q), K)


def is_invertible(a: Matrix) -> bool:
    m, n = a.shape
    return m == n and (m == 0 or a.rank() == m)


def inverse(a: Matrix) -> Matrix:
    if a.shape == (0, 0):
        return a
    return a.inv()


def selection(n: int, picks: Iterable[tuple[int, int]], m: int, K) -> Matrix:
    """The ``n x m`` 0/1 matrix with ones at ``picks``."""
    rows = [[K.zero] * m for _ in range(n)]
    for i, j in picks:
        rows[i][j] = K.one
    return DomainMatrix(rows, (n, m), K) if n else DomainMatrix([], (0, m), K)


def format_entry(x, K) -> str:
    if K == QQ:
        f = Fraction(int(x.numerator), int(x.denominator))
        return str(f)
    return str(int(x) % K.characteristic())
