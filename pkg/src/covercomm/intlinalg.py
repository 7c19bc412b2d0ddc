"""Exact integer and rational linear algebra on small dense matrices.

Matrices are tuples of row tuples.  Everything is exact: integers or
:class:`fractions.Fraction`.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Sequence


def mat_mul(a, b):
    cols = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def mat_vec(a, v):
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def identity(n: int):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def transpose(a):
    return tuple(zip(*a))


def det(a) -> Fraction:
    """Determinant by fraction-valued Gaussian elimination."""
    n = len(a)
    m = [[Fraction(x) for x in row] for row in a]
    out = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            out = -out
        out *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                for k in range(c, n):
                    m[r][k] -= f * m[c][k]
    return out


def inverse(a):
    """Rational inverse; raises ZeroDivisionError for singular input."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        m[c], m[p] = m[p], m[c]
        piv = m[c][c]
        m[c] = [x / piv for x in m[c]]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return tuple(tuple(row[n:]) for row in m)


def is_integral(a) -> bool:
    return all(Fraction(x).denominator == 1 for row in a for x in row)


def to_int(a):
    return tuple(tuple(int(x) for x in row) for row in a)


def charpoly(a) -> list:
    """Coefficients of det(xI - a), leading coefficient first (Faddeev-LeVerrier)."""
    n = len(a)
    coeffs = [Fraction(1)]
    m = identity(n)
    for k in range(1, n + 1):
        am = mat_mul(a, m)
        c = -Fraction(sum(am[i][i] for i in range(n)), k)
        coeffs.append(c)
        m = tuple(tuple(am[i][j] + (c if i == j else 0) for j in range(n)) for i in range(n))
    return [int(c) for c in coeffs]


def _poly_divmod(num: list, den: list):
    num = list(num)
    q = []
    while len(num) >= len(den):
        f = Fraction(num[0], den[0])
        q.append(f)
        for i in range(len(den)):
            num[i] -= f * den[i]
        num.pop(0)
    return q, num


def cyclotomic(n: int) -> list:
    """Coefficients of the n-th cyclotomic polynomial, leading first."""
    poly = [1] + [0] * (n - 1) + [-1]
    for d in range(1, n):
        if n % d == 0:
            poly, _ = _poly_divmod(poly, cyclotomic(d))
    return [int(c) for c in poly]


def _totient(n: int) -> int:
    return sum(1 for k in range(1, n + 1) if gcd(k, n) == 1)


def cyclotomic_exponent(poly: list):
    """If ``poly`` is a product of cyclotomic polynomials, the lcm of their indices; else None."""
    deg = len(poly) - 1
    candidates = [n for n in range(1, 4 * deg * deg + 3) if _totient(n) <= deg]
    rest = list(poly)
    found = []
    progress = True
    while len(rest) > 1 and progress:
        progress = False
        for n in candidates:
            q, r = _poly_divmod(rest, cyclotomic(n))
            if all(x == 0 for x in r):
                rest = [int(x) for x in q]
                found.append(n)
                progress = True
                break
    if len(rest) != 1:
        return None
    return reduce(lambda x, y: x * y // gcd(x, y), found, 1)


def mat_pow(a, k: int):
    out = identity(len(a))
    base = a
    while k:
        if k & 1:
            out = mat_mul(out, base)
        base = mat_mul(base, base)
        k >>= 1
    return out


def hnf_rows(vectors: Sequence[Sequence[int]], n: int) -> list:
    """Row Hermite normal form of the lattice spanned by integer ``vectors``.

    Returns the non-zero rows: pivots strictly move right, are positive, and
    entries above each pivot are reduced into ``[0, pivot)``.
    """
    rows = [list(v) for v in vectors if any(v)]
    out = []
    col = 0
    while rows and col < n:
        nz = [r for r in rows if r[col] != 0]
        if not nz:
            col += 1
            continue
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            p = nz[0]
            for r in nz[1:]:
                q = r[col] // p[col]
                for k in range(n):
                    r[k] -= q * p[k]
            nz = [r for r in nz if r[col] != 0]
        p = nz[0]
        if p[col] < 0:
            p[:] = [-x for x in p]
        rows = [r for r in rows if r is not p and any(r)]
        out.append(p)
        col += 1
    for i, p in enumerate(out):
        c = next(k for k in range(n) if p[k])
        for r in out[:i]:
            q = r[c] // p[c]
            if q:
                for k in range(n):
                    r[k] -= q * p[k]
    return [tuple(r) for r in out]


def integer_kernel(a, n: int) -> list:
    """Basis of ``{v in Z^n : a v = 0}`` for an integer matrix with ``n`` columns."""
    m = len(a)
    # column operations on [a; I] tracked through the transpose
    rows = [list(col) + [int(i == j) for j in range(n)] for i, col in enumerate(transpose(a) if m else [()] * n)]
    h = hnf_rows(rows, m + n)
    return [tuple(r[m:]) for r in h if not any(r[:m])]


def lcm_denominator(vectors) -> int:
    return reduce(lambda x, y: x * y // gcd(x, y), (Fraction(x).denominator for v in vectors for x in v), 1)
