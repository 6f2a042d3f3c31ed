"""Exact rank and determinant over Q(i) by fraction-free (Bareiss) elimination.

Rows are scaled to Gaussian integers first; all intermediate quantities are
then Gaussian integers stored as ``(re, im)`` pairs of Python ints, and every
Bareiss division is exact.
"""

from __future__ import annotations

from math import lcm
from typing import Sequence

from .gaussian import GaussianRational

GInt = tuple[int, int]


def _gmul(a: GInt, b: GInt) -> GInt:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _gsub(a: GInt, b: GInt) -> GInt:
    return (a[0] - b[0], a[1] - b[1])


def _gdiv_exact(a: GInt, b: GInt) -> GInt:
    n = b[0] * b[0] + b[1] * b[1]
    re = a[0] * b[0] + a[1] * b[1]
    im = a[1] * b[0] - a[0] * b[1]
    if re % n or im % n:
        raise ArithmeticError("inexact Gaussian-integer division in Bareiss step")
    return (re // n, im // n)


def integer_rows(rows: Sequence[Sequence[GaussianRational]]) -> list[list[GInt]]:
    out = []
    for row in rows:
        row = [GaussianRational.coerce(x) for x in row]
        den = 1
        for x in row:
            den = lcm(den, x.re.denominator, x.im.denominator)
        out.append([(int(x.re * den), int(x.im * den)) for x in row])
    return out


def _bareiss(m: list[list[GInt]]) -> tuple[int, GInt, int]:
    """Return (rank, last pivot, row-swap parity) of an integer matrix."""
    m = [list(r) for r in m]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    prev: GInt = (1, 0)
    rank = 0
    swaps = 0
    col = 0
    while rank < nrows and col < ncols:
        piv = next((i for i in range(rank, nrows) if m[i][col] != (0, 0)), None)
        if piv is None:
            col += 1
            continue
        if piv != rank:
            m[rank], m[piv] = m[piv], m[rank]
            swaps += 1
        p = m[rank][col]
        for i in range(rank + 1, nrows):
            mi = m[i][col]
            for j in range(col + 1, ncols):
                m[i][j] = _gdiv_exact(_gsub(_gmul(p, m[i][j]), _gmul(mi, m[rank][j])), prev)
            m[i][col] = (0, 0)
        prev = p
        rank += 1
        col += 1
    return rank, prev, swaps


def rank(rows: Sequence[Sequence]) -> int:
    if not rows:
        return 0
    return _bareiss(integer_rows(rows))[0]


def det(rows: Sequence[Sequence]) -> GaussianRational:
    """Exact determinant of a square matrix over Q(i)."""
    n = len(rows)
    if n == 0:
        return GaussianRational(1)
    if any(len(r) != n for r in rows):
        raise ValueError("det of a non-square matrix")
    scale = GaussianRational(1)
    grs = [[GaussianRational.coerce(x) for x in r] for r in rows]
    for row in grs:
        den = 1
        for x in row:
            den = lcm(den, x.re.denominator, x.im.denominator)
        scale = scale / den
    r, last, swaps = _bareiss(integer_rows(grs))
    if r < n:
        return GaussianRational(0)
    val = GaussianRational(last[0], last[1]) * scale
    return -val if swaps % 2 else val
