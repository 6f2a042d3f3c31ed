"""Wronskian and logarithmic Wronskian determinants along X = a d/dz.

On both model surfaces the vector field is d/dz (a = 1), so the rows of the
Wronskian matrix are plain iterated derivatives.  Determinants are expanded
symbolically (Laplace expansion with memoized minors), which keeps every
identity exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import linalg
from .expr import EntireExpr
from .gaussian import GaussianRational
from .zeros import IdenticallyZero, winding_number

MAX_ORDER = 6  # n <= 5


class IdenticallyZeroComponent(ValueError):
    pass


@dataclass(frozen=True)
class VectorField:
    a: EntireExpr = EntireExpr.const(1)

    def apply(self, e: EntireExpr) -> EntireExpr:
        d = e.derivative()
        return d if self.a == EntireExpr.const(1) else self.a * d

    def iterate(self, e: EntireExpr, k: int) -> EntireExpr:
        for _ in range(k):
            e = self.apply(e)
        return e


D_DZ = VectorField()


def wronskian_matrix(fs: Sequence[EntireExpr], X: VectorField = D_DZ) -> list[list[EntireExpr]]:
    rows = [list(fs)]
    for _ in range(1, len(fs)):
        rows.append([X.apply(e) for e in rows[-1]])
    return rows


def symbolic_det(m: Sequence[Sequence[EntireExpr]]) -> EntireExpr:
    """Laplace expansion along rows with minors memoized by column set."""
    k = len(m)
    if k == 0:
        return EntireExpr.const(1)

    @lru_cache(maxsize=None)
    def minor(row: int, cols: tuple[int, ...]) -> EntireExpr:
        if row == k - 1:
            return m[row][cols[0]]
        out = EntireExpr()
        for pos, c in enumerate(cols):
            entry = m[row][c]
            if entry.is_zero():
                continue
            rest = cols[:pos] + cols[pos + 1:]
            term = entry * minor(row + 1, rest)
            out = out - term if pos % 2 else out + term
        return out

    return minor(0, tuple(range(k)))


def wronskian(fs: Sequence[EntireExpr], X: VectorField = D_DZ) -> EntireExpr:
    if len(fs) > MAX_ORDER:
        raise ValueError(f"Wronskians are limited to at most {MAX_ORDER} functions")
    return symbolic_det(wronskian_matrix(fs, X))


@dataclass(frozen=True)
class MeromorphicPair:
    numerator: EntireExpr
    denominator: EntireExpr

    def evaluate(self, z):
        m1, s1 = self.numerator.evaluate_scaled(z)
        m0, s0 = self.denominator.evaluate_scaled(z)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = (m1 / m0) * np.exp(s1 - s0)
        return complex(out) if np.ndim(out) == 0 else out

    def __call__(self, z):
        return self.evaluate(z)

    def log_abs(self, z):
        return self.numerator.log_abs(z) - self.denominator.log_abs(z)


def product(fs: Sequence[EntireExpr]) -> EntireExpr:
    out = EntireExpr.const(1)
    for f in fs:
        out = out * f
    return out


def log_wronskian(fs: Sequence[EntireExpr], X: VectorField = D_DZ) -> MeromorphicPair:
    """Delta_X(f_0..f_n) = W_X(f_0..f_n) / prod f_j."""
    if any(f.is_zero() for f in fs):
        raise IdenticallyZeroComponent("log-Wronskian of an identically zero function")
    return MeromorphicPair(wronskian(fs, X), product(fs))


# -- vanishing orders ---------------------------------------------------------------

def _as_rational_point(a) -> GaussianRational | None:
    if isinstance(a, GaussianRational):
        return a
    if isinstance(a, (int, Fraction)):
        return GaussianRational(a)
    return None


def _ord_exact(e: EntireExpr, a: GaussianRational, limit: int = 200) -> int:
    for k in range(limit):
        if not e.vanishes_at(a):
            return k
        e = e.derivative()
    raise ArithmeticError("vanishing order exceeds search limit")


def ord_at(e: EntireExpr | MeromorphicPair, a, radius: float = 1e-3) -> int:
    """Vanishing order at ``a`` (negative at poles of a meromorphic pair).

    Exact when ``a`` is a Gaussian rational: the value of sum P_i e^{Q_i} at an
    algebraic point is zero iff the coefficients of each distinct exponent
    value Q_i(a) cancel (Lindemann-Weierstrass).  Otherwise the order is the
    winding number on a small circle around ``a`` (numeric).
    """
    if isinstance(e, MeromorphicPair):
        return ord_at(e.numerator, a, radius) - ord_at(e.denominator, a, radius)
    if e.is_zero():
        raise IdenticallyZero("order of an identically zero function")
    ra = _as_rational_point(a)
    if ra is None:
        c = complex(a)
        if c.real.is_integer() and c.imag.is_integer():
            ra = GaussianRational(int(c.real), int(c.imag))
    if ra is not None:
        return _ord_exact(e, ra)
    return winding_number(e, complex(a), radius)


def is_linearly_nondegenerate(fs: Sequence[EntireExpr], X: VectorField = D_DZ) -> bool:
    return not wronskian(fs, X).is_zero()


def collocation_rank(fs: Sequence[EntireExpr], points: Sequence[GaussianRational]) -> int:
    """Rank of [f_i(p_k)] using exact values grouped by exponent value.

    A function that is a sum of distinct exponentials is treated through the
    Lindemann-Weierstrass grouping: each distinct exponent value contributes an
    independent coordinate, so the matrix has one column per (point, exponent
    value) pair and exact rational entries.
    """
    keys: list = []
    rows = []
    per = [[f.exponent_groups(p) for p in points] for f in fs]
    for k, p in enumerate(points):
        for f_groups in per:
            for ev in f_groups[k]:
                if (k, ev) not in keys:
                    keys.append((k, ev))
    for f_groups in per:
        row = []
        for (k, ev) in keys:
            row.append(f_groups[k].get(ev, GaussianRational(0)))
        rows.append(row)
    if not keys:
        return 0
    return linalg.rank(rows)


# -- truncated divisor inequality ------------------------------------------------

@dataclass(frozen=True)
class DivisorCheckRow:
    point: complex
    lhs: Fraction          # sum_j gamma_j (ord_a(H_j o f) - n)^+
    ord_w: int
    exact: bool

    @property
    def ok(self) -> bool:
        return self.lhs <= self.ord_w


def _order_near(div, a: complex, tol: float) -> tuple[int, bool]:
    for z in div:
        if abs(z.location - a) <= max(tol, z.certified_radius):
            return z.multiplicity, z.exact
    return 0, True


def divisor_inequality(f, F, W, radius: float, tol: float = 1e-6) -> list[DivisorCheckRow]:
    """Evaluate sum_j gamma_j (ord_a(H_j o f) - n)^+ <= ord_a W_X(f) at every
    point of D(radius) where either side can be non-zero.

    Both sides vanish away from zeros of W and of the H_j o f, so the union of
    those zero sets is checked.  Orders are exact integers (square-free
    decomposition, or winding numbers for mixed exponential sums).
    """
    from .curves import compose
    from .zeros import zeros_in_disc

    w = wronskian(list(f.components))
    if w.is_zero():
        raise IdenticallyZero("curve is linearly degenerate")
    wdiv = zeros_in_disc(w, radius)
    hdivs = [zeros_in_disc(compose(H, f), radius) for H in F.hyperplanes]
    points: list[complex] = []
    for div in [wdiv, *hdivs]:
        for z in div:
            if all(abs(z.location - p) > tol for p in points):
                points.append(z.location)
    rows = []
    for a in points:
        lhs = Fraction(0)
        exact = True
        for g, div in zip(W.gamma_j, hdivs):
            k, ex = _order_near(div, a, tol)
            exact &= ex
            lhs += g * max(k - F.n, 0)
        ow, ex = _order_near(wdiv, a, tol)
        rows.append(DivisorCheckRow(a, lhs, ow, exact and ex))
    return rows
