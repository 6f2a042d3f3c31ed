"""Dense univariate polynomials over Q(i).

Coefficients are stored low degree first as a tuple of
:class:`GaussianRational`; the zero polynomial is the empty tuple.  Besides
exact ring operations this module provides Yun's square-free decomposition
and an Aberth-Ehrlich root finder with a-posteriori inclusion radii.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

import numpy as np

from .gaussian import ONE, ZERO, GaussianRational


def _integer_parts(cs):
    """(real ints, imag ints), d with cs[k] = (re[k] + i im[k]) / d."""
    d = 1
    for c in cs:
        d = lcm(d, c.re.denominator, c.im.denominator)
    re = [c.re.numerator * (d // c.re.denominator) for c in cs]
    im = [c.im.numerator * (d // c.im.denominator) for c in cs]
    return (re, im), d


class Poly:
    __slots__ = ("coeffs", "_numeric", "_hash")

    def __init__(self, coeffs: Iterable = ()):
        cs = [GaussianRational.coerce(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs: tuple[GaussianRational, ...] = tuple(cs)
        self._numeric = None
        self._hash = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def const(cls, c) -> Poly:
        return cls([c])

    @classmethod
    def x(cls) -> Poly:
        return cls([ZERO, ONE])

    # -- basic properties -------------------------------------------------
    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    def lead(self) -> GaussianRational:
        return self.coeffs[-1] if self.coeffs else ZERO

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.coeffs)
        return self._hash

    def __repr__(self):
        return f"Poly({[str(c) for c in self.coeffs]})"

    # -- ring operations --------------------------------------------------
    def __add__(self, other: Poly) -> Poly:
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return Poly(out)

    def __neg__(self) -> Poly:
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other: Poly) -> Poly:
        return self + (-other)

    def __mul__(self, other) -> Poly:
        if not isinstance(other, Poly):
            c = GaussianRational.coerce(other)
            return Poly([c * a for a in self.coeffs])
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly()
        # clear denominators and convolve Gaussian integers; far cheaper than
        # Fraction arithmetic per term
        (ar, ai), da = _integer_parts(a)
        (br, bi), db = _integer_parts(b)
        n = len(a) + len(b) - 1
        re, im = [0] * n, [0] * n
        for i in range(len(a)):
            xr, xi = ar[i], ai[i]
            if not (xr or xi):
                continue
            for j in range(len(b)):
                yr, yi = br[j], bi[j]
                if yr or yi:
                    re[i + j] += xr * yr - xi * yi
                    im[i + j] += xr * yi + xi * yr
        d = da * db
        return Poly([GaussianRational(Fraction(x, d), Fraction(y, d)) for x, y in zip(re, im)])

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Poly:
        result = Poly([ONE])
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def derivative(self) -> Poly:
        return Poly([c * k for k, c in enumerate(self.coeffs) if k > 0])

    def divmod(self, other: Poly) -> tuple[Poly, Poly]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = other.degree
        inv_lead = other.lead().inverse()
        if len(rem) - 1 < dq:
            return Poly(), Poly(rem)
        quot = [ZERO] * (len(rem) - dq)
        for k in range(len(rem) - 1 - dq, -1, -1):
            c = rem[k + dq] * inv_lead
            quot[k] = c
            if c:
                for j, b in enumerate(other.coeffs):
                    rem[k + j] = rem[k + j] - c * b
        return Poly(quot), Poly(rem[:dq])

    def __floordiv__(self, other: Poly) -> Poly:
        return self.divmod(other)[0]

    def __mod__(self, other: Poly) -> Poly:
        return self.divmod(other)[1]

    def monic(self) -> Poly:
        if self.is_zero():
            return self
        inv = self.lead().inverse()
        return Poly([c * inv for c in self.coeffs])

    def compose(self, other: Poly) -> Poly:
        out = Poly()
        for c in reversed(self.coeffs):
            out = out * other + Poly([c])
        return out

    # -- evaluation -------------------------------------------------------
    def __call__(self, x: GaussianRational) -> GaussianRational:
        acc = ZERO
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def numeric_coeffs(self) -> np.ndarray:
        if self._numeric is None:
            self._numeric = np.array([complex(c) for c in self.coeffs],
                                     dtype=complex)
        return self._numeric

    def eval_numeric(self, z):
        """Horner evaluation at complex scalars or arrays."""
        cs = self.numeric_coeffs()
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for c in cs[::-1]:
            acc = acc * z + c
        return acc

    # -- JSON ---------------------------------------------------------------
    def to_json(self) -> list:
        return [c.to_json() for c in self.coeffs]

    @classmethod
    def from_json(cls, obj: Sequence) -> Poly:
        return cls([GaussianRational.from_json(c) for c in obj])


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd by the Euclidean algorithm (exact over Q(i))."""
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def square_free_decomposition(p: Poly) -> list[tuple[Poly, int]]:
    """Yun's algorithm: return [(a_k, k)] with p = lc * prod a_k**k, each a_k
    monic, square-free and pairwise coprime.  Constant factors are dropped."""
    if p.is_zero():
        raise ValueError("square-free decomposition of the zero polynomial")
    if p.degree == 0:
        return []
    dp = p.derivative()
    a0 = poly_gcd(p, dp)
    b = p.monic() // a0
    c = dp.monic() * (dp.lead() / p.lead()) // a0
    d = c - b.derivative()
    out = []
    k = 1
    while not b.is_constant():
        a = poly_gcd(b, d)
        if not a.is_constant():
            out.append((a, k))
        b = b // a
        c = d // a
        d = c - b.derivative()
        k += 1
    return out


@dataclass(frozen=True)
class RootEnclosure:
    location: complex
    radius: float


class RootFindingError(RuntimeError):
    pass


def aberth_roots(p: Poly, maxiter: int = 500, tol: float = 1e-15) -> np.ndarray:
    """Simultaneous Aberth-Ehrlich iteration for all roots of ``p``.

    Intended for square-free input; multiple roots converge only linearly.
    """
    n = p.degree
    if n < 1:
        return np.zeros(0, dtype=complex)
    cs = p.numeric_coeffs()
    if n == 1:
        return np.array([-cs[0] / cs[1]])
    dcs = np.array([k * cs[k] for k in range(1, n + 1)])
    # Fujiwara-type bound for the initial circle
    lead = cs[-1]
    bound = 2 * max(abs(cs[n - k] / lead) ** (1.0 / k) for k in range(1, n + 1))
    bound = max(bound, 1e-8)
    k = np.arange(n)
    z = bound * 0.5 * np.exp(1j * (2 * np.pi * k / n + 0.4))
    for _ in range(maxiter):
        pv = np.polyval(cs[::-1], z)
        dv = np.polyval(dcs[::-1], z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w), w, 0.0)
        z = z - w
        if np.all(np.abs(w) <= tol * np.maximum(1.0, np.abs(z))):
            break
    return z


def inclusion_radii(p: Poly, z: np.ndarray) -> np.ndarray:
    """Weierstrass/Gerschgorin inclusion radii ``n*|W_i|``.

    When the discs D(z_i, r_i) are pairwise disjoint each contains exactly one
    root of ``p``.  A rounding allowance is added to every radius.
    """
    n = p.degree
    cs = p.numeric_coeffs()
    pv = p.eval_numeric(z)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    denom = cs[-1] * np.prod(diff, axis=1)
    w = np.abs(pv / denom)
    # evaluation error bound: eps * sum |c_k| |z|^k, propagated through W
    absz = np.abs(z)
    err = np.zeros_like(absz)
    for c in np.abs(cs)[::-1]:
        err = err * absz + c
    err = 4 * n * np.finfo(float).eps * err / np.abs(denom)
    return n * (w + err) + 4 * np.finfo(float).eps * np.maximum(absz, 1.0)


def certified_roots(p: Poly) -> list[RootEnclosure]:
    """Roots of a square-free polynomial with disjoint inclusion discs."""
    z = aberth_roots(p)
    if len(z) == 0:
        return []
    # Newton polish
    d = p.derivative()
    for _ in range(3):
        dv = d.eval_numeric(z)
        step = np.where(dv != 0, p.eval_numeric(z) / np.where(dv != 0, dv, 1), 0)
        z = z - step
    radii = inclusion_radii(p, z)
    out = [RootEnclosure(complex(a), float(r)) for a, r in zip(z, radii)]
    check_disjoint(out)
    return out


def check_disjoint(encl: Sequence[RootEnclosure]) -> None:
    for i in range(len(encl)):
        for j in range(i + 1, len(encl)):
            if abs(encl[i].location - encl[j].location) <= encl[i].radius + encl[j].radius:
                raise RootFindingError(
                    f"inclusion discs overlap near {encl[i].location:.6g}")
