"""Zero sets of entire expressions with multiplicities.

Two routes:

* :func:`zero_divisor` -- exact.  Only for expressions of the form
  P(z)*exp(Q(z)); multiplicities come from the square-free decomposition of P
  over Q(i) and locations from the Aberth iteration with disjoint inclusion
  discs.
* :func:`numeric_zero_divisor` -- for mixed exponential sums.  The number of
  zeros in the disc is fixed by the argument principle; zeros are located by
  Newton from a grid of starts and each multiplicity is the winding number on
  a small isolating circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import EntireExpr
from .poly import certified_roots, square_free_decomposition

BOUNDARY_TOL = 1e-9


class IdenticallyZero(ValueError):
    pass


class UnsupportedZeroSet(ValueError):
    pass


class ZeroOnBoundary(ValueError):
    pass


class ZeroFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Zero:
    location: complex
    multiplicity: int
    certified_radius: float
    exact: bool = True


@dataclass(frozen=True)
class ZeroDivisor:
    zeros: tuple[Zero, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.zeros)

    def __iter__(self):
        return iter(self.zeros)

    def total_multiplicity(self) -> int:
        return sum(z.multiplicity for z in self.zeros)

    def locations(self) -> np.ndarray:
        return np.array([z.location for z in self.zeros], dtype=complex)

    def multiplicities(self) -> np.ndarray:
        return np.array([z.multiplicity for z in self.zeros], dtype=int)


def polynomial_zeros(e: EntireExpr) -> list[Zero]:
    """All zeros over C of a single-direction expression P*exp(Q)."""
    if e.is_zero():
        raise IdenticallyZero("expression is identically zero")
    sd = e.single_direction()
    if sd is None:
        raise UnsupportedZeroSet(
            "zero sets of sums with several exponential directions are not exact")
    _, p = sd
    out = []
    for factor, mult in square_free_decomposition(p):
        for enc in certified_roots(factor):
            out.append(Zero(enc.location, mult, enc.radius, True))
    # roots of distinct square-free factors are distinct; keep discs disjoint
    for i in range(len(out)):
        for j in range(i + 1, len(out)):
            if abs(out[i].location - out[j].location) <= out[i].certified_radius + out[j].certified_radius:
                raise ZeroFindingError("inclusion discs of distinct factors overlap")
    out.sort(key=lambda z: (abs(z.location), math.atan2(z.location.imag, z.location.real)))
    return out


def zero_divisor(e: EntireExpr, radius: float) -> ZeroDivisor:
    """Zeros of ``e`` in the open disc |z| < radius with exact multiplicities."""
    zs = polynomial_zeros(e)
    return _restrict(zs, radius)


def _restrict(zs, radius: float) -> ZeroDivisor:
    inside = []
    for z in zs:
        d = abs(z.location)
        tol = max(BOUNDARY_TOL, z.certified_radius) if z.exact else BOUNDARY_TOL
        if abs(d - radius) <= tol:
            raise ZeroOnBoundary(f"zero at {z.location} lies on |z| = {radius}")
        if d < radius:
            inside.append(z)
    return ZeroDivisor(tuple(inside))


def zeros_in_disc(e: EntireExpr, radius: float) -> ZeroDivisor:
    """Exact route when available, numeric route for mixed sums."""
    if e.is_zero():
        raise IdenticallyZero("expression is identically zero")
    if e.single_direction() is not None:
        return zero_divisor(e, radius)
    return numeric_zero_divisor(e, radius)


# -- numeric route ---------------------------------------------------------------

def _log_derivative(e: EntireExpr, de: EntireExpr, z: np.ndarray) -> np.ndarray:
    m0, s0 = e.evaluate_scaled(z)
    m1, s1 = de.evaluate_scaled(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (m1 / m0) * np.exp(s1 - s0)


def winding_number(e: EntireExpr, center: complex, radius: float,
                   de: EntireExpr | None = None, nodes: int = 256,
                   max_nodes: int = 1 << 16) -> int:
    """Number of zeros (with multiplicity) inside |z - center| < radius.

    Trapezoidal rule for (1/2 pi i) \\oint e'/e dz, doubled until two
    successive estimates agree and round to the same integer.
    """
    if de is None:
        de = e.derivative()
    prev = None
    n = nodes
    while n <= max_nodes:
        th = 2 * np.pi * np.arange(n) / n
        w = np.exp(1j * th)
        z = center + radius * w
        ld = _log_derivative(e, de, z)
        if not np.all(np.isfinite(ld)):
            raise ZeroOnBoundary(f"zero on the circle |z-{center}| = {radius}")
        val = np.mean(ld * radius * w)  # (1/2 pi i) * sum f'/f dz
        k = round(val.real)
        if prev is not None and abs(val - prev) < 1e-6 and abs(val - k) < 1e-3:
            return int(k)
        prev = val
        n *= 2
    raise ZeroFindingError(f"argument principle did not converge on |z-{center}|={radius}")


def _newton(e: EntireExpr, de: EntireExpr, z: np.ndarray, iters: int = 60):
    for _ in range(iters):
        m0, s0 = e.evaluate_scaled(z)
        m1, s1 = de.evaluate_scaled(z)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            step = (m0 / m1) * np.exp(s0 - s1)
        step = np.where(np.isfinite(step), step, 0)
        # damp wild steps so iterates stay near the region of interest
        big = np.abs(step) > 2.0
        step = np.where(big, 2.0 * step / np.abs(np.where(big, step, 1)), step)
        z = z - step
        if np.all(np.abs(step) < 1e-14 * np.maximum(1, np.abs(z))):
            break
    return z


def numeric_zero_divisor(e: EntireExpr, radius: float, spacing: float = 0.5,
                         max_refinements: int = 4) -> ZeroDivisor:
    """Zeros of an arbitrary EntireExpr in |z| < radius (numeric route).

    Completeness is checked against the argument-principle count on the
    boundary circle; multiplicities are winding numbers on isolating circles
    and are reported with ``exact=False``.
    """
    if e.is_zero():
        raise IdenticallyZero("expression is identically zero")
    de = e.derivative()
    total = winding_number(e, 0j, radius, de)
    if total == 0:
        return ZeroDivisor(())
    found: list[complex] = []
    h = spacing
    for _ in range(max_refinements + 1):
        g = np.arange(-radius, radius + h, h) + 0.37 * h
        X, Y = np.meshgrid(g, g)
        starts = (X + 1j * Y).ravel()
        starts = starts[np.abs(starts) < radius * 1.05]
        roots = _newton(e, de, starts)
        ok = np.isfinite(roots) & (np.abs(roots) < radius * 1.02)
        m0, s0 = e.evaluate_scaled(roots[ok])
        m1, s1 = de.evaluate_scaled(roots[ok])
        # accept points where the Newton step has collapsed
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            step = np.abs(m0 / m1 * np.exp(s0 - s1))
        cand = roots[ok][np.isfinite(step) & (step < 1e-8 * np.maximum(1, np.abs(roots[ok])))]
        found = _dedupe(list(found) + list(cand))
        zs = _isolate(e, de, found, radius)
        if sum(z.multiplicity for z in zs if abs(z.location) < radius) == total:
            return _restrict(zs, radius)
        h /= 2
    raise ZeroFindingError(f"located {len(found)} candidate zeros, expected {total}")


def _dedupe(points: list[complex], tol: float = 1e-6) -> list[complex]:
    out: list[complex] = []
    for p in sorted(points, key=lambda c: (c.real, c.imag)):
        if all(abs(p - q) > tol * max(1.0, abs(p)) for q in out):
            out.append(complex(p))
    return out


def _isolate(e: EntireExpr, de: EntireExpr, pts: list[complex], radius: float) -> list[Zero]:
    zs = []
    for i, p in enumerate(pts):
        others = [abs(p - q) for j, q in enumerate(pts) if j != i]
        rho = min([0.1] + [0.4 * d for d in others])
        try:
            k = winding_number(e, p, rho, de, nodes=64)
        except ZeroOnBoundary:
            k = winding_number(e, p, 0.7 * rho, de, nodes=64)
            rho *= 0.7
        if k > 0:
            zs.append(Zero(_centroid(e, de, p, rho, k), k, rho, False))
    zs.sort(key=lambda z: (abs(z.location), math.atan2(z.location.imag, z.location.real)))
    return zs


def _centroid(e: EntireExpr, de: EntireExpr, center: complex, rho: float,
              k: int, nodes: int = 128) -> complex:
    """Mean of the k zeros inside the circle: (1/2 pi i k) \oint z e'/e dz.

    Accurate for multiple zeros, where Newton only reaches ~sqrt(eps).
    """
    w = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    z = center + rho * w
    s1 = np.mean(_log_derivative(e, de, z) * (z - center) * rho * w)
    return complex(center + s1 / k)
