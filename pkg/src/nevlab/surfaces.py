"""Model surfaces (flat plane and Poincare disc) and the Jacobi comparison ODE.

Conventions.  Kernels and measures are for the generator Delta_S / 2.  The
conformal density ``g`` is the one used in the Nevanlinna formulas
(g = 1 on C, g = 2/(1-|z|^2)^2 on D); the Riemannian line element is
ds^2 = lam2 |dz|^2 with lam2 = 1 on C and lam2 = 4/(1-|z|^2)^2 on D, which is
the normalization with curvature -1 and geodesic radius log((1+|z|)/(1-|z|)).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit


class OutsideDomain(ValueError):
    pass


class OutsideBall(ValueError):
    pass


class AtPole(ValueError):
    pass


PLANE = "plane"
DISC = "disc"


@dataclass(frozen=True)
class ModelSurface:
    kind: str

    def __post_init__(self):
        if self.kind not in (PLANE, DISC):
            raise ValueError(f"unknown surface {self.kind!r}; use 'plane' or 'disc'")

    @property
    def is_disc(self) -> bool:
        return self.kind == DISC

    @property
    def curvature(self) -> float:
        return -1.0 if self.is_disc else 0.0

    def kappa(self) -> KappaProfile:
        return KappaProfile.constant(self.curvature)

    def _check(self, z):
        if self.is_disc and np.any(np.abs(z) >= 1):
            raise OutsideDomain("point outside the unit disc")

    def g(self, z):
        z = np.asarray(z, dtype=complex)
        if not self.is_disc:
            return np.ones(z.shape)
        self._check(z)
        return 2.0 / (1.0 - np.abs(z) ** 2) ** 2

    def lam2(self, z):
        """Riemannian conformal factor: ds^2 = lam2 |dz|^2."""
        z = np.asarray(z, dtype=complex)
        if not self.is_disc:
            return np.ones(z.shape)
        self._check(z)
        return 4.0 / (1.0 - np.abs(z) ** 2) ** 2

    def sigma(self, z):
        """Diffusion coefficient of Delta_S/2 BM in the conformal coordinate."""
        return 1.0 / np.sqrt(self.lam2(z))

    def geodesic_radius(self, z):
        a = np.abs(np.asarray(z, dtype=complex))
        if not self.is_disc:
            return float(a) if a.ndim == 0 else a
        self._check(a)
        out = np.log((1 + a) / (1 - a))
        return float(out) if out.ndim == 0 else out

    def euclidean_radius(self, r):
        """|z| on the geodesic circle of radius r about 0."""
        if r < 0:
            raise ValueError("radius must be non-negative")
        return math.tanh(r / 2) if self.is_disc else float(r)

    def volume_density_polar(self, rho):
        """dV = density(rho) d rho d theta in geodesic polar coordinates."""
        rho = np.asarray(rho, dtype=float)
        return np.sinh(rho) if self.is_disc else rho

    def green_kernel(self, r: float, z) -> float:
        """g_r(0, z) for Delta_S/2 with Dirichlet data on the geodesic circle."""
        rho = self.geodesic_radius(z)
        if rho == 0:
            raise AtPole("Green kernel evaluated at its pole")
        if rho >= r:
            raise OutsideBall(f"point at radius {rho} is not inside D({r})")
        return self.green_radial(r, rho)

    def green_radial(self, r: float, rho):
        rho = np.asarray(rho, dtype=float)
        if self.is_disc:
            out = np.log(math.tanh(r / 2) / np.tanh(rho / 2)) / math.pi
        else:
            out = np.log(r / rho) / math.pi
        return float(out) if out.ndim == 0 else out

    def harmonic_measure_density(self, r: float) -> Callable[[np.ndarray], np.ndarray]:
        """Angular density of the exit law from the center (uniform)."""
        if r <= 0:
            raise ValueError("radius must be positive")
        return lambda theta: np.full(np.shape(theta), 1.0 / (2 * math.pi))

    def laplacian(self, u_zzbar: Callable, z):
        """Delta_S u = 4 u_{z zbar} / lam2."""
        return 4.0 * u_zzbar(z) / self.lam2(z)


EUCLIDEAN_PLANE = ModelSurface(PLANE)
POINCARE_DISC = ModelSurface(DISC)


def surface(name: str) -> ModelSurface:
    return ModelSurface(name)


def curvature_from_density(S: ModelSurface, z: complex, dps: int = 40) -> float:
    """K = -(1/g) d^2 log g / dz dzbar = -(1/4g) Lap(log g), by high-precision
    finite differences."""
    import mpmath as mp

    with mp.workdps(dps):
        x0, y0 = mp.mpf(z.real), mp.mpf(z.imag)

        def logg(x, y):
            if not S.is_disc:
                return mp.mpf(0)
            return mp.log(2 / (1 - x * x - y * y) ** 2)

        lap = mp.diff(logg, (x0, y0), (2, 0)) + mp.diff(logg, (x0, y0), (0, 2))
        g = 1 if not S.is_disc else 2 / (1 - x0 * x0 - y0 * y0) ** 2
        return float(-lap / (4 * g))


# -- curvature profiles and the Jacobi equation --------------------------------

@dataclass(frozen=True)
class KappaProfile:
    """kappa(t): constant or piecewise linear through knots (t_i, k_i),
    extended constantly past the last knot."""

    knots: tuple[tuple[float, float], ...]

    @classmethod
    def constant(cls, c: float) -> KappaProfile:
        return cls(((0.0, float(c)),))

    @classmethod
    def piecewise(cls, knots: Sequence[Sequence[float]]) -> KappaProfile:
        ks = tuple((float(t), float(k)) for t, k in knots)
        if not ks:
            raise ValueError("empty kappa profile")
        if ks[0][0] != 0.0:
            ks = ((0.0, ks[0][1]),) + ks
        return cls(ks)

    @property
    def is_constant(self) -> bool:
        return len({k for _, k in self.knots}) == 1

    def violations(self) -> list[str]:
        out = []
        ts = [t for t, _ in self.knots]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            out.append("knots must be strictly increasing in t")
        ks = [k for _, k in self.knots]
        if any(k > 0 for k in ks):
            out.append("kappa must be non-positive")
        if any(b > a for a, b in zip(ks, ks[1:])):
            out.append("kappa must be non-increasing")
        return out

    def admissible(self) -> bool:
        return not self.violations()

    def __call__(self, t):
        ts = np.array([p[0] for p in self.knots])
        ks = np.array([p[1] for p in self.knots])
        return np.interp(t, ts, ks)

    def to_json(self) -> dict:
        if self.is_constant:
            return {"constant": self.knots[0][1]}
        return {"piecewise": [list(p) for p in self.knots]}

    @classmethod
    def from_json(cls, obj) -> KappaProfile:
        if isinstance(obj, str):
            obj = json.loads(obj)
        if "constant" in obj:
            return cls.constant(obj["constant"])
        if "piecewise" in obj:
            return cls.piecewise(obj["piecewise"])
        raise ValueError("kappa profile needs 'constant' or 'piecewise'")


@njit(cache=True)
def _kappa_at(t, kt, kv):
    if t <= kt[0]:
        return kv[0]
    n = kt.shape[0]
    if t >= kt[n - 1]:
        return kv[n - 1]
    i = np.searchsorted(kt, t) - 1
    w = (t - kt[i]) / (kt[i + 1] - kt[i])
    return kv[i] + w * (kv[i + 1] - kv[i])


@njit(cache=True)
def _rk4_jacobi(t, kt, kv):
    G = np.empty_like(t)
    P = np.empty_like(t)
    y = 0.0
    p = 1.0
    G[0] = y
    P[0] = p
    for i in range(t.shape[0] - 1):
        h = t[i + 1] - t[i]
        k0 = _kappa_at(t[i], kt, kv)
        km = _kappa_at(t[i] + h / 2, kt, kv)
        k1 = _kappa_at(t[i] + h, kt, kv)
        a1, b1 = p, -k0 * y
        a2, b2 = p + h / 2 * b1, -km * (y + h / 2 * a1)
        a3, b3 = p + h / 2 * b2, -km * (y + h / 2 * a2)
        a4, b4 = p + h * b3, -k1 * (y + h * a3)
        y += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        p += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        G[i + 1] = y
        P[i + 1] = p
    return G, P


@dataclass(frozen=True)
class JacobiSolution:
    grid: np.ndarray
    G: np.ndarray
    Gprime: np.ndarray


def solve_jacobi(k: KappaProfile, r_max: float, step: float = 1e-4) -> JacobiSolution:
    """Classical RK4 for G'' + kappa G = 0, G(0) = 0, G'(0) = 1.

    Steps are aligned with the knots of a piecewise profile so that kappa is
    smooth on every step.
    """
    if step <= 0 or r_max <= 0:
        raise ValueError("step and r_max must be positive")
    breaks = sorted({0.0, r_max, *(t for t, _ in k.knots if 0 < t < r_max)})
    ts = [0.0]
    for a, b in zip(breaks, breaks[1:]):
        m = max(1, math.ceil((b - a) / step - 1e-9))
        ts.extend(a + (b - a) * np.arange(1, m + 1) / m)
    t = np.array(ts)
    kt = np.array([p[0] for p in k.knots])
    kv = np.array([p[1] for p in k.knots])
    G, P = _rk4_jacobi(t, kt, kv)
    return JacobiSolution(t, G, P)


@dataclass
class JacobiReport:
    lower: float        # max of r - G(r)
    integral: float     # max of int_1^r dt/G - log r
    upper: float        # max of G(r) - r exp(r sqrt(-kappa(r)))
    tol: float

    @property
    def violations(self) -> int:
        return sum(v > self.tol for v in (self.lower, self.integral, self.upper))

    @property
    def ok(self) -> bool:
        return self.violations == 0


def check_jacobi_bounds(sol: JacobiSolution, k: KappaProfile, rtol: float = 1e-9) -> JacobiReport:
    """G(r) >= r, int_1^r dt/G <= log r (r >= 1), G(r) <= r e^{r sqrt(-kappa(r))}.

    The first bound is an equality when kappa = 0, hence the relative
    tolerance ``rtol`` on all three comparisons.
    """
    t, G = sol.grid, sol.G
    scale = np.maximum(1.0, np.abs(t))
    lower = float(np.max((t - G) / scale))
    upper_rhs = t * np.exp(t * np.sqrt(-np.minimum(k(t), 0.0)))
    upper = float(np.max((G - upper_rhs) / np.maximum(1.0, upper_rhs)))
    m = t >= 1.0
    integral = -math.inf
    if m.sum() >= 2:
        tt, gg = t[m], G[m]
        inv = 1.0 / gg
        h = np.diff(tt)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * h)])
        # Euler-Maclaurin end correction removes the O(h^2) trapezoid bias
        d = -sol.Gprime[m] / gg ** 2
        cum = cum - h[0] ** 2 / 12 * (d - d[0])
        if tt[0] > 1.0:
            cum = cum + (tt[0] - 1.0) / gg[0]
        integral = float(np.max(cum - np.log(tt)))
    return JacobiReport(lower, integral, upper, rtol)
