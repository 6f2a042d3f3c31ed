"""Nevanlinna functionals on the model surfaces.

All geodesic discs are centered at the base point o.  On the plane the
geodesic circle of radius r about o is |z - o| = r; on the disc it is the
image of |w| = tanh(r/2) under w -> (w + o)/(1 + conj(o) w).  In both cases
the harmonic measure from o is uniform in the angle of w and
pi * g_r(o, a) = log(R / |w(a)|), where R is the Euclidean radius in the w
chart.  Means over circles are periodic trapezoid rules, which converge
geometrically for the real-analytic integrands that occur here.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from .curves import (DimensionMismatch, HolomorphicCurve, Hyperplane, HyperplaneFamily,
                     PositionViolated, check_position, compose)
from .expr import EntireExpr, parse_expr
from .nochka import NochkaWeights, smt_coefficient
from .poly import poly_gcd
from .surfaces import ModelSurface
from .wronskian import log_wronskian, wronskian
from .zeros import (IdenticallyZero, UnsupportedZeroSet, ZeroOnBoundary,
                    zero_divisor, zeros_in_disc)

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-9
PERTURB = 1e-6


class NodeOnSingularity(ValueError):
    pass


class ZeroNearCircle(ValueError):
    pass


class BasePointOnDivisor(ValueError):
    pass


class NonConvergentQuadrature(RuntimeError):
    pass


class Degenerate(ValueError):
    pass


# -- charts ------------------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    """w-coordinate centered at the base point: z = phi(w)."""
    S: ModelSurface
    o: complex = 0j

    def to_z(self, w):
        w = np.asarray(w, dtype=complex)
        if self.S.is_disc:
            return (w + self.o) / (1 + np.conj(self.o) * w)
        return w + self.o

    def to_w(self, z):
        z = np.asarray(z, dtype=complex)
        if self.S.is_disc:
            return (z - self.o) / (1 - np.conj(self.o) * z)
        return z - self.o

    def dz_dw(self, w):
        w = np.asarray(w, dtype=complex)
        if self.S.is_disc:
            return (1 - abs(self.o) ** 2) / (1 + np.conj(self.o) * w) ** 2
        return np.ones_like(w)

    def R(self, r: float) -> float:
        return self.S.euclidean_radius(r)

    def circle(self, r: float, n: int) -> np.ndarray:
        th = 2 * math.pi * np.arange(n) / n
        return self.to_z(self.R(r) * np.exp(1j * th))

    def containing_radius(self, R: float) -> float:
        """Radius of a disc about 0 that contains the chart disc |w| < R."""
        a = abs(self.o)
        if self.S.is_disc:
            return (a + R) / (1 + a * R)
        return a + R


def _chart(f_or_o, S: ModelSurface) -> Chart:
    o = f_or_o.base_point if isinstance(f_or_o, HolomorphicCurve) else complex(f_or_o)
    if S.is_disc and abs(o) >= 1:
        raise ValueError("base point outside the unit disc")
    return Chart(S, complex(o))


def _mean(v: np.ndarray) -> float:
    if not np.all(np.isfinite(v)):
        raise NodeOnSingularity("quadrature node on a zero or pole; perturb the radius")
    return float(np.mean(v))


# -- divisors in chart discs ----------------------------------------------------------

@dataclass(frozen=True)
class ChartDivisor:
    """Zeros of an expression as (|w(a)|, multiplicity, exact) in a chart."""
    radii: np.ndarray
    mults: np.ndarray
    exact: bool
    R_max: float

    def counting(self, R: float, truncation: int | None = None, classical: bool = False) -> float:
        """Kernel-weighted zero count.  A zero at the base point raises unless
        ``classical`` is set, in which case it contributes mult * log R (the
        usual convention for T(r, psi) when psi(o) is 0 or infinite)."""
        if R > self.R_max * (1 + 1e-12):
            raise ValueError("divisor was computed on a smaller disc")
        if np.any(np.abs(self.radii - R) <= BOUNDARY_TOL):
            raise ZeroOnBoundary(f"zero on the circle of Euclidean radius {R}")
        m = self.radii < R
        k = self.mults[m] if truncation is None else np.minimum(self.mults[m], truncation)
        rad = self.radii[m]
        at_o = rad <= 1e-12
        if np.any(at_o) and not classical:
            raise BasePointOnDivisor("zero at the base point")
        return float(np.sum(k[~at_o] * np.log(R / rad[~at_o])) + np.sum(k[at_o]) * math.log(R))

    def near(self, R: float, tol: float = BOUNDARY_TOL) -> bool:
        return bool(np.any(np.abs(self.radii - R) <= tol))


def chart_divisor(e: EntireExpr, chart: Chart, R_max: float, exact_only: bool = False) -> ChartDivisor:
    if e.is_zero():
        raise IdenticallyZero("expression is identically zero")
    big = chart.containing_radius(R_max)
    if chart.S.is_disc:
        big = min(big, 1 - 1e-12)
    for attempt in range(5):
        try:
            div = zero_divisor(e, big) if exact_only else zeros_in_disc(e, big)
            break
        except ZeroOnBoundary:
            big *= 1 + 1e-6
    else:
        raise ZeroOnBoundary("could not find a clean enclosing radius")
    locs = div.locations()
    rad = np.abs(chart.to_w(locs)) if len(locs) else np.zeros(0)
    mult = div.multiplicities() if len(locs) else np.zeros(0, dtype=int)
    keep = rad < R_max * (1 + 1e-9)
    return ChartDivisor(rad[keep], mult[keep], all(z.exact for z in div), R_max)


# -- curves ----------------------------------------------------------------------------

def characteristic(f: HolomorphicCurve, S: ModelSurface, r: float, n_nodes: int = 4096) -> float:
    """T_f(r) = circle mean of log||f|| minus log||f(o)||."""
    ch = _chart(f, S)
    vals = f.norm_log(ch.circle(r, n_nodes))
    return _mean(vals) - float(f.norm_log(ch.o))


def weil_function(f: HolomorphicCurve, H: Hyperplane, z):
    """log(||H|| ||f|| / |H o f|) at z (>= 0)."""
    h = compose(H, f)
    return math.log(H.norm) + f.norm_log(z) - h.log_abs(z)


def proximity(f: HolomorphicCurve, H: Hyperplane, S: ModelSurface, r: float,
              n_nodes: int = 4096, divisor: ChartDivisor | None = None) -> float:
    ch = _chart(f, S)
    R = ch.R(r)
    if divisor is None:
        divisor = chart_divisor(compose(H, f), ch, R * (1 + 1e-6) + 1e-6)
    if divisor.near(R):
        raise ZeroNearCircle(f"H o f has a zero within {BOUNDARY_TOL} of the circle; perturb r")
    return _mean(weil_function(f, H, ch.circle(r, n_nodes)))


def counting(f: HolomorphicCurve, H: Hyperplane, S: ModelSurface, r: float,
             truncation: int | None = None, divisor: ChartDivisor | None = None,
             exact_only: bool = False) -> float:
    """sum over zeros a of H o f in D(r) of min(ord, k) * pi * g_r(o, a).

    ``exact_only`` restricts to single-direction expressions (exact
    multiplicities); otherwise mixed exponential sums are handled by the
    numeric zero finder.
    """
    ch = _chart(f, S)
    R = ch.R(r)
    if divisor is None:
        divisor = chart_divisor(compose(H, f), ch, R, exact_only=exact_only)
    return divisor.counting(R, truncation)


def weil_at_base(f: HolomorphicCurve, H: Hyperplane) -> float:
    h = compose(H, f)
    o = f.base_point
    if h.log_abs(o) == -math.inf:
        raise BasePointOnDivisor("f(o) lies on the hyperplane")
    return float(weil_function(f, H, o))


def clean_radius(r: float, R_of, divisors: Sequence[ChartDivisor]) -> float:
    """Perturb r by +1e-6 r until no zero sits on the circle."""
    r0 = r
    for _ in range(20):
        R = R_of(r)
        if not any(d.near(R, 10 * BOUNDARY_TOL) for d in divisors):
            if r != r0:
                log.info("radius %.17g perturbed to %.17g (zero near circle)", r0, r)
            return r
        r += PERTURB * r
    raise ZeroNearCircle(f"could not clean radius {r0}")


@dataclass
class FMTResult:
    radii: np.ndarray
    T: np.ndarray
    m: np.ndarray
    N: np.ndarray
    residual: np.ndarray
    weil: float

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.residual - self.weil)))

    @property
    def spread(self) -> float:
        return float(np.max(self.residual) - np.min(self.residual))


def fmt_residual(f: HolomorphicCurve, H: Hyperplane, S: ModelSurface, r_grid: Sequence[float],
                 n_nodes: int = 4096) -> FMTResult:
    """m + N - T per radius; constant and equal to the Weil term at o."""
    lam = weil_at_base(f, H)
    ch = _chart(f, S)
    radii = [float(r) for r in r_grid]
    div = chart_divisor(compose(H, f), ch, ch.R(max(radii)) * (1 + 1e-5))
    out_r, T, m, N = [], [], [], []
    for r in radii:
        r = clean_radius(r, ch.R, [div])
        out_r.append(r)
        T.append(characteristic(f, S, r, n_nodes))
        m.append(proximity(f, H, S, r, n_nodes, divisor=div))
        N.append(counting(f, H, S, r, divisor=div))
    T, m, N = map(np.array, (T, m, N))
    return FMTResult(np.array(out_r), T, m, N, m + N - T, lam)


def nevanlinna_inequality(res: FMTResult, tol: float = 1e-6) -> tuple[float, bool]:
    """N - T <= lambda_H(f(o)) over the grid."""
    worst = float(np.max(res.N - res.T))
    return worst, worst <= res.weil + tol


# -- meromorphic functions ---------------------------------------------------------------

@dataclass(frozen=True)
class MeromorphicFn:
    numerator: EntireExpr
    denominator: EntireExpr = EntireExpr.const(1)

    def __post_init__(self):
        if self.denominator.is_zero():
            raise ValueError("denominator is identically zero")
        a, b = self.numerator.single_direction(), self.denominator.single_direction()
        if a is not None and b is not None and not self.numerator.is_zero():
            if poly_gcd(a[1], b[1]).degree > 0:
                raise ValueError("numerator and denominator share zeros")

    @classmethod
    def entire(cls, e: EntireExpr) -> MeromorphicFn:
        return cls(e, EntireExpr.const(1))

    def is_constant(self) -> bool:
        return (self.numerator.derivative() * self.denominator
                - self.numerator * self.denominator.derivative()).is_zero()

    def derivative_pair(self, k: int = 1) -> tuple[EntireExpr, EntireExpr]:
        """(A_k, B_k) with psi^(k) = A_k / B_k (not reduced)."""
        A, B = self.numerator, self.denominator
        for _ in range(k):
            A, B = A.derivative() * B - A * B.derivative(), B * B
        return A, B

    def log_derivative_pair(self, k: int = 1) -> tuple[EntireExpr, EntireExpr]:
        """X^k(psi) / psi as a pair."""
        A, B = self.derivative_pair(k)
        return A * self.denominator, B * self.numerator

    def log_abs(self, z):
        return self.numerator.log_abs(z) - self.denominator.log_abs(z)

    def to_json(self) -> dict:
        return {"numerator": self.numerator.to_json(), "denominator": self.denominator.to_json()}

    @classmethod
    def from_json(cls, obj) -> MeromorphicFn:
        if "numerator" in obj:
            return cls(parse_expr(obj["numerator"]), parse_expr(obj.get("denominator", {"const": [1, 1, 0, 1]})))
        return cls.entire(parse_expr(obj))


def _zero_free(e: EntireExpr) -> bool:
    sd = e.single_direction()
    return sd is not None and sd[1].degree == 0


def _pair_log_abs(A: EntireExpr, B: EntireExpr, z):
    return A.log_abs(z) - B.log_abs(z)


def proximity_mero(psi: MeromorphicFn, S: ModelSurface, r: float, n_nodes: int = 4096,
                   o: complex = 0j) -> float:
    """m(r, psi) = circle mean of log+ |psi|."""
    ch = _chart(o, S)
    v = psi.log_abs(ch.circle(r, n_nodes))
    if np.any(np.isnan(v)):
        raise NodeOnSingularity("quadrature node on a zero or pole")
    return float(np.mean(np.maximum(v, 0.0)))


def proximity_pair(A: EntireExpr, B: EntireExpr, S: ModelSurface, r: float,
                   n_nodes: int = 4096, o: complex = 0j) -> float:
    ch = _chart(o, S)
    v = _pair_log_abs(A, B, ch.circle(r, n_nodes))
    if np.any(np.isnan(v)):
        raise NodeOnSingularity("quadrature node on a zero or pole")
    return float(np.mean(np.maximum(v, 0.0)))


def t_of_meromorphic(psi: MeromorphicFn, S: ModelSurface, r: float, n_nodes: int = 4096,
                     o: complex = 0j, poles: ChartDivisor | None = None) -> float:
    """T(r, psi) = m(r, psi) + N(r, psi)."""
    ch = _chart(o, S)
    R = ch.R(r)
    m = proximity_mero(psi, S, r, n_nodes, o)
    if _zero_free(psi.denominator):
        return m
    if poles is None:
        poles = chart_divisor(psi.denominator, ch, R)
    return m + poles.counting(R, classical=True)


def _bump(u):
    """C-infinity cutoff: 1 for u <= 1/2, 0 for u >= 1."""
    x = np.clip(2.0 * np.asarray(u, dtype=float) - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x < 1, np.exp(-1.0 / np.maximum(1 - x, 1e-300)), 0.0)
        b = np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class _PhiIntegrand:
    """g_r(o, .) ||grad psi||^2 / (|psi|^2 (1 + log^2|psi|)) in the chart."""
    psi: MeromorphicFn
    ch: Chart
    R: float
    A1: EntireExpr
    B1: EntireExpr

    def __call__(self, w: np.ndarray) -> np.ndarray:
        z = self.ch.to_z(w)
        la = self.psi.log_abs(z)
        # |psi'/psi| = |A1 B / (B1 A)|
        ld = (self.A1.log_abs(z) + self.psi.denominator.log_abs(z)
              - self.B1.log_abs(z) - self.psi.numerator.log_abs(z))
        aw = np.abs(w)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            dens = (np.exp(2 * ld) * np.abs(self.ch.dz_dw(w)) ** 2 / (1 + la ** 2)
                    * np.log(self.R / aw) / math.pi)
        return np.where(np.isfinite(dens) & (aw < self.R), dens, 0.0)


def _log_polar_rule(t_lo: float, t_hi: float, n_pan: int, panel_nodes: int, n_th: int):
    """Nodes (t, weight in ds) and angles for Gauss-Legendre panels in s = log t."""
    xg, wg = np.polynomial.legendre.leggauss(panel_nodes)
    edges = np.linspace(math.log(t_lo), math.log(t_hi), n_pan + 1)
    half = (edges[1:, None] - edges[:-1, None]) / 2
    s = ((edges[:-1, None] + edges[1:, None]) / 2 + half * xg).ravel()
    ws = (half * wg).ravel()
    th = 2 * math.pi * (np.arange(n_th) + 0.5) / n_th
    return np.exp(s), ws, np.exp(1j * th)


def _t_psi_phi_value(f: _PhiIntegrand, centers: np.ndarray, radii: np.ndarray,
                     n_th: int, n_pan: int, panel_nodes: int, excl: float,
                     chunk: int = 1 << 20) -> float:
    """Global log-polar rule about o on (1 - sum of bumps) * integrand, plus a
    log-polar rule about each off-center singularity on bump * integrand.
    The bumps are C-infinity, so both pieces are smooth in their coordinates.
    dA = t^2 ds dtheta in log-polar coordinates."""

    def cut(w):
        c = np.zeros(w.shape)
        for a, d in zip(centers, radii):
            c += _bump(np.abs(w - a) / d)
        return c

    def integrate(center, t_lo, t_hi, weight):
        t, ws, eith = _log_polar_rule(t_lo, t_hi, n_pan, panel_nodes, n_th)
        rows = max(1, chunk // n_th)
        total = 0.0
        for i0 in range(0, len(t), rows):
            ti = t[i0:i0 + rows]
            w = center + ti[:, None] * eith[None, :]
            vals = f(w) * weight(w, ti[:, None])
            total += float(np.sum(vals.mean(axis=1) * 2 * math.pi * ti ** 2 * ws[i0:i0 + rows]))
        return total

    out = integrate(0j, excl, f.R, lambda w, t: 1.0 - cut(w))
    for a, d in zip(centers, radii):
        out += integrate(a, excl, d, lambda w, t, _d=d: _bump(t / _d))
    return out / (2 * math.pi)


def t_psi_phi(psi: MeromorphicFn, S: ModelSurface, r: float, o: complex = 0j,
              n_ang: int = 128, panel_nodes: int = 8, excl: float = 1e-6,
              max_doublings: int = 4, tol: float = 1e-3) -> float:
    """(1/2 pi) int g_r(o, z) ||grad psi||^2 / (|psi|^2 (1 + log^2 |psi|)) dV.

    ||grad psi||^2 dV = |psi'|^2 dx dy is conformally invariant, so the
    integral is computed in the chart disc |w| < R with the flat measure.
    Zeros and poles of psi are cut out by discs of radius ``excl`` (in the
    chart coordinate); away from o they get their own log-polar patch, glued
    to the global rule by a smooth partition of unity.  Node counts double
    until two successive values agree to ``tol``.
    """
    if psi.is_constant():
        return 0.0
    ch = _chart(o, S)
    R = ch.R(r)
    A1, B1 = psi.derivative_pair(1)
    sing: list[complex] = []
    for e in (psi.numerator, psi.denominator):
        if not _zero_free(e):
            try:
                sing.extend(zeros_in_disc(e, ch.containing_radius(R) * 1.01 + 1e-3).locations())
            except (UnsupportedZeroSet, ZeroOnBoundary):
                pass
    ws = np.array([complex(ch.to_w(a)) for a in sing], dtype=complex)
    ws = ws[(np.abs(ws) > 10 * excl) & (np.abs(ws) < R)]
    radii = []
    for k, a in enumerate(ws):
        gaps = [abs(a), R - abs(a)] + [abs(a - b) for j, b in enumerate(ws) if j != k]
        radii.append(0.45 * min(gaps))
    keep = np.array(radii) > 10 * excl if radii else np.zeros(0, dtype=bool)
    centers, radii = ws[keep], np.array(radii)[keep] if radii else np.zeros(0)
    f = _PhiIntegrand(psi, ch, R, A1, B1)
    n_pan = max(4, int(math.ceil(math.log(1 / excl))))
    prev = _t_psi_phi_value(f, centers, radii, n_ang, n_pan, panel_nodes, excl)
    for _ in range(max_doublings):
        n_ang *= 2
        n_pan *= 2
        cur = _t_psi_phi_value(f, centers, radii, n_ang, n_pan, panel_nodes, excl)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise NonConvergentQuadrature(f"T_psi(r, Phi) at r={r} did not settle to {tol}")


# -- fits and exceptional sets ---------------------------------------------------------

@dataclass
class FitResult:
    coef: np.ndarray
    residual: np.ndarray
    max_excess: float
    exceptional_measure: float


def nonneg_fit(y, columns: Sequence[np.ndarray], radii, allowance: float) -> FitResult:
    """y ~ X c with c >= 0; reports max(y - X c) and the grid measure of radii
    where y - X c exceeds ``allowance``."""
    X = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    y = np.asarray(y, dtype=float)
    coef, _ = nnls(X, y)
    res = y - X @ coef
    radii = np.asarray(radii, dtype=float)
    widths = np.gradient(radii) if len(radii) > 1 else np.ones(1)
    return FitResult(coef, res, float(np.max(res)), float(np.sum(widths[res > allowance])))


# -- logarithmic derivative lemma ------------------------------------------------------------

@dataclass
class LDLReport:
    radii: np.ndarray
    m: np.ndarray
    T: np.ndarray
    leading: np.ndarray       # (3k/2) log T
    error_term: np.ndarray    # -kappa r^2 + log+ log r
    fit: FitResult

    @property
    def excess(self) -> np.ndarray:
        return self.m - self.leading - self.fit.coef[0] * self.error_term

    @property
    def violation_fraction(self) -> float:
        return float(np.mean(self.fit.residual > self.allowance))

    allowance: float = 1.0


def _loglog_plus(r: float) -> float:
    return math.log(math.log(r)) if r > math.e else 0.0


def ldl_check(psi: MeromorphicFn, S: ModelSurface, r_grid: Sequence[float], k: int = 1,
              n_nodes: int = 4096, allowance: float = 1.0) -> LDLReport:
    """m(r, X^k psi / psi) against (3k/2) log T(r, psi) plus error terms.

    The excess m - (3k/2) log T is fitted as C0 (-kappa r^2 + log+ log r) + C1
    with C0, C1 >= 0; radii whose residual exceeds ``allowance`` are counted.
    """
    if psi.is_constant():
        raise ValueError("psi must be non-constant")
    A, B = psi.log_derivative_pair(k)
    radii = np.array([float(r) for r in r_grid])
    ch = _chart(0j, S)
    poles = None if _zero_free(psi.denominator) else \
        chart_divisor(psi.denominator, ch, ch.R(radii.max()) * (1 + 1e-5))
    m = np.array([proximity_pair(A, B, S, r, n_nodes) for r in radii])
    T = np.array([t_of_meromorphic(psi, S, r, n_nodes, poles=poles) for r in radii])
    with np.errstate(divide="ignore"):
        lead = 1.5 * k * np.log(T)
    err = np.array([-S.curvature * r * r + _loglog_plus(r) for r in radii])
    fit = nonneg_fit(m - lead, [err, np.ones_like(err)], radii, allowance)
    rep = LDLReport(radii, m, T, lead, err, fit)
    rep.allowance = allowance
    return rep


# -- second main theorem -------------------------------------------------------------------

@dataclass
class DefectRow:
    index: int
    delta: float


@dataclass(frozen=True)
class NevanlinnaRow:
    r: float
    T_f: float
    m_f: tuple[float, ...]
    N_f: tuple[float, ...]
    N_trunc: tuple[float, ...]
    fmt_residual: tuple[float, ...]    # m + N - T per hyperplane
    smt_lhs: float
    smt_rhs_counting: float


@dataclass
class SMTResult:
    radii: np.ndarray
    T: np.ndarray
    N_trunc: np.ndarray        # (len(radii), q)
    N: np.ndarray
    m: np.ndarray
    coefficient: int
    margin: np.ndarray
    fit: FitResult
    defects: list[DefectRow]
    budget: int

    @property
    def defect_sum(self) -> float:
        return float(sum(d.delta for d in self.defects))

    def rows(self) -> list[NevanlinnaRow]:
        out = []
        for i, r in enumerate(self.radii):
            T = float(self.T[i])
            m, N, Nt = (tuple(float(x) for x in a[i]) for a in (self.m, self.N, self.N_trunc))
            out.append(NevanlinnaRow(float(r), T, m, N, Nt,
                                     tuple(a + b - T for a, b in zip(m, N)),
                                     self.coefficient * T, float(sum(Nt))))
        return out


def _check_smt_pre(f: HolomorphicCurve, F: HyperplaneFamily) -> EntireExpr:
    if F.n != f.n:
        raise DimensionMismatch(f"hyperplanes in P^{F.n}, curve in P^{f.n}")
    if not check_position(F):
        raise PositionViolated(f"hyperplanes are not in {F.N}-subgeneral position")
    w = wronskian(list(f.components))
    if w.is_zero():
        raise Degenerate("curve is linearly degenerate (Wronskian vanishes identically)")
    o = f.base_point
    if w.log_abs(o) == -math.inf:
        raise BasePointOnDivisor("base point is a zero of the Wronskian")
    for j, H in enumerate(F.hyperplanes):
        if compose(H, f).log_abs(o) == -math.inf:
            raise BasePointOnDivisor(f"f(o) lies on hyperplane {j + 1}")
    return w


def estimate_defect(N: np.ndarray, T: np.ndarray, tail: float = 0.5) -> float:
    """1 - limsup N/T, with the limsup read off the upper part of the grid."""
    k = max(1, int(round(len(T) * tail)))
    ratio = N[-k:] / T[-k:]
    return float(min(1.0, max(0.0, 1.0 - np.max(ratio))))


def smt_margin(f: HolomorphicCurve, F: HyperplaneFamily, W: NochkaWeights, S: ModelSurface,
               r_grid: Sequence[float], n_nodes: int = 4096, allowance: float = 0.5) -> SMTResult:
    _check_smt_pre(f, F)
    ch = _chart(f, S)
    radii_in = [float(r) for r in r_grid]
    R_max = ch.R(max(radii_in)) * (1 + 1e-5)
    hs = [compose(H, f) for H in F.hyperplanes]
    divs = [chart_divisor(h, ch, R_max) for h in hs]
    radii, T, Nt, N, m = [], [], [], [], []
    for r in radii_in:
        r = clean_radius(r, ch.R, divs)
        radii.append(r)
        T.append(characteristic(f, S, r, n_nodes))
        R = ch.R(r)
        Nt.append([d.counting(R, F.n) for d in divs])
        N.append([d.counting(R) for d in divs])
        m.append([proximity(f, H, S, r, n_nodes, divisor=d) for H, d in zip(F.hyperplanes, divs)])
    radii = np.array(radii)
    T, Nt, N, m = map(np.array, (T, Nt, N, m))
    coef = smt_coefficient(F)
    margin = coef * T - Nt.sum(axis=1)
    kappa_col = -S.curvature * radii ** 2
    with np.errstate(divide="ignore"):
        logT = np.log(np.maximum(T, 1e-300))
    fit = nonneg_fit(margin, [logT, kappa_col, np.ones_like(T)], radii, allowance)
    defects = [DefectRow(j + 1, estimate_defect(Nt[:, j], T)) for j in range(F.q)]
    return SMTResult(radii, T, Nt, N, m, coef, margin, fit, defects, 2 * F.N - F.n + 1)


# -- further checks ----------------------------------------------------------------------

def quotient_t_excess(f: HolomorphicCurve, S: ModelSurface, r_grid: Sequence[float],
                       n_nodes: int = 4096) -> np.ndarray:
    """max_{j,k} T(r, f_j/f_k) - T_f(r) per radius (bounded above by a constant)."""
    out = []
    pairs = [(j, k) for k in range(f.n + 1) for j in range(f.n + 1)
             if j != k and not f.components[k].is_zero()]
    ch = _chart(f, S)
    R_max = ch.R(max(r_grid)) * (1 + 1e-5)
    pole_divs = {k: chart_divisor(f.components[k], ch, R_max) for _, k in pairs}
    for r in r_grid:
        Tf = characteristic(f, S, r, n_nodes)
        best = -math.inf
        for j, k in pairs:
            if f.components[j].is_zero():
                val = 0.0
            else:
                v = f.components[j].log_abs(ch.circle(r, n_nodes)) - f.components[k].log_abs(ch.circle(r, n_nodes))
                val = float(np.mean(np.maximum(v, 0.0))) + pole_divs[k].counting(ch.R(r), classical=True)
            best = max(best, val)
        out.append(best - Tf)
    return np.array(out)


def t_hat_chain(psi: MeromorphicFn, S: ModelSurface, r_grid: Sequence[float]) -> np.ndarray:
    """T_psi(r, Phi) - T(r, psi) per radius (bounded above)."""
    return np.array([t_psi_phi(psi, S, r) - t_of_meromorphic(psi, S, r) for r in r_grid])


def wronskian_log_ratios(f: HolomorphicCurve, F: HyperplaneFamily, W: NochkaWeights, points) -> np.ndarray:
    """log of (prod |H_j o f|^gamma_j / |W| * sum_Q |Delta(H_j o f, j in Q)|)
    / ||f||^{gamma (q - 2N + n - 1)} at each point; the constant C is omitted."""
    hs = [compose(H, f) for H in F.hyperplanes]
    w = wronskian(list(f.components))
    pts = np.asarray(points, dtype=complex)
    deltas = []
    for Q in itertools.combinations(range(F.q), F.n + 1):
        if F.rank(Q) < F.n + 1:
            continue
        d = log_wronskian([hs[j] for j in Q])
        deltas.append(d.log_abs(pts))
    logsum = np.logaddexp.reduce(np.stack(deltas), axis=0)
    lhs = float(W.gamma) * smt_coefficient(F) * f.norm_log(pts)
    rhs = sum(float(g) * h.log_abs(pts) for g, h in zip(W.gamma_j, hs)) - w.log_abs(pts) + logsum
    return rhs - lhs
