"""Brownian motion for Delta_S/2 on the model surfaces.

Paths are simulated in the conformal coordinate with Euler-Maruyama,
dZ = sigma(Z) dB, sigma = 1/lam (1 on C, (1-|z|^2)/2 on D).  Exit from the
geodesic ball is detected on the Euclidean circle |z| = R of the same
radius; between grid times a Brownian-bridge crossing test removes the
O(sqrt(dt)) bias of discrete monitoring.

Random numbers.  Every path owns two counter-based streams.  The c-th
uniform of a path is splitmix64(key + c * G) mapped to (0, 1), with
key = splitmix64(seed ^ splitmix64(path)) and G the golden-ratio increment;
normals are drawn from consecutive uniforms c = 1, 2, ... by the Marsaglia
polar method.  Bridge uniforms use the same construction with
key2 = splitmix64(key ^ BRIDGE_SALT) and c = step index + 1.  Nothing
depends on thread scheduling, so results are bit-identical for any thread count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np
from numba import njit, prange
from scipy import stats as scipy_stats

from .surfaces import ModelSurface

# numba probes an old system TBB and falls back to another layer; the notice is noise
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
BRIDGE_SALT = np.uint64(0xB5AD4ECEDA1CE2A9)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
TWO53 = 1.0 / 9007199254740992.0


class StepTooCoarse(RuntimeError):
    pass


# -- integrands -------------------------------------------------------------------

# name -> code; evaluated by _phi inside the kernel and by phi_values outside
INTEGRANDS = {
    "one": 0,
    "rho": 1,          # geodesic radius
    "rho2": 2,         # geodesic radius squared
    "rho_cos": 3,      # rho * cos(theta)
    "abs2": 4,         # |z|^2 (Euclidean coordinate)
    "exp_neg_rho": 5,
    "rho2_cos2": 6,    # rho^2 cos(2 theta)
    "lap_abs2": 7,     # Delta_S |z|^2
    "lap_log1p_abs2": 8,  # Delta_S log(1 + |z|^2)
    "zero": 9,
}


@njit(cache=True)
def _rho_of(x, y, disc):
    a = math.sqrt(x * x + y * y)
    if disc:
        return math.log((1.0 + a) / (1.0 - a))
    return a


@njit(cache=True)
def _phi(code, x, y, disc):
    if code == 0:
        return 1.0
    if code == 9:
        return 0.0
    s = x * x + y * y
    if code == 4:
        return s
    if code == 7:
        if disc:
            return (1.0 - s) * (1.0 - s)
        return 4.0
    if code == 8:
        lam2inv = (1.0 - s) * (1.0 - s) / 4.0 if disc else 1.0
        return 4.0 * lam2inv / ((1.0 + s) * (1.0 + s))
    rho = _rho_of(x, y, disc)
    if code == 1:
        return rho
    if code == 2:
        return rho * rho
    if code == 5:
        return math.exp(-rho)
    a = math.sqrt(s)
    if a == 0.0:
        return 0.0
    c = x / a
    if code == 3:
        return rho * c
    if code == 6:
        return rho * rho * (2.0 * c * c - 1.0)
    return math.nan


@njit(cache=True)
def _needs_rho(codes):
    for k in range(codes.shape[0]):
        c = codes[k]
        if c == 1 or c == 2 or c == 3 or c == 5 or c == 6:
            return True
    return False


@njit(cache=True)
def _phi_fast(code, x, y, s, rho, disc):
    """_phi with |z|^2 and rho supplied by the caller (same arithmetic)."""
    if code == 0:
        return 1.0
    if code == 9:
        return 0.0
    if code == 4:
        return s
    if code == 7:
        if disc:
            return (1.0 - s) * (1.0 - s)
        return 4.0
    if code == 8:
        lam2inv = (1.0 - s) * (1.0 - s) / 4.0 if disc else 1.0
        return 4.0 * lam2inv / ((1.0 + s) * (1.0 + s))
    if code == 1:
        return rho
    if code == 2:
        return rho * rho
    if code == 5:
        return math.exp(-rho)
    a = math.sqrt(s)
    if a == 0.0:
        return 0.0
    c = x / a
    if code == 3:
        return rho * c
    if code == 6:
        return rho * rho * (2.0 * c * c - 1.0)
    return math.nan


@njit(cache=True)
def _phi_array(code, xs, ys, disc):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = _phi(code, xs[i], ys[i], disc)
    return out


def phi_values(name: str, z, disc: bool) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = _phi_array(INTEGRANDS[name], flat.real.copy(), flat.imag.copy(), disc)
    return out.reshape(z.shape)


# -- random numbers ---------------------------------------------------------------

@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


@njit(cache=True)
def _uniform(key, counter):
    h = _mix(key + counter * GOLDEN)
    return (float(h >> S11) + 0.5) * TWO53


@njit(cache=True)
def _path_keys(seed, path):
    k1 = _mix(seed ^ _mix(np.uint64(path)))
    return k1, _mix(k1 ^ BRIDGE_SALT)


def path_key(seed: int, path: int) -> int:
    return int(_path_keys(np.uint64(seed), path)[0])


# -- kernel -------------------------------------------------------------------------

@njit(parallel=True, cache=True)
def _simulate(seed, n_paths, disc, R, r_geo, dt, substeps, codes, max_steps):
    K = codes.shape[0]
    tau = np.empty(n_paths)
    ex = np.empty(n_paths)
    ey = np.empty(n_paths)
    over = np.zeros(n_paths)
    acc = np.zeros((n_paths, K))
    sq = math.sqrt(dt / substeps)
    R2 = R * R
    need_rho = _needs_rho(codes)
    for p in prange(n_paths):
        key, key2 = _path_keys(seed, p)
        loc = np.zeros(K)
        x = 0.0
        y = 0.0
        t = 0.0
        j = np.uint64(1)   # uniform counter
        done = False
        for step in range(max_steps):
            s = x * x + y * y
            rho = _rho_of(x, y, disc) if need_rho else 0.0
            sig = (1.0 - s) / 2.0 if disc else 1.0
            # bridge crossing needs min(d1, d2) < sqrt(20 dt) sig
            rin = R - math.sqrt(20.0 * dt) * sig
            inner2 = rin * rin if rin > 0.0 else 0.0
            dx = 0.0
            dy = 0.0
            for _ in range(substeps):
                # Marsaglia polar method on the counter stream
                while True:
                    v1 = 2.0 * _uniform(key, j) - 1.0
                    v2 = 2.0 * _uniform(key, j + np.uint64(1)) - 1.0
                    j += np.uint64(2)
                    w = v1 * v1 + v2 * v2
                    if w < 1.0 and w > 0.0:
                        break
                f = math.sqrt(-2.0 * math.log(w) / w)
                dx += v1 * f
                dy += v2 * f
            nx = x + sig * sq * dx
            ny = y + sig * sq * dy
            ns = nx * nx + ny * ny
            frac = -1.0
            px = 0.0
            py = 0.0
            if ns >= R2 or (disc and ns >= 1.0):
                a0 = math.sqrt(s)
                a1 = math.sqrt(ns)
                frac = (R - a0) / (a1 - a0)
                px = x + frac * (nx - x)
                py = y + frac * (ny - y)
                if disc and a1 >= 1.0:
                    over[p] = math.inf
                else:
                    over[p] = _rho_of(nx, ny, disc) - r_geo
            elif ns > inner2 or s > inner2:
                d1 = R - math.sqrt(s)
                d2 = R - math.sqrt(ns)
                e = 2.0 * d1 * d2 / (sig * sig * dt)
                if e < 40.0:
                    u = _uniform(key2, np.uint64(step) + np.uint64(1))
                    if u < math.exp(-e):
                        frac = d1 / (d1 + d2)
                        px = 0.5 * (x + nx)
                        py = 0.5 * (y + ny)
            if frac >= 0.0:
                h = frac * dt
                for k in range(K):
                    loc[k] += _phi_fast(codes[k], x, y, s, rho, disc) * h
                tau[p] = t + h
                pa = math.sqrt(px * px + py * py)
                if pa == 0.0:
                    ex[p] = R
                    ey[p] = 0.0
                else:
                    ex[p] = px * R / pa
                    ey[p] = py * R / pa
                done = True
                break
            for k in range(K):
                loc[k] += _phi_fast(codes[k], x, y, s, rho, disc) * dt
            t += dt
            x = nx
            y = ny
        for k in range(K):
            acc[p, k] = loc[k]
        if not done:
            tau[p] = math.nan
            ex[p] = math.nan
            ey[p] = math.nan
    return tau, ex, ey, over, acc


# -- public API -----------------------------------------------------------------------

@dataclass(frozen=True)
class PathConfig:
    surface: ModelSurface
    radius: float
    dt: float = 1e-4
    master_seed: int = 0
    n_paths: int = 10_000
    substeps: int = 1
    max_steps: int = 100_000_000

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.n_paths < 1:
            raise ValueError("need at least one path")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class ExitStats:
    tau_samples: np.ndarray
    exit_points: np.ndarray
    functionals: dict[str, np.ndarray] = field(default_factory=dict)
    overshoot: np.ndarray | None = None
    config: PathConfig | None = None

    @property
    def n(self) -> int:
        return len(self.tau_samples)

    def mean_se(self, values) -> tuple[float, float]:
        v = np.asarray(values, dtype=float)
        return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(len(v)))

    @property
    def tau_mean_se(self) -> tuple[float, float]:
        return self.mean_se(self.tau_samples)

    @property
    def exit_angles(self) -> np.ndarray:
        return np.mod(np.angle(self.exit_points), 2 * math.pi)


def set_threads(n: int | None) -> int:
    """Clamp to the size of the numba pool and apply; returns the value used."""
    if n is None:
        return numba.get_num_threads()
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def simulate_exit(cfg: PathConfig, integrands: Sequence[str] = ("one",),
                  threads: int | None = None) -> ExitStats:
    for name in integrands:
        if name not in INTEGRANDS:
            raise KeyError(f"unknown integrand {name!r}; known: {sorted(INTEGRANDS)}")
    S = cfg.surface
    R = S.euclidean_radius(cfg.radius)
    set_threads(threads)
    codes = np.array([INTEGRANDS[n] for n in integrands], dtype=np.int64)
    tol = 10.0 * math.sqrt(cfg.dt)
    tau, ex, ey, over, acc = _simulate(np.uint64(cfg.master_seed), cfg.n_paths, S.is_disc,
                                       R, float(cfg.radius), cfg.dt, cfg.substeps, codes,
                                       cfg.max_steps)
    if np.isnan(tau).any():
        raise RuntimeError(f"{int(np.isnan(tau).sum())} paths did not exit within max_steps")
    if np.mean(over > tol) > 0.01:
        raise StepTooCoarse(f"overshoot above {tol:.3g} on more than 1% of paths; reduce dt")
    return ExitStats(tau, ex + 1j * ey,
                     {n: acc[:, k].copy() for k, n in enumerate(integrands)}, over, cfg)


# -- quadrature oracles --------------------------------------------------------------

def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def green_energy(S: ModelSurface, r: float, phi: Callable | str,
                 n_rad: int = 200, n_ang: int = 256) -> float:
    """int_{D(r)} g_r(o, x) phi(x) dV(x) in geodesic polar coordinates.

    The substitution rho = r u^2 smooths the logarithmic pole at o; the
    angular integral is a periodic trapezoid.
    """
    u, wu = _gl(n_rad)
    rho = r * u ** 2
    drho = 2 * r * u * wu
    th = 2 * math.pi * np.arange(n_ang) / n_ang
    a = np.tanh(rho / 2) if S.is_disc else rho
    z = a[:, None] * np.exp(1j * th)[None, :]
    vals = phi_values(phi, z, S.is_disc) if isinstance(phi, str) else np.asarray(phi(z), dtype=float)
    ang = vals.mean(axis=1) * 2 * math.pi
    radial = S.green_radial(r, rho) * S.volume_density_polar(rho)
    return float(np.sum(ang * radial * drho))


def expected_exit_time(S: ModelSurface, r: float) -> float:
    """E_o[tau_r] from the co-area formula with phi = 1."""
    if not S.is_disc:
        return r * r / 2
    return green_energy(S, r, "one", n_ang=1)


def harmonic_mean(S: ModelSurface, r: float, psi: Callable, n: int = 4096) -> float:
    """int psi d(pi_o^r): uniform angular average on the geodesic circle."""
    R = S.euclidean_radius(r)
    th = 2 * math.pi * np.arange(n) / n
    return float(np.mean(psi(R * np.exp(1j * th))))


# -- checks ------------------------------------------------------------------------------

@dataclass
class CheckReport:
    name: str
    estimate: float
    reference: float
    se: float
    passed: bool
    detail: str = ""

    @property
    def zscore(self) -> float:
        return abs(self.estimate - self.reference) / self.se if self.se > 0 else (
            0.0 if self.estimate == self.reference else math.inf)


def check_exit_time_bound(stats: ExitStats, r: float) -> CheckReport:
    if stats.n < 10_000:
        raise ValueError("the exit-time bound check needs at least 1e4 paths")
    m, se = stats.tau_mean_se
    return CheckReport("exit_time_bound", m + 3 * se, 4 * r * r, se, m + 3 * se <= 4 * r * r)


def check_mean(name: str, samples, reference: float, nsigma: float = 3.0) -> CheckReport:
    v = np.asarray(samples, dtype=float)
    m = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(len(v)))
    return CheckReport(name, m, reference, se, abs(m - reference) <= nsigma * se)


def check_coarea(stats: ExitStats, name: str, nsigma: float = 3.0) -> CheckReport:
    cfg = stats.config
    ref = green_energy(cfg.surface, cfg.radius, name)
    return check_mean(f"coarea[{name}]", stats.functionals[name], ref, nsigma)


def check_harmonic(stats: ExitStats, psi: Callable, label: str, nsigma: float = 3.0) -> CheckReport:
    cfg = stats.config
    ref = harmonic_mean(cfg.surface, cfg.radius, psi)
    return check_mean(f"harmonic[{label}]", psi(stats.exit_points), ref, nsigma)


def ks_uniform_angles(stats: ExitStats) -> tuple[float, float]:
    """Kolmogorov-Smirnov statistic and p-value of exit angles vs uniform."""
    res = scipy_stats.kstest(stats.exit_angles / (2 * math.pi), "uniform")
    return float(res.statistic), float(res.pvalue)


@dataclass(frozen=True)
class TestFunction:
    """u with its value and the name of the kernel integrand holding Delta_S u."""
    name: str
    u: Callable
    laplacian: str


DYNKIN_FUNCTIONS = {
    "re_z": TestFunction("re_z", lambda z: np.real(z), "zero"),
    "abs2": TestFunction("abs2", lambda z: np.abs(z) ** 2, "lap_abs2"),
    "log1p_abs2": TestFunction("log1p_abs2", lambda z: np.log1p(np.abs(z) ** 2), "lap_log1p_abs2"),
}


def check_dynkin(cfg: PathConfig, u: TestFunction | str, stats: ExitStats | None = None,
                 nsigma: float = 3.0, threads: int | None = None) -> CheckReport:
    """E[u(X_tau)] - u(o) against (1/2) E[int_0^tau Delta_S u dt] on the same
    paths; the standard error is that of the paired per-path difference."""
    if isinstance(u, str):
        u = DYNKIN_FUNCTIONS[u]
    if stats is None or u.laplacian not in stats.functionals:
        stats = simulate_exit(cfg, [u.laplacian], threads=threads)
    lhs = u.u(stats.exit_points) - u.u(0j)
    rhs = 0.5 * stats.functionals[u.laplacian]
    d = lhs - rhs
    se = float(np.std(d, ddof=1) / math.sqrt(len(d))) if np.any(d != d[0]) else 0.0
    diff = float(np.mean(d))
    return CheckReport(f"dynkin[{u.name}]", float(np.mean(lhs)), float(np.mean(rhs)), se,
                       abs(diff) <= nsigma * se or diff == 0.0,
                       f"lhs-rhs={diff:.3g}")


# -- Calculus Lemma ratio -----------------------------------------------------------

def _logp(x: float) -> float:
    return math.log(x) if x > 1 else 0.0


def calculus_F(khat: float, r: float, kappa_r: float, delta: float) -> float:
    """{log+ k * log+(r e^{r sqrt(-kappa)} k (log+ k)^{1+delta})}^{1+delta}."""
    lk = _logp(khat)
    inner = r * math.exp(r * math.sqrt(-kappa_r)) * khat * lk ** (1 + delta)
    return (lk * _logp(inner)) ** (1 + delta)


@dataclass
class RatioRow:
    r: float
    lhs: float
    integral: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs


def calculus_lemma_ratio(S: ModelSurface, radii: Sequence[float], k: str | Callable,
                         delta: float = 0.1, method: str = "quadrature",
                         n_paths: int = 20_000, dt_rel: float = 1e-3, seed: int = 0,
                         threads: int | None = None) -> list[RatioRow]:
    """LHS = E_o[k(X_tau_r)] and the right-hand side without the constant C.

    With method="quadrature" both expectations come from the harmonic
    measure and the Green kernel; with method="mc" they are Monte Carlo
    estimates (``k`` must then be an integrand name; dt is dt_rel * r^2 on
    the plane and dt_rel on the disc).
    """
    rows = []
    kappa = S.curvature
    for r in radii:
        if method == "quadrature":
            kf = (lambda z, _n=k: phi_values(_n, z, S.is_disc)) if isinstance(k, str) else k
            lhs = harmonic_mean(S, r, kf)
            integral = green_energy(S, r, k)
        elif method == "mc":
            if not isinstance(k, str):
                raise ValueError("Monte Carlo route needs a named integrand")
            dt = dt_rel * (r * r if not S.is_disc else 1.0)
            st = simulate_exit(PathConfig(S, r, dt, seed, n_paths), [k], threads=threads)
            lhs = float(np.mean(phi_values(k, st.exit_points, S.is_disc)))
            integral = float(np.mean(st.functionals[k]))
        else:
            raise ValueError(f"unknown method {method!r}")
        khat = math.log(r) * integral if r > 1 else 0.0
        F = calculus_F(khat, r, kappa, delta)
        rhs = F * math.exp(r * math.sqrt(-kappa)) * _logp(r) * integral / (2 * math.pi)
        rows.append(RatioRow(r, lhs, integral, rhs))
    return rows
