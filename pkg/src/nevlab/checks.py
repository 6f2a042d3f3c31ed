"""Verification batteries shared by the test suite and ``nevlab verify``.

Each ``criterion_*`` function runs one battery end to end and returns a
``CheckResult``; nothing here asserts, so callers decide how to report.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .curves import HolomorphicCurve, HyperplaneFamily, check_position, hyperplane
from .expr import EntireExpr
from .gaussian import GaussianRational
from .linalg import det
from .nevanlinna import (MeromorphicFn, fmt_residual, proximity_pair, smt_margin,
                         t_of_meromorphic)
from .nochka import compute_weights, verify_weights
from .poly import Poly
from .surfaces import (EUCLIDEAN_PLANE, POINCARE_DISC, KappaProfile, check_jacobi_bounds,
                       solve_jacobi)
from .wronskian import divisor_inequality, log_wronskian, wronskian


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        t = f"{self.seconds:.2f}s"
        if self.budget is not None:
            t += f" (budget {self.budget:g}s)"
        return f"[{status}] {self.name}: {self.detail} [{t}]"


def _timed(name: str, budget: float | None, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        ok = False
        detail += f"; over time budget ({dt:.1f}s > {budget:g}s)"
    return CheckResult(name, ok, detail, dt, budget)


Z = EntireExpr.var()
ONE = EntireExpr.const(1)
EXP_Z = EntireExpr.exp_of(Poly.x())
CURVE_1ZE = HolomorphicCurve((ONE, Z, EXP_Z))


# -- random expressions ---------------------------------------------------------------

def random_rational(rng: random.Random, lo: int = -4, hi: int = 4, den: int = 3) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, den))


def random_gaussian(rng: random.Random, complex_prob: float = 0.3) -> GaussianRational:
    im = random_rational(rng) if rng.random() < complex_prob else 0
    return GaussianRational(random_rational(rng), im)


def random_poly(rng: random.Random, max_deg: int = 2) -> Poly:
    return Poly([random_gaussian(rng) for _ in range(rng.randint(0, max_deg) + 1)])


def random_component(rng: random.Random, max_terms: int = 2, max_deg: int = 2,
                     exp_deg: int = 1) -> EntireExpr:
    """Non-zero sum of P(z) e^{Q(z)} terms with small integer-ish data."""
    while True:
        e = EntireExpr()
        for _ in range(rng.randint(1, max_terms)):
            q = Poly([0] + [rng.randint(-2, 2) for _ in range(rng.randint(0, exp_deg))])
            e = e + EntireExpr.exp_of(q) * EntireExpr.poly(random_poly(rng, max_deg).coeffs)
        if not e.is_zero():
            return e


def random_points(rng: random.Random, k: int, scale: float = 1.5) -> np.ndarray:
    return np.array([complex(rng.uniform(-scale, scale), rng.uniform(-scale, scale))
                     for _ in range(k)])


def _rel_close(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(np.abs(a - b) <= tol * np.maximum(1e-300, np.maximum(np.abs(a), np.abs(b)))))


def wronskian_identity_trial(rng: random.Random) -> list[str]:
    """One randomized trial of the four identities; returns failures."""
    k = rng.choice([1, 2, 2, 3])
    fs = [random_component(rng) for _ in range(k)]
    phi = EntireExpr.poly(random_poly(rng, 2).coeffs)
    while phi.is_zero():
        phi = EntireExpr.poly(random_poly(rng, 2).coeffs)
    bad = []
    W = wronskian(fs)
    # 1: W(phi f) = phi^k W(f), exact
    if wronskian([phi * f for f in fs]) != (phi ** k) * W:
        bad.append("W(phi f) != phi^(n+1) W(f)")
    # 2: W(f A) = det(A) W(f), exact
    A = [[random_gaussian(rng, 0.0) for _ in range(k)] for _ in range(k)]
    fA = []
    for col in range(k):
        acc = EntireExpr()
        for row in range(k):
            if A[row][col]:
                acc = acc + fs[row] * A[row][col]
        fA.append(acc)
    if wronskian(fA) != W * det(A):
        bad.append("W(fA) != det(A) W(f)")
    pts = random_points(rng, 20)
    mask = np.ones(len(pts), dtype=bool)
    for f in fs + [phi]:
        mask &= np.abs(f.evaluate(pts)) > 1e-6
    pts = pts[mask]
    if len(pts) == 0:
        return bad
    # 3: Delta(phi f) = Delta(f), pointwise
    d1 = log_wronskian([phi * f for f in fs]).evaluate(pts)
    d0 = log_wronskian(fs).evaluate(pts)
    if not _rel_close(d1, d0, 1e-9) and not np.all(np.abs(d1 - d0) <= 1e-9 * (1 + np.abs(d0))):
        bad.append("Delta(phi f) != Delta(f)")
    # 4: W = (prod f) Delta, pointwise
    prod = np.ones(len(pts), dtype=complex)
    for f in fs:
        prod = prod * f.evaluate(pts)
    lhs = W.evaluate(pts)
    rhs = prod * d0
    if not np.all(np.abs(lhs - rhs) <= 1e-9 * np.maximum(np.abs(lhs), np.abs(rhs)) + 1e-12):
        bad.append("W != prod(f) Delta")
    return bad


# -- random hyperplane families -----------------------------------------------------------

def random_family(rng: random.Random, n: int, N: int, q: int) -> HyperplaneFamily:
    """Random family with repeated and subspace-confined members, so that the
    result is often in N-subgeneral but not general position."""
    base: list[tuple] = []
    sub = [tuple(rng.randint(-3, 3) for _ in range(n + 1)) for _ in range(2)]
    while len(base) < q:
        u = rng.random()
        if u < 0.35 and base:
            v = rng.choice(base)
        elif u < 0.55:
            a, b = rng.randint(-2, 2), rng.randint(-2, 2)
            v = tuple(a * x + b * y for x, y in zip(*sub))
        else:
            v = tuple(rng.randint(-3, 3) for _ in range(n + 1))
        if any(v):
            base.append(v)
    return HyperplaneFamily(tuple(hyperplane(*v) for v in base), n, N)


def nochka_families(seed: int = 2024, count: int = 24):
    rng = random.Random(seed)
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        n = rng.randint(1, 3)
        N = rng.randint(n, 4)
        lo = 2 * N - n + 2
        if lo > 10:
            continue
        q = rng.randint(max(lo, N + 1), 10)
        F = random_family(rng, n, N, q)
        if check_position(F):
            out.append(F)
    return out, tries


# -- criteria ----------------------------------------------------------------------------

def criterion_1() -> CheckResult:
    def run():
        f = HolomorphicCurve((ONE, Z))
        res = fmt_residual(f, hyperplane(1, 1), EUCLIDEAN_PLANE, range(2, 51), 4096)
        target = 0.5 * math.log(2)
        err = float(np.max(np.abs(res.residual - target)))
        return err <= 1e-8, f"max |m+N-T - log sqrt 2| = {err:.3e} over r=2..50 (tol 1e-8)"
    return _timed("1 FMT exactness", 1.0, run)


def criterion_2(trials: int = 1000, seed: int = 11) -> CheckResult:
    def run():
        if wronskian([ONE, Z, Z * Z]) != EntireExpr.const(2):
            return False, "W(1, z, z^2) != 2"
        rng = random.Random(seed)
        failures = []
        for t in range(trials):
            for msg in wronskian_identity_trial(rng):
                failures.append((t, msg))
        ok = not failures
        return ok, f"W(1,z,z^2)=2 exactly; {trials} randomized trials x 4 identities, {len(failures)} failures"
    return _timed("2 Wronskian identities", 10.0, run)


def criterion_3() -> CheckResult:
    def run():
        fams, tries = nochka_families()
        bad = 0
        nonuniform = 0
        for F in fams:
            W = compute_weights(F)
            if verify_weights(F, W):
                bad += 1
            if len(set(W.gamma_j)) > 1:
                nonuniform += 1
        return bad == 0 and len(fams) >= 20, (
            f"{len(fams)} families verified exactly ({nonuniform} with non-uniform weights), "
            f"{bad} failures")
    return _timed("3 Nochka weights", 60.0, run)


CRITERION4_FAMILIES = [
    [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)],
    [(1, 0, 0), (0, 0, 1), (1, 1, 0), (1, 2, 3)],
    [(1, 1, -1), (1, 0, 0), (0, 1, 0), (0, 0, 1)],
    [(2, 1, -2), (1, -1, 1), (0, 1, 3), (1, 2, 0), (3, 0, 1)],
    [(1, 2, -1), (-2, 1, 1), (1, 0, 2), (0, 3, -1), (1, 1, 1)],
]


def criterion_4(radius: float = 40.0) -> CheckResult:
    def run():
        total = 0
        bad = 0
        for rows in CRITERION4_FAMILIES:
            F = HyperplaneFamily(tuple(hyperplane(*v) for v in rows), 2, 2)
            if not check_position(F):
                return False, f"family {rows} is not in general position"
            W = compute_weights(F)
            checks = divisor_inequality(CURVE_1ZE, F, W, radius)
            total += len(checks)
            bad += sum(not c.ok for c in checks)
        return bad == 0, (f"{total} points (zeros of W and of H_j o f in D({radius:g})) over "
                          f"{len(CRITERION4_FAMILIES)} families, {bad} violations")
    return _timed("4 truncated divisor inequality", 30.0, run)


def random_kappa(rng: random.Random, r_max: float = 10.0) -> KappaProfile:
    k = rng.randint(1, 5)
    ts = sorted(rng.uniform(0.1, r_max) for _ in range(k))
    vals = [-rng.uniform(0, 0.5)]
    for _ in range(k):
        vals.append(vals[-1] - rng.uniform(0, 0.8))
    return KappaProfile.piecewise([(0.0, vals[0])] + list(zip(ts, vals[1:])))


def criterion_5(seed: int = 5) -> CheckResult:
    def run():
        sol = solve_jacobi(KappaProfile.constant(-1.0), 10.0, 1e-4)
        err = float(np.max(np.abs(sol.G - np.sinh(sol.grid))))
        rng = random.Random(seed)
        viol = 0
        for _ in range(50):
            k = random_kappa(rng)
            assert k.admissible()
            rep = check_jacobi_bounds(solve_jacobi(k, 10.0, 1e-4), k)
            viol += rep.violations
        return err <= 1e-8 and viol == 0, (
            f"max |G - sinh| on [0,10] = {err:.2e}; 50 random profiles, {viol} bound violations")
    return _timed("5 Jacobi ODE", 10.0, run)


BM_SEED = 7
BM_PATHS = 100_000
BM_DT = 1e-4


def criterion_6(threads: int | None = None, stats=None) -> CheckResult:
    from .stochastic import PathConfig, check_exit_time_bound, ks_uniform_angles, simulate_exit

    def run():
        st = stats or simulate_exit(PathConfig(EUCLIDEAN_PLANE, 1.0, BM_DT, BM_SEED, BM_PATHS),
                                    ["one"], threads=threads)
        m, se = st.tau_mean_se
        _, p = ks_uniform_angles(st)
        bound = check_exit_time_bound(st, 1.0)
        ok = abs(m - 0.5) <= 3 * se and p > 0.01 and bound.passed
        return ok, (f"mean tau = {m:.5f} +- {se:.5f} (z = {(m - 0.5) / se:+.2f}); KS p = {p:.3f}; "
                    f"mean + 3SE = {m + 3 * se:.4f} <= 4")
    return _timed("6 Brownian motion, plane", 120.0, run)


HYPERBOLIC_INTEGRANDS = ["one", "rho2", "rho_cos", "lap_log1p_abs2"]


def criterion_7(threads: int | None = None, stats_by_r=None) -> CheckResult:
    from .stochastic import PathConfig, check_coarea, check_dynkin, simulate_exit

    def run():
        parts = []
        ok = True
        for r in (1.0, 2.0):
            cfg = PathConfig(POINCARE_DISC, r, BM_DT, BM_SEED, BM_PATHS)
            st = (stats_by_r or {}).get(r) or simulate_exit(cfg, HYPERBOLIC_INTEGRANDS, threads=threads)
            for name in ("one", "rho2", "rho_cos"):
                rep = check_coarea(st, name)
                ok &= rep.passed
                parts.append(f"r={r:g} {name}: z={rep.zscore:.2f}")
            rep = check_dynkin(cfg, "log1p_abs2", st)
            ok &= rep.passed
            parts.append(f"r={r:g} dynkin: z={rep.zscore if rep.se else 0:.2f}")
        return ok, "; ".join(parts)
    return _timed("7 Brownian motion, disc", 300.0, run)


def criterion_8() -> CheckResult:
    """m(r, psi'/psi) <= (3/2) log T(r, psi) - 1 for psi = e^{z^2}, r in [3, 40]."""
    def run():
        psi = MeromorphicFn.entire(EntireExpr.exp_of(Poly.x() ** 2))
        A, B = psi.log_derivative_pair(1)
        radii = np.arange(3.0, 40.0 + 1e-9, 0.5)
        worst = math.inf
        worst_r = None
        first_ok = None
        for r in radii:
            m_cf, T_cf = math.log(2 * r), r * r / math.pi
            m = proximity_pair(A, B, EUCLIDEAN_PLANE, r, 4096)
            T = t_of_meromorphic(psi, EUCLIDEAN_PLANE, r, 4096)
            # the log+ kink limits the trapezoid rule to O(h^2) for T
            if abs(m - m_cf) > 1e-9 or abs(T - T_cf) > 1e-5 * T_cf:
                return False, f"quadrature disagrees with closed form at r={r}"
            margin = 1.5 * math.log(T_cf) - m_cf
            if margin < worst:
                worst, worst_r = margin, r
            if margin >= 1 and first_ok is None:
                first_ok = r
        ok = worst >= 1.0
        return ok, (f"min margin (3/2)log T - m = {worst:.4f} at r={worst_r:g} (need >= 1); "
                    f"margin >= 1 from r={first_ok}")
    return _timed("8 logarithmic derivative lemma", 1.0, run)


CRITERION9_LINES = [(1, 0, 0), (0, 0, 1), (1, 1, 0), (1, 2, 3)]


def criterion_9() -> CheckResult:
    def run():
        F = HyperplaneFamily(tuple(hyperplane(*v) for v in CRITERION9_LINES), 2, 2)
        W = compute_weights(F)
        res = smt_margin(CURVE_1ZE, F, W, EUCLIDEAN_PLANE, np.arange(2.0, 40.0 + 1e-9, 1.0))
        a, _, c = res.fit.coef
        ok = res.fit.max_excess <= 0.5 and res.defect_sum <= 3 + 0.1
        return ok, (f"fit a={a:.3g}, c={c:.3g}, max excess {res.fit.max_excess:.3f} (<= 0.5); "
                    f"defect sum {res.defect_sum:.3f} (<= 3.1)")
    return _timed("9 second main theorem margin", 60.0, run)


def criterion_10(workdir, threads=(1, 2)) -> CheckResult:
    """Run the Monte Carlo batteries through the CLI with different thread
    counts and compare the CSV bytes."""
    import subprocess
    import sys
    from pathlib import Path

    def run():
        wd = Path(workdir)
        runs = [("plane", 1.0, "one"), ("disc", 1.0, ",".join(HYPERBOLIC_INTEGRANDS)),
                ("disc", 2.0, ",".join(HYPERBOLIC_INTEGRANDS))]
        same = []
        for surf, r, ints in runs:
            blobs = []
            for th in threads:
                out = wd / f"bm_{surf}_{r:g}_t{th}.csv"
                per = wd / f"bm_{surf}_{r:g}_t{th}_paths.csv"
                cmd = [sys.executable, "-m", "nevlab.cli", "bm", "--surface", surf,
                       "--radius", str(r), "--dt", str(BM_DT), "--paths", str(BM_PATHS),
                       "--seed", str(BM_SEED), "--integrands", ints, "--threads", str(th),
                       "--deterministic", "--out", str(out), "--paths-out", str(per)]
                subprocess.run(cmd, check=False, capture_output=True)
                if not out.exists() or not per.exists():
                    return False, f"CLI run failed for {surf} r={r:g} threads={th}"
                blobs.append(out.read_bytes() + per.read_bytes())
            same.append(all(b == blobs[0] for b in blobs))
        return all(same), f"{sum(same)}/{len(same)} configurations byte-identical across threads {threads}"
    return _timed("10 determinism", None, run)


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}
