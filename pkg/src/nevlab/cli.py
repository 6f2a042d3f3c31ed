"""Command-line entry point: ``nevlab {fmt,ldl,smt,nochka,bm,ode,verify}``.

Every CSV starts with a '#' header block (tool version, config echo, seed);
floats are written with 17 significant digits.  Exit status: 0 success,
1 input error, 2 a check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CHECK = 2


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    inputs: dict[str, str] = field(default_factory=dict)
    surface: str | None = None
    radii: list[float] | None = None
    nodes: int | None = None
    monte_carlo: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    output: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def echo(self) -> str:
        d = {k: v for k, v in asdict(self).items()
             if k != "output" and v not in (None, {}, [])}
        return json.dumps(d, sort_keys=True)


def parse_radii(text: str) -> list[float]:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(x) for x in text.split(",")]
        if len(parts) != 3:
            raise ValueError
        start, stop, step = map(float, parts)
    except ValueError:
        raise InputError(f"--radii: expected start:stop:step or a comma list, got {text!r}")
    if not start < stop:
        raise InputError(f"--radii: start ({start:g}) must be below stop ({stop:g})")
    if not step > 0:
        raise InputError(f"--radii: step must be positive, got {step:g}")
    n = int(round((stop - start) / step))
    out = [start + k * step for k in range(n + 1) if start + k * step <= stop + 1e-12 * abs(stop)]
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    if hasattr(x, "dtype"):
        return "%.17g" % float(x)
    return str(x)


def write_csv(path: str | None, cfg: RunConfig, columns: Sequence[str], rows,
              deterministic: bool, extra_header: Sequence[str] = ()) -> None:
    from . import __version__

    lines = [f"# nevlab {__version__}", f"# config: {cfg.echo()}",
             f"# seed: {cfg.seed if cfg.seed is not None else 'none'}"]
    if not deterministic:
        lines.append("# generated: " + time.strftime("%Y-%m-%dT%H:%M:%S%z"))
    lines += [f"# {h}" for h in extra_header]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_json(path: str, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{what}: no such file {path}")
    except json.JSONDecodeError as e:
        raise InputError(f"{what}: {path}: line {e.lineno} column {e.colno}: {e.msg}")


def _load_problem(path: str, need_curve: bool = True, need_planes: bool = True):
    from .curves import HolomorphicCurve, HyperplaneFamily

    obj = _load_json(path, "--in")
    try:
        curve = HolomorphicCurve.from_json(obj["curve"]) if "curve" in obj else None
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"--in: field 'curve': {e}")
    try:
        fam = HyperplaneFamily.from_json(obj["hyperplanes"]) if "hyperplanes" in obj else None
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"--in: field 'hyperplanes': {e}")
    if need_curve and curve is None:
        raise InputError("--in: missing field 'curve'")
    if need_planes and fam is None:
        raise InputError("--in: missing field 'hyperplanes'")
    return curve, fam


# -- subcommands ------------------------------------------------------------------

def cmd_fmt(a) -> int:
    from .nevanlinna import fmt_residual
    from .surfaces import ModelSurface

    f, F = _load_problem(a.input)
    S = ModelSurface(a.surface)
    radii = parse_radii(a.radii)
    cfg = RunConfig("fmt", {"in": a.input}, a.surface, radii, a.nodes, output=a.out)
    cols = ["r", "T"]
    results = [fmt_residual(f, H, S, radii, a.nodes) for H in F.hyperplanes]
    q = len(results)
    cols += [f"m_{j + 1}" for j in range(q)] + [f"N_{j + 1}" for j in range(q)]
    cols += [f"residual_{j + 1}" for j in range(q)]
    rows = []
    for i in range(len(radii)):
        rows.append([results[0].radii[i], results[0].T[i]]
                    + [r.m[i] for r in results] + [r.N[i] for r in results]
                    + [r.residual[i] for r in results])
    hdr = ["weil: " + " ".join("%.17g" % r.weil for r in results)]
    write_csv(a.out, cfg, cols, rows, a.deterministic, hdr)
    worst = max(r.max_error for r in results)
    ok = worst <= a.tol
    print(f"fmt: max |m + N - T - lambda| = {worst:.3e} (tol {a.tol:g}) -> {'ok' if ok else 'FAIL'}",
          file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_ldl(a) -> int:
    from .nevanlinna import MeromorphicFn, ldl_check
    from .surfaces import ModelSurface

    obj = _load_json(a.psi, "--psi")
    try:
        psi = MeromorphicFn.from_json(obj.get("psi", obj))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"--psi: {e}")
    S = ModelSurface(a.surface)
    radii = parse_radii(a.radii)
    cfg = RunConfig("ldl", {"psi": a.psi}, a.surface, radii, a.nodes, output=a.out,
                    extra={"order": a.order, "allowance": a.allowance})
    rep = ldl_check(psi, S, radii, a.order, a.nodes, a.allowance)
    cols = ["r", "m", "T", "leading", "error_term", "fit_residual"]
    rows = zip(rep.radii, rep.m, rep.T, rep.leading, rep.error_term, rep.fit.residual)
    hdr = [f"fit: C0={rep.fit.coef[0]:.17g} C1={rep.fit.coef[1]:.17g}",
           f"exceptional_measure: {rep.fit.exceptional_measure:.17g}"]
    write_csv(a.out, cfg, cols, rows, a.deterministic, hdr)
    ok = rep.fit.max_excess <= a.allowance
    print(f"ldl: max fit excess {rep.fit.max_excess:.4g} (allowance {a.allowance:g}); "
          f"violating measure {rep.fit.exceptional_measure:.3g}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_smt(a) -> int:
    from .nochka import compute_weights
    from .nevanlinna import smt_margin
    from .surfaces import ModelSurface

    f, F = _load_problem(a.input)
    S = ModelSurface(a.surface)
    radii = parse_radii(a.radii)
    cfg = RunConfig("smt", {"in": a.input}, a.surface, radii, a.nodes, output=a.out,
                    extra={"allowance": a.allowance})
    W = compute_weights(F)
    res = smt_margin(f, F, W, S, radii, a.nodes, a.allowance)
    q = F.q
    cols = (["r", "T"] + [f"m_{j + 1}" for j in range(q)] + [f"N_{j + 1}" for j in range(q)]
            + [f"Ntrunc_{j + 1}" for j in range(q)] + ["margin"])
    rows = [[res.radii[i], res.T[i], *res.m[i], *res.N[i], *res.N_trunc[i], res.margin[i]]
            for i in range(len(res.radii))]
    a_, b_, c_ = res.fit.coef
    hdr = ["weights: " + " ".join(W.as_strings()),
           f"fit: a={a_:.17g} b={b_:.17g} c={c_:.17g} max_excess={res.fit.max_excess:.17g}",
           "defects: " + " ".join("%.17g" % d.delta for d in res.defects),
           f"defect_sum: {res.defect_sum:.17g} budget: {res.budget}"]
    write_csv(a.out, cfg, cols, rows, a.deterministic, hdr)
    ok = res.fit.max_excess <= a.allowance and res.defect_sum <= res.budget + 0.1
    print(f"smt: coefficient {res.coefficient}, max fit excess {res.fit.max_excess:.4g}, "
          f"defect sum {res.defect_sum:.4g} / {res.budget}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_nochka(a) -> int:
    from .nochka import compute_weights, verify_weights

    _, F = _load_problem(a.input, need_curve=False)
    W = compute_weights(F)
    print(" ".join(W.as_strings()))
    print(f"gamma={W.gamma.numerator}/{W.gamma.denominator}")
    if a.out:
        cfg = RunConfig("nochka", {"in": a.input}, output=a.out)
        write_csv(a.out, cfg, ["j", "gamma_j"],
                  [[j + 1, s] for j, s in enumerate(W.as_strings())], a.deterministic,
                  [f"gamma: {W.gamma.numerator}/{W.gamma.denominator}"])
    return EXIT_OK if not verify_weights(F, W) else EXIT_CHECK


def cmd_bm(a) -> int:
    from .stochastic import (INTEGRANDS, PathConfig, check_coarea, check_exit_time_bound,
                             check_mean, expected_exit_time, ks_uniform_angles, simulate_exit)
    from .surfaces import ModelSurface

    ints = [s for s in a.integrands.split(",") if s]
    for s in ints:
        if s not in INTEGRANDS:
            raise InputError(f"--integrands: unknown name {s!r}; known: {', '.join(sorted(INTEGRANDS))}")
    if "one" not in ints:
        ints.insert(0, "one")
    if a.paths < 1 or a.dt <= 0 or a.radius <= 0:
        raise InputError("--paths, --dt and --radius must be positive")
    S = ModelSurface(a.surface)
    pc = PathConfig(S, a.radius, a.dt, a.seed, a.paths)
    cfg = RunConfig("bm", surface=a.surface, seed=a.seed, output=a.out,
                    monte_carlo={"radius": a.radius, "dt": a.dt, "paths": a.paths,
                                 "integrands": ints})
    st = simulate_exit(pc, ints, threads=a.threads)
    rows = []
    ok = True
    ref = expected_exit_time(S, a.radius)
    rep = check_mean("tau", st.tau_samples, ref)
    rows.append(["mean_tau", rep.estimate, rep.reference, rep.se, int(rep.passed)])
    ok &= rep.passed
    if a.paths >= 10_000:
        b = check_exit_time_bound(st, a.radius)
        rows.append(["tau_bound_4r2", b.estimate, b.reference, b.se, int(b.passed)])
        ok &= b.passed
    D, p = ks_uniform_angles(st)
    rows.append(["ks_exit_angle", D, p, 0.0, int(p > 0.01)])
    ok &= p > 0.01
    for name in ints:
        if name == "one" or name.startswith("lap_") or name == "zero":
            continue
        rep = check_coarea(st, name)
        rows.append([f"coarea_{name}", rep.estimate, rep.reference, rep.se, int(rep.passed)])
        ok &= rep.passed
    from .stochastic import DYNKIN_FUNCTIONS, check_dynkin
    for u in DYNKIN_FUNCTIONS.values():
        if u.laplacian in ints:
            rep = check_dynkin(pc, u, st)
            rows.append([f"dynkin_{u.name}", rep.estimate, rep.reference, rep.se, int(rep.passed)])
            ok &= rep.passed
    write_csv(a.out, cfg, ["quantity", "estimate", "reference", "se", "pass"], rows, a.deterministic)
    if a.paths_out:
        cols = ["path", "tau", "exit_re", "exit_im"] + [f"int_{n}" for n in ints]
        per = (
            [i, st.tau_samples[i], st.exit_points[i].real, st.exit_points[i].imag,
             *[st.functionals[n][i] for n in ints]] for i in range(st.n))
        write_csv(a.paths_out, cfg, cols, per, a.deterministic)
    m, se = st.tau_mean_se
    print(f"bm: mean tau = {m:.6f} +- {se:.6f} (reference {ref:.6f}) -> {'ok' if ok else 'FAIL'}",
          file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_ode(a) -> int:
    import numpy as np

    from .surfaces import KappaProfile, check_jacobi_bounds, solve_jacobi

    try:
        k = KappaProfile.from_json(a.kappa if a.kappa.strip().startswith("{")
                                   else Path(a.kappa).read_text())
    except (OSError, ValueError, KeyError) as e:
        raise InputError(f"--kappa: {e}")
    problems = k.violations()
    if problems:
        raise InputError("--kappa: " + "; ".join(problems))
    if a.step <= 0 or a.rmax <= 0:
        raise InputError("--step and --rmax must be positive")
    sol = solve_jacobi(k, a.rmax, a.step)
    rep = check_jacobi_bounds(sol, k)
    cfg = RunConfig("ode", output=a.out, extra={"kappa": k.to_json(), "rmax": a.rmax,
                                                 "step": a.step, "every": a.every})
    idx = np.arange(0, len(sol.grid), max(1, a.every))
    if idx[-1] != len(sol.grid) - 1:
        idx = np.append(idx, len(sol.grid) - 1)
    rows = ([sol.grid[i], sol.G[i], sol.Gprime[i]] for i in idx)
    hdr = [f"bounds: lower={rep.lower:.17g} integral={rep.integral:.17g} upper={rep.upper:.17g}"]
    write_csv(a.out, cfg, ["t", "G", "Gprime"], rows, a.deterministic, hdr)
    print(f"ode: {rep.violations} bound violations", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_CHECK


SUITES = {
    "fmt": [1], "wronskian": [2], "nochka": [3], "divisor": [4], "jacobi": [5],
    "bm-plane": [6], "bm-disc": [7], "ldl": [8], "smt": [9], "determinism": [10],
    "fast": [1, 2, 3, 4, 5, 8, 9], "all": list(range(1, 11)),
}


def cmd_verify(a) -> int:
    import tempfile

    from .checks import CRITERIA, criterion_10

    ok = True
    for k in SUITES[a.suite]:
        if k == 10:
            with tempfile.TemporaryDirectory() as d:
                res = criterion_10(d)
        elif k in (6, 7):
            res = CRITERIA[k](threads=a.threads)
        else:
            res = CRITERIA[k]()
        print(res.line())
        ok &= res.passed
    return EXIT_OK if ok else EXIT_CHECK


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nevlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, surface=True, out=True):
        if surface:
            sp.add_argument("--surface", choices=["plane", "disc"], default="plane")
        if out:
            sp.add_argument("--out", default=None, help="CSV path (default stdout)")
        sp.add_argument("--deterministic", action="store_true",
                        help="omit the timestamp line from CSV headers")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (fallback: NEVLAB_THREADS)")

    s = sub.add_parser("fmt", help="first main theorem residuals")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--radii", default="2:50:1")
    s.add_argument("--nodes", type=int, default=4096)
    s.add_argument("--tol", type=float, default=1e-6)
    common(s)
    s.set_defaults(func=cmd_fmt)

    s = sub.add_parser("ldl", help="logarithmic derivative lemma check")
    s.add_argument("--psi", required=True, help="JSON with an expression or numerator/denominator")
    s.add_argument("--order", type=int, default=1)
    s.add_argument("--radii", default="2:40:1")
    s.add_argument("--nodes", type=int, default=4096)
    s.add_argument("--allowance", type=float, default=1.0)
    common(s)
    s.set_defaults(func=cmd_ldl)

    s = sub.add_parser("smt", help="second main theorem margin and defects")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--radii", default="2:40:1")
    s.add_argument("--nodes", type=int, default=4096)
    s.add_argument("--allowance", type=float, default=0.5)
    common(s)
    s.set_defaults(func=cmd_smt)

    s = sub.add_parser("nochka", help="exact Nochka weights")
    s.add_argument("--in", dest="input", required=True)
    common(s, surface=False)
    s.set_defaults(func=cmd_nochka)

    s = sub.add_parser("bm", help="Brownian motion exit statistics")
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=1e-4)
    s.add_argument("--paths", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--integrands", default="one")
    s.add_argument("--paths-out", default=None, help="optional per-path CSV")
    common(s)
    s.set_defaults(func=cmd_bm)

    s = sub.add_parser("ode", help="Jacobi comparison ODE")
    s.add_argument("--kappa", default='{"constant": -1}', help="JSON text or file")
    s.add_argument("--rmax", type=float, default=10.0)
    s.add_argument("--step", type=float, default=1e-4)
    s.add_argument("--every", type=int, default=1000, help="write every k-th grid point")
    common(s, surface=False)
    s.set_defaults(func=cmd_ode)

    s = sub.add_parser("verify", help="run the bundled verification suite")
    s.add_argument("--suite", choices=sorted(SUITES), default="fast")
    common(s, surface=False, out=False)
    s.set_defaults(func=cmd_verify)
    return p


def _configure_threads(threads: int | None) -> int | None:
    if threads is None:
        env = os.environ.get("NEVLAB_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise InputError(f"NEVLAB_THREADS: not an integer: {env!r}")
    if threads is not None:
        if threads < 1:
            raise InputError("--threads must be at least 1")
        # the numba pool is sized at import time
        if "numba" not in sys.modules:
            cur = int(os.environ.get("NUMBA_NUM_THREADS", os.cpu_count() or 1))
            os.environ["NUMBA_NUM_THREADS"] = str(max(cur, threads))
    return threads


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors; 2 is reserved for failed checks here
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        a.threads = _configure_threads(getattr(a, "threads", None))
        return a.func(a)
    except InputError as e:
        print(f"nevlab {a.cmd}: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # domain errors from the library are input problems
        from .curves import DimensionMismatch, PositionViolated
        from .zeros import UnsupportedZeroSet
        if isinstance(e, (DimensionMismatch, PositionViolated, UnsupportedZeroSet, KeyError, ValueError)):
            print(f"nevlab {a.cmd}: error: {type(e).__name__}: {e}", file=sys.stderr)
            return EXIT_INPUT
        raise


if __name__ == "__main__":
    sys.exit(main())
