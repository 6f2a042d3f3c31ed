from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from nevlab.checks import CRITERION9_LINES, CURVE_1ZE, ONE, Z
from nevlab.cli import EXIT_CHECK, EXIT_INPUT, EXIT_OK, RunConfig, main, parse_radii
from nevlab.curves import HolomorphicCurve, HyperplaneFamily, hyperplane


def problem(tmp_path, curve, rows, n, N, name="p.json"):
    F = HyperplaneFamily(tuple(hyperplane(*v) for v in rows), n, N)
    obj = {"hyperplanes": F.to_json()}
    if curve is not None:
        obj["curve"] = curve.to_json()
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def header(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.startswith("# ") and ":" in line:
            k, v = line[2:].split(":", 1)
            out[k] = v.strip()
    return out


def body(text: str) -> list[list[str]]:
    return [ln.split(",") for ln in text.splitlines() if not ln.startswith("#")]


# -- config helpers ------------------------------------------------------------------------

def test_parse_radii():
    assert parse_radii("2:5:1") == [2.0, 3.0, 4.0, 5.0]
    assert parse_radii("1.5,2") == [1.5, 2.0]
    for bad in ("5:2:1", "1:2:0", "1:2", "a:b:c"):
        with pytest.raises(ValueError):
            parse_radii(bad)


def test_config_echo_omits_output_path():
    a = RunConfig("fmt", surface="plane", seed=3, output="x.csv")
    b = RunConfig("fmt", surface="plane", seed=3, output="y.csv")
    assert a.echo() == b.echo()
    assert "x.csv" not in a.echo()


# -- subcommands ------------------------------------------------------------------------------

def test_fmt_writes_csv(tmp_path):
    inp = problem(tmp_path, HolomorphicCurve((ONE, Z)), [(1, 1)], 1, 1)
    out = tmp_path / "fmt.csv"
    assert main(["fmt", "--in", inp, "--radii", "2:10:1", "--out", str(out), "--deterministic"]) == EXIT_OK
    text = out.read_text()
    h = header(text)
    assert text.startswith("# nevlab ")
    assert h["seed"] == "none"
    assert "generated" not in h
    rows = body(text)
    assert rows[0] == ["r", "T", "m_1", "N_1", "residual_1"]
    assert len(rows) == 1 + 9
    for row in rows[1:]:
        assert abs(float(row[4]) - 0.34657359027997264) <= 1e-8
        # 17 significant digits round-trip the double
        assert float(row[1]) == float("%.17g" % float(row[1]))


def test_fmt_timestamp_without_deterministic(tmp_path):
    inp = problem(tmp_path, HolomorphicCurve((ONE, Z)), [(1, 1)], 1, 1)
    out = tmp_path / "fmt.csv"
    assert main(["fmt", "--in", inp, "--radii", "2:3:1", "--out", str(out)]) == EXIT_OK
    assert "generated" in header(out.read_text())


def test_fmt_check_failure_exit_code(tmp_path):
    inp = problem(tmp_path, CURVE_1ZE, [(1, 1, 1)], 2, 2)
    # a tolerance no quadrature can meet
    assert main(["fmt", "--in", inp, "--radii", "2:20:2", "--tol", "0", "--out",
                 str(tmp_path / "o.csv")]) == EXIT_CHECK


def test_nochka_prints_fractions(tmp_path, capsys):
    inp = problem(tmp_path, None, [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)], 2, 2)
    assert main(["nochka", "--in", inp]) == EXIT_OK
    first = capsys.readouterr().out.splitlines()[0]
    assert first == "1/1 1/1 1/1 1/1"


def test_smt_subcommand(tmp_path):
    inp = problem(tmp_path, CURVE_1ZE, CRITERION9_LINES, 2, 2)
    out = tmp_path / "smt.csv"
    assert main(["smt", "--in", inp, "--radii", "2:40:1", "--out", str(out), "--deterministic"]) == EXIT_OK
    text = out.read_text()
    rows = body(text)
    assert rows[0][-1] == "margin" and "Ntrunc_4" in rows[0]
    h = header(text)
    assert h["weights"] == "1/1 1/1 1/1 1/1"
    assert "budget: 3" in h["defect_sum"]


def test_ldl_subcommand(tmp_path):
    psi = tmp_path / "psi.json"
    psi.write_text(json.dumps({"exp": {"poly": [[0, 1, 0, 1], [0, 1, 0, 1], [1, 1, 0, 1]]}}))
    out = tmp_path / "ldl.csv"
    assert main(["ldl", "--psi", str(psi), "--radii", "3:20:1", "--out", str(out)]) == EXIT_OK
    rows = body(out.read_text())
    assert rows[0] == ["r", "m", "T", "leading", "error_term", "fit_residual"]
    assert len(rows) == 19


def test_ode_subcommand(tmp_path):
    out = tmp_path / "ode.csv"
    assert main(["ode", "--kappa", '{"constant": -1}', "--rmax", "2", "--step", "1e-3",
                 "--every", "100", "--out", str(out), "--deterministic"]) == EXIT_OK
    rows = body(out.read_text())
    assert rows[0] == ["t", "G", "Gprime"]
    assert float(rows[-1][0]) == pytest.approx(2.0)


def test_bm_small_run(tmp_path):
    out = tmp_path / "bm.csv"
    code = main(["bm", "--surface", "plane", "--radius", "1", "--dt", "1e-3", "--paths", "2000",
                 "--seed", "7", "--out", str(out), "--deterministic"])
    assert code in (EXIT_OK, EXIT_CHECK)
    text = out.read_text()
    assert header(text)["seed"] == "7"
    rows = body(text)
    assert rows[0] == ["quantity", "estimate", "reference", "se", "pass"]
    assert rows[1][0] == "mean_tau"


def test_bm_output_independent_of_threads(tmp_path):
    blobs = []
    for th in (1, 3):
        out, per = tmp_path / f"s{th}.csv", tmp_path / f"p{th}.csv"
        main(["bm", "--surface", "disc", "--radius", "1", "--dt", "1e-3", "--paths", "3000",
              "--seed", "5", "--integrands", "one,rho2", "--threads", str(th), "--deterministic",
              "--out", str(out), "--paths-out", str(per)])
        blobs.append(out.read_bytes() + per.read_bytes())
    assert blobs[0] == blobs[1]


def test_same_seed_same_bytes(tmp_path):
    args = ["bm", "--surface", "plane", "--radius", "1", "--dt", "1e-3", "--paths", "1000",
            "--seed", "11", "--deterministic"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    main(["bm", "--surface", "plane", "--radius", "1", "--dt", "1e-3", "--paths", "1000",
          "--seed", "12", "--deterministic", "--out", str(tmp_path / "c.csv")])
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


# -- errors ---------------------------------------------------------------------------------

def test_input_errors(tmp_path, capsys):
    assert main(["fmt", "--in", str(tmp_path / "missing.json")]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text('{"curve": [1,\n  2')
    assert main(["fmt", "--in", str(bad)]) == EXIT_INPUT
    assert "line 2" in capsys.readouterr().err
    inp = problem(tmp_path, HolomorphicCurve((ONE, Z)), [(1, 1)], 1, 1)
    assert main(["fmt", "--in", inp, "--radii", "5:2:1"]) == EXIT_INPUT
    assert main(["bm", "--integrands", "nope", "--paths", "10"]) == EXIT_INPUT
    assert main(["bm", "--paths", "10", "--threads", "0"]) == EXIT_INPUT
    assert main(["ode", "--kappa", '{"constant": 1}']) == EXIT_INPUT
    assert main(["nosuch"]) == EXIT_INPUT


def test_position_violation_is_input_error(tmp_path):
    inp = problem(tmp_path, CURVE_1ZE, [(1, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], 2, 2)
    assert main(["smt", "--in", inp, "--radii", "2:4:1"]) == EXIT_INPUT


def test_env_thread_fallback(tmp_path):
    env = dict(os.environ, NEVLAB_THREADS="2")
    env.pop("NUMBA_NUM_THREADS", None)
    outs = []
    for extra, e in (([], env), (["--threads", "1"], dict(os.environ))):
        out = tmp_path / f"bm{len(outs)}.csv"
        proc = subprocess.run([sys.executable, "-m", "nevlab.cli", "bm", "--paths", "500", "--dt", "1e-3",
                               "--seed", "3", "--deterministic", "--out", str(out), *extra],
                              env=e, capture_output=True, text=True)
        assert proc.returncode in (EXIT_OK, EXIT_CHECK), proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    bad = dict(os.environ, NEVLAB_THREADS="many")
    proc = subprocess.run([sys.executable, "-m", "nevlab.cli", "bm", "--paths", "10"], env=bad,
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_INPUT


def test_verify_fmt_suite(capsys):
    assert main(["verify", "--suite", "fmt"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("[PASS] 1 ")


def test_verify_ldl_suite_reports_failure(capsys):
    assert main(["verify", "--suite", "ldl"]) == EXIT_CHECK
    assert capsys.readouterr().out.startswith("[FAIL] 8 ")
