import io
import json
import math
import subprocess
import sys

import pytest

from vfspec.cli import main

OMEGA_VERIFY = ["verify", "--domain", "plane-minus-line:2,0.05", "--field", "-y,x",
                "--function", "exp(2*atan(y/x))", "--lambda", "2"]


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def test_verify_omega():
    code, out, _ = run(OMEGA_VERIFY)
    doc = json.loads(out)
    assert code == 0 and doc["report"]["verdict"] is True
    assert set(doc["report"]) >= {"lambda", "max_abs_residual", "max_rel_residual", "samples",
                                  "verdict"}
    assert doc["header"]["defaults"]["tol"] == 1e-8 and doc["header"]["seed"] == 42


def test_expect_true_exit_code():
    argv = OMEGA_VERIFY[:-1] + ["1.9", "--expect-true"]
    code, out, _ = run(argv)
    assert code == 1 and json.loads(out)["report"]["verdict"] is False
    assert run(OMEGA_VERIFY + ["--expect-true"])[0] == 0


def test_flow_csv(tmp_path):
    path = tmp_path / "traj.csv"
    code, _, _ = run(["flow", "--domain", "disc:0,0,1", "--field", "-y,x", "--x0", "0.5,0",
                      "--tmax", "10", "--dt", "0.001", "--out", str(path)])
    assert code == 0
    lines = path.read_text().splitlines()
    assert all(line.startswith("#") for line in lines[:lines.index("t,x,y")])
    rows = [line for line in lines if not line.startswith("#")][1:]
    assert len(rows) == 10001
    assert [float(v) for v in rows[0].split(",")] == [0.0, 0.5, 0.0]
    meta = json.loads(lines[-1][2:])
    assert abs(meta["period"] - 2 * math.pi) < 1e-6 and meta["exited"] is False


def test_flow_exit_metadata():
    code, out, _ = run(["flow", "--domain", "punctured-disc:1,0.01", "--field", "x,y",
                        "--x0", "0.1,0", "--tmax", "3", "--expect-true"])
    meta = json.loads(out.splitlines()[-1][2:])
    lo, hi = meta["exit_bracket"]
    assert code == 1 and lo <= math.log(10) <= hi


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["verify", "--domain", "box:1", "--field", "-y,x", "--function", "x", "--lambda", "1"],
    ["verify", "--domain", "box:-1,1,-1,1", "--field", "-y,x", "--function", "x+", "--lambda", "1"],
    ["verify", "--domain", "box:-1,1,-1,1", "--field", "-y,x", "--function", "l*x", "--lambda", "1"],
    ["verify", "--domain", "box:-1,1,-1,1", "--field", "-y", "--function", "x", "--lambda", "1"],
    ["verify", "--domain", "box:-1,1,-1,1", "--field", "-y,x", "--function", "x", "--lambda", "a"],
    ["verify", "--domain", "box:-1,1,-1,1", "--field", "-y,x", "--function", "x", "--lambda", "1",
     "--resolution", "0"],
    ["scan", "--domain", "box:-1,1,-1,1", "--field", "-y,x", "--template", "x", "--lambdas", "1"],
    ["catalog", "run", "nope"],
    ["flow", "--domain", "disc:0,0,1", "--field", "-y,x", "--x0", "0.5", "--tmax", "1"],
])
def test_usage_errors(argv):
    code, out, err = run(argv)
    assert code == 2 and out == ""
    assert json.loads(err)["error"]["type"] == "usage"


def test_runtime_failure_is_structured():
    code, out, err = run(["verify", "--domain", "box:-1,1,-1,1", "--field", "-y,x",
                          "--function", "log(x)", "--lambda", "1"])
    doc = json.loads(err)
    assert code == 3 and doc["error"]["class"] == "EvalDomainError" and "log(x)" in doc["error"]["message"]


def test_estimate():
    code, out, _ = run(["estimate", "--domain", "plane-minus-line:2,0.1,2", "--field", "-y,x",
                        "--function", "exp(2*atan(y/x))", "--x0", "1,0", "--tmax", "1.3",
                        "--lambda", "2", "--expect-true"])
    rep = json.loads(out)["report"]
    assert code == 0 and abs(rep["lambda_hat"] - 2) < 1e-4 and rep["flow_law_deviation"] < 1e-6


def test_scan():
    code, out, _ = run(["scan", "--domain", "plane-minus-line:2,0.1,2", "--field", "-y,x",
                        "--template", "exp({lambda}*atan(y/x))", "--lambdas", "3,-2,0.5",
                        "--resolution", "80", "--expect-true"])
    rep = json.loads(out)["report"]
    assert code == 0 and [e["lambda"] for e in rep["entries"]] == [-2.0, 0.5, 3.0]


def test_battery_and_reproducibility():
    argv = ["battery", "--domain", "torus:2*pi,2*pi", "--field", "1,0", "--resolution", "48",
            "--count", "10", "--seed", "7", "--expect-true"]
    a, b = run(argv), run(argv)
    assert a[0] == 0 and a[1] == b[1]
    c = run(argv[:-3] + ["8", "--expect-true"])
    assert c[1] != a[1]
    assert json.loads(a[1])["report"]["violations"] == 0


def test_norms():
    code, out, _ = run(["norms", "--domain", "box:0,1,0,1", "--function", "x", "--field", "1,0",
                        "--family", "10", "--expect-true"])
    rep = json.loads(out)["report"]
    assert code == 0
    assert abs(rep["h1"] - math.sqrt(4 / 3)) < 1e-4
    assert abs(rep["rayleigh"] - 1 / math.sqrt(4 / 3)) < 1e-3
    assert rep["bound_satisfied"] is True and rep["family"]["satisfied"] is True


@pytest.mark.parametrize("field,verdict", [("-y,x", "killing"), ("x,y", "concurrent"),
                                           ("x^2,0", "none")])
def test_classify(field, verdict):
    code, out, _ = run(["classify", "--domain", "box:-2,2,-2,2", "--field", field,
                        "--resolution", "50", "--expect", verdict])
    assert code == 0 and json.loads(out)["report"]["verdict"] == verdict


def test_dim_probe():
    code, out, _ = run(["dim-probe", "--domain", "box:-2,2,-2,2", "--field", "-y,x",
                        "--function", "x^2+y^2", "--resolution", "60", "--expect-true"])
    assert code == 0 and json.loads(out)["report"]["rank"] == 5


def test_transport():
    code, out, _ = run(["transport", "isometry", "--domain", "plane-minus-line:2,0.1,2",
                        "--field", "-y,x", "--function", "exp(atan(y/x))", "--lambda", "1",
                        "--map", "-x,-y", "--inverse", "-x,-y", "--resolution", "80",
                        "--tol", "1e-9", "--expect-true"])
    rep = json.loads(out)["report"]
    assert code == 0 and rep["isometry_residual"] < 1e-12
    code, out, _ = run(["transport", "commuting", "--domain", "plane-minus-line:2,0.1,2",
                        "--field", "-y,x", "--other", "x,y", "--function", "exp(2*atan(y/x))",
                        "--lambda", "2", "--resolution", "80", "--expect-true"])
    assert code == 0 and json.loads(out)["report"]["zero_image"] is True


def test_catalog_cli():
    code, out, _ = run(["catalog", "list"])
    assert code == 0 and len(json.loads(out)["report"]["entries"]) == 6
    code, out, _ = run(["catalog", "run", "concurrent-plane", "--expect-true"])
    assert code == 0 and json.loads(out)["report"]["mismatches"] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "vfspec", "catalog", "list"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["command"] == "catalog"
