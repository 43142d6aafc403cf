"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and echoed in the pytest terminal summary
(see conftest.py), so ``pytest tests/test_acceptance.py`` shows all eleven.
"""

import io
import math
import subprocess
import sys

import numpy as np
import pytest

from vfspec import kernels
from vfspec._program import compile_exprs
from vfspec.analysis import rayleigh_quotient, sup_norm_field
from vfspec.calculus import DiffeoMap, ScalarField, VectorField, classify
from vfspec.catalog import BUMP
from vfspec.cli import main
from vfspec.expr import eval_dual, evaluate, parse_scalar, to_string
from vfspec.families import bound_family, random_expr, trig_family
from vfspec.flow import integrate
from vfspec.geometry import Metric, build_grid, parse_domain
from vfspec.spectral import (closed_orbit_check, commuting_transport, eigenspace_dim_probe,
                             estimate_eigenvalue, flow_law_check, isometry_transport,
                             power_chain_verify, triviality_battery, verify_eigenpair)

RESULTS: list[str] = []

FLAT = Metric.flat(2)
OMEGA = parse_domain("plane-minus-line:2,0.1,2")   # {|x| >= 0.1, |p| <= 2}
DSTAR = parse_domain("punctured-disc:1,0.01")
BOX = parse_domain("box:-2,2,-2,2")
TORUS = parse_domain("torus:2*pi,2*pi")
OMEGA_LAMBDAS = (-2.0, -1.0, 0.5, 1.0, 3.0)
CANDIDATES = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)


def record(number: int, title: str, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def phi(lam):
    return ScalarField.parse(f"exp(({lam!r})*atan(y/x))", OMEGA)


@pytest.fixture(scope="module")
def omega_grid():
    g = build_grid(OMEGA, FLAT, 120)
    assert len(g) >= 10_000
    return g


def test_criterion_01_omega_eigenpairs(omega_grid):
    X = VectorField.parse("-y,x", OMEGA)
    worst = max(verify_eigenpair(X, phi(lam), lam, omega_grid, 1e-10).max_rel_residual
                for lam in OMEGA_LAMBDAS)
    record(1, "rotation on plane minus line, lambda in {-2,-1,0.5,1,3}", worst < 1e-10,
           f"max rel residual {worst:.2e} over {len(omega_grid)} points")


def test_criterion_02_radial_chain():
    g = build_grid(DSTAR, FLAT, 200)
    X = VectorField.parse("x,y", DSTAR)
    f = ScalarField.parse("sqrt(x^2+y^2)", DSTAR)
    base = verify_eigenpair(X, f, 1.0, g, 1e-10)
    chain = power_chain_verify(X, f, 1.0, 5, g, 1e-7)
    lams = [r.lam for r in chain]
    worst = max(r.max_rel_residual for r in chain)
    ok = base.verdict and base.max_rel_residual < 1e-10 and lams == [1, 2, 3, 4, 5] \
        and all(r.verdict for r in chain)
    record(2, "radial field on punctured disc, r and powers", ok,
           f"base {base.max_rel_residual:.2e}, chain eigenvalues {lams}, worst {worst:.2e}")


def test_criterion_03_concurrent():
    g = build_grid(BOX, FLAT, 200)
    X = VectorField.parse("x,y", BOX)
    rep = classify(X, FLAT, g)
    pair = verify_eigenpair(X, ScalarField.parse("x^2+y^2", BOX), 2.0, g)
    ok = (rep.verdict == "concurrent" and abs(rep.c - 1) < 1e-12 and rep.homothetic_residual < 1e-12
          and rep.concurrent_residual < 1e-12 and pair.verdict)
    record(3, "position field is concurrent, 2c = 2 is an eigenvalue", ok,
           f"verdict {rep.verdict}, c={rep.c!r}, residuals {rep.homothetic_residual:.1e}/"
           f"{rep.concurrent_residual:.1e}, eigenpair {pair.max_rel_residual:.1e}")


def test_criterion_04_killing():
    g = build_grid(BOX, FLAT, 200)
    X = VectorField.parse("-y,x", BOX)
    rep = classify(X, FLAT, g)
    f = ScalarField.parse("x^2+y^2", BOX)
    pair = verify_eigenpair(X, f, 0.0, g)
    probe = eigenspace_dim_probe(X, f, 4, g)
    ok = rep.verdict == "killing" and rep.killing_residual < 1e-12 and pair.verdict and probe.rank == 5
    record(4, "rotation is Killing, |p|^2 in E_0, dim probe rank 5", ok,
           f"verdict {rep.verdict}, residual {rep.killing_residual:.1e}, rank {probe.rank}")


def test_criterion_05_flow_law_and_order():
    X = VectorField.parse("-y,x", OMEGA)
    dev = flow_law_check(X, phi(2.0), 2.0, [1, 0], 1.3, 1e-3)
    plane = VectorField.parse("-y,x", parse_domain("box:-3,3,-3,3"))
    exact = np.array([math.cos(1.3), math.sin(1.3)])
    errs = [np.linalg.norm(integrate(plane, [1, 0], 1.3, dt).end - exact) for dt in (0.1, 0.05, 0.025)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    ok = dev < 1e-6 and all(12 <= r <= 20 for r in ratios)
    record(5, "flow law along the rotation, RK4 order", ok,
           f"deviation {dev:.2e}, halving ratios {', '.join(f'{r:.2f}' for r in ratios)}")


def test_criterion_06_estimation():
    X = VectorField.parse("-y,x", OMEGA)
    errs = [abs(estimate_eigenvalue(X, phi(lam), [1, 0], 1.3).lambda_hat - lam)
            for lam in OMEGA_LAMBDAS]
    radial = estimate_eigenvalue(VectorField.parse("x,y", DSTAR),
                                 ScalarField.parse("sqrt(x^2+y^2)", DSTAR), [0.1, 0], 2.0)
    errs.append(abs(radial.lambda_hat - 1.0))
    record(6, "eigenvalue estimates from orbits", max(errs) < 1e-4,
           f"max |lambda_hat - lambda| = {max(errs):.2e}")


def test_criterion_07_compact_triviality():
    torus_grid = build_grid(TORUS, FLAT, 100)
    X = VectorField.parse("1,0", TORUS)
    fams = trig_family(42, 30, TORUS)
    torus = triviality_battery(X, CANDIDATES, fams, torus_grid)
    bump_grid = build_grid(BOX, FLAT, 200)
    B = VectorField.parse(f"{BUMP}*(-y),{BUMP}*x", BOX)
    bump = triviality_battery(B, CANDIDATES, trig_family(42, 30, BOX), bump_grid)
    orbits = [closed_orbit_check(X, f, [1.0, 2.0], 10.0) for f in fams]
    periods_ok = all(o.period is not None and abs(o.period - 2 * math.pi) < 1e-6 for o in orbits)
    lam_ok = all(o.obstruction_holds and o.return_gap < 1e-6 and abs(o.lambda_hat) < 1e-4
                 for o in orbits)
    worst = max(abs(o.lambda_hat) for o in orbits)
    ok = torus.violations == 0 and bump.violations == 0 and periods_ok and lam_ok
    record(7, "compact triviality on torus and bump field", ok,
           f"false eigenpairs {torus.false_eigenpairs}+{bump.false_eigenpairs}, "
           f"max |lambda_hat| on closed orbits {worst:.1e}")


def test_criterion_08_isometry(omega_grid):
    X = VectorField.parse("-y,x", OMEGA)
    rot = DiffeoMap.parse("-x,-y", "-x,-y", OMEGA, OMEGA)
    rep = isometry_transport(rot, X, phi(1.0), 1.0, omega_grid, 1e-10)
    ok = (rep.source.verdict and rep.target.verdict and rep.target.max_rel_residual < 1e-10
          and rep.isometry_residual < 1e-12)
    record(8, "antipodal rotation transports (phi_1, 1)", ok,
           f"source {rep.source.max_rel_residual:.1e}, target {rep.target.max_rel_residual:.1e}, "
           f"isometry residual {rep.isometry_residual:.1e}")


def test_criterion_09_commuting(omega_grid):
    X = VectorField.parse("-y,x", OMEGA)
    Y = VectorField.parse("x,y", OMEGA)
    f = ScalarField.parse("sqrt(x^2+y^2)*exp(2*atan(y/x))", OMEGA)
    rep = commuting_transport(X, Y, f, 2.0, omega_grid, 1e-9)
    ok = rep.bracket_residual < 1e-12 and rep.image.verdict and not rep.zero_image
    record(9, "radial field maps E_2 of the rotation into itself", ok,
           f"bracket {rep.bracket_residual:.1e}, image residual {rep.image.max_rel_residual:.1e}")


def test_criterion_10_operator_bound():
    unit = parse_domain("box:0,1,0,1")
    g = build_grid(unit, FLAT, 200)
    fams = bound_family(42, 50, unit)
    worst = 0.0
    for spec in ("-y,x", "1,0", "sin(3*y),x^2-y", "exp(x)*y,cos(x*y)"):
        X = VectorField.parse(spec, unit)
        sup = sup_norm_field(X, FLAT, g)
        worst = max(worst, max(rayleigh_quotient(X, f, FLAT, g) for f in fams) / sup)
    record(10, "Rayleigh quotient <= sup norm over 50 test functions", worst <= 1.02,
           f"worst quotient / sup norm = {worst:.4f} over 4 fields")


def _run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue()


def test_criterion_11_infrastructure():
    rng = np.random.default_rng(2024)
    h = 1e-5
    cases = 0
    worst = 0.0
    batch = []
    for _ in range(1000):
        dim = int(rng.integers(1, 4))
        e = random_expr(rng, dim, int(rng.integers(2, 6)))
        p = rng.uniform(-2, 2, size=dim)
        d = eval_dual(e, p)
        for i in range(dim):
            hi, lo = p.copy(), p.copy()
            hi[i] += h
            lo[i] -= h
            fd = (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)
            worst = max(worst, abs(d.partials[i] - fd) / (1 + abs(d.partials[i])))
        batch.append((e, dim, p, d))
        cases += 1
    # the compiled/vectorised kernels must agree with the scalar dual numbers
    kernel_gap = 0.0
    for e, dim, p, d in batch:
        _, g, _ = kernels.eval_duals(compile_exprs([e], dim), p[None, :])
        kernel_gap = max(kernel_gap, float(np.max(np.abs(g[0, 0] - d.partials) /
                                                  (1 + np.abs(d.partials)))))
    trips = 0
    for _ in range(500):
        dim = int(rng.integers(1, 5))
        e = random_expr(rng, dim, int(rng.integers(1, 9)))
        trips += parse_scalar(to_string(e, dim), dim) == e
    argv = ["battery", "--domain", "torus:2*pi,2*pi", "--field", "1,0", "--resolution", "64"]
    a, b = _run_cli(argv), _run_cli(argv)
    proc = subprocess.run([sys.executable, "-m", "vfspec", *argv], capture_output=True, text=True,
                          check=False)
    identical = a == b and a[1] == proc.stdout and a[0] == 0
    ok = worst < 1e-6 and kernel_gap < 1e-10 and trips == 500 and identical
    record(11, "AD vs finite differences, round trips, reproducible reports", ok,
           f"{cases} AD cases worst {worst:.1e}, kernel gap {kernel_gap:.1e}, "
           f"{trips}/500 round trips, byte-identical {identical}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
