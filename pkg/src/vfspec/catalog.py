"""Named worked examples with their expected outcomes.

Each entry bundles a domain, a metric, a field and the checks to run on
them. :func:`run_entry` executes the checks and counts expectation
mismatches; a clean catalog run is the golden regression suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .calculus import DiffeoMap, ScalarField, VectorField, classify
from .config import DEFAULTS
from .errors import VfspecError
from .families import trig_family
from .geometry import build_grid, parse_domain, parse_metric
from .spectral import (closed_orbit_check, commuting_transport, eigenspace_dim_probe,
                       flow_law_check, isometry_transport, power_chain_verify,
                       triviality_battery, verify_eigenpair)

# smooth cutoff exp(1/((r/1.5)^2 - 1)) for r < 1.5, else 0; u/abs(u) is the
# sign of u, so the seam sits on the circle r = 1.5, which no midpoint hits
_U = "(1-(x^2+y^2)/2.25)"
BUMP = f"(exp(-1/abs({_U}))*(1+{_U}/abs({_U}))/2)"

BATTERY_CANDIDATES = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)
BATTERY_FUNCTIONS = 30


@dataclass(frozen=True)
class Eigencheck:
    function: str
    lam: float
    expected: bool = True


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    domain: str
    field: str
    eigenpairs: tuple = ()
    metric: str = "euclidean"
    resolution: int = 200
    classification: str | None = None
    chain: tuple | None = None          # (function, lambda, k_max)
    dim_probe: tuple | None = None      # (function, k_max, expected rank)
    flow_law: tuple = ()                # ((function, lambda, x0, t_max), ...)
    battery: bool = False
    closed_orbit: tuple | None = None   # (x0, t_max)
    isometry: tuple | None = None       # (forward, inverse, function, lambda)
    commuting: tuple | None = None      # (other field, function, lambda, zero image)
    notes: str = ""


def _omega_function(lam: float) -> str:
    return f"exp(({lam!r})*atan(y/x))"


ENTRIES = {e.name: e for e in [
    CatalogEntry(
        name="rotation-omega",
        domain="plane-minus-line:2,0.1,2",
        field="-y,x",
        resolution=120,
        eigenpairs=tuple(Eigencheck(_omega_function(lam), lam) for lam in (-2.0, -1.0, 0.5, 1.0, 3.0))
        + (Eigencheck(_omega_function(1.0), 1.001, False),),
        classification="killing",
        flow_law=((_omega_function(2.0), 2.0, (1.0, 0.0), 1.3),),
        isometry=("-x,-y", "-x,-y", _omega_function(1.0), 1.0),
        commuting=("x,y", "sqrt(x^2+y^2)*exp(2*atan(y/x))", 2.0, False),
        notes="rotation field on the plane minus the line x=0; every real lambda is an eigenvalue",
    ),
    CatalogEntry(
        name="radial-punctured-disc",
        domain="punctured-disc:1,0.01",
        field="x,y",
        eigenpairs=(Eigencheck("sqrt(x^2+y^2)", 1.0), Eigencheck("sqrt(x^2+y^2)", 2.0, False)),
        classification="concurrent",
        chain=("sqrt(x^2+y^2)", 1.0, 5),
        flow_law=(("sqrt(x^2+y^2)", 1.0, (0.1, 0.0), 2.0),),
        notes="position field on the punctured unit disc; the radius has eigenvalue 1",
    ),
    CatalogEntry(
        name="concurrent-plane",
        domain="box:-2,2,-2,2",
        field="x,y",
        eigenpairs=(Eigencheck("x^2+y^2", 2.0),),
        classification="concurrent",
        notes="concurrent field: its squared length has eigenvalue 2c = 2",
    ),
    CatalogEntry(
        name="killing-rotation",
        domain="box:-2,2,-2,2",
        field="-y,x",
        eigenpairs=(Eigencheck("x^2+y^2", 0.0),),
        classification="killing",
        chain=("x^2+y^2", 0.0, 5),
        dim_probe=("x^2+y^2", 4, 5),
        flow_law=(("x^2+y^2", 0.0, (0.5, 0.0), 10.0),),
        notes="Killing field of non-constant length: E_0 is infinite dimensional",
    ),
    CatalogEntry(
        name="torus-translation",
        domain="torus:2*pi,2*pi",
        field="1,0",
        eigenpairs=(Eigencheck("1", 0.0), Eigencheck("cos(y)", 0.0), Eigencheck("sin(x)", 1.0, False)),
        classification="killing",
        battery=True,
        closed_orbit=((1.0, 2.0), 10.0),
        notes="compact flat torus: the point spectrum is {0}",
    ),
    CatalogEntry(
        name="bump-field",
        domain="box:-2,2,-2,2",
        field=f"{BUMP}*(-y),{BUMP}*x",
        eigenpairs=(Eigencheck("1", 0.0), Eigencheck("x^2+y^2", 0.0)),
        classification="none",
        battery=True,
        notes="compactly supported rotation (cutoff vanishing for r >= 1.5): spectrum {0}",
    ),
]}


def list_entries() -> list[str]:
    return list(ENTRIES)


@dataclass
class _Run:
    checks: list = field(default_factory=list)

    def add(self, check: str, expected, observed, ok: bool, **details):
        self.checks.append({"check": check, "expected": expected, "observed": observed,
                            "ok": bool(ok), **details})


def run_entry(name: str, tol: float = 1e-9, seed: int = DEFAULTS.seed) -> dict:
    """Run every bundled check of an entry and count expectation mismatches."""
    if name not in ENTRIES:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(ENTRIES)}")
    e = ENTRIES[name]
    domain = parse_domain(e.domain)
    metric = parse_metric(e.metric, domain.dim)
    grid = build_grid(domain, metric, e.resolution)
    X = VectorField.parse(e.field, domain)
    run = _Run()

    def scalar(text):
        return ScalarField.parse(text, domain)

    for ec in e.eigenpairs:
        rep = verify_eigenpair(X, scalar(ec.function), ec.lam, grid, tol)
        run.add(f"verify {ec.function} lambda={ec.lam!r}", ec.expected, rep.verdict,
                rep.verdict == ec.expected, max_rel_residual=rep.max_rel_residual)

    if e.classification is not None:
        rep = classify(X, metric, grid, DEFAULTS.tol)
        run.add("classify", e.classification, rep.verdict, rep.verdict == e.classification,
                **rep.as_dict())

    if e.chain is not None:
        fn, lam, k_max = e.chain
        reps = power_chain_verify(X, scalar(fn), lam, k_max, grid, DEFAULTS.chain_tol)
        for k, rep in enumerate(reps, start=1):
            run.add(f"power chain k={k}", True, rep.verdict, rep.verdict,
                    **{"lambda": rep.lam, "max_rel_residual": rep.max_rel_residual})

    if e.dim_probe is not None:
        fn, k_max, expected_rank = e.dim_probe
        rep = eigenspace_dim_probe(X, scalar(fn), k_max, grid, tol)
        run.add("dim probe rank", expected_rank, rep.rank, rep.rank == expected_rank,
                verdict=rep.verdict)

    for fn, lam, x0, t_max in e.flow_law:
        dev = flow_law_check(X, scalar(fn), lam, x0, t_max, DEFAULTS.dt)
        run.add(f"flow law {fn} lambda={lam!r}", "< 1e-6", dev, dev < 1e-6)

    if e.battery:
        fams = trig_family(seed, BATTERY_FUNCTIONS, domain)
        rep = triviality_battery(X, BATTERY_CANDIDATES, fams, grid, DEFAULTS.tol)
        run.add("triviality battery violations", 0, rep.violations, rep.violations == 0,
                false_eigenpairs=rep.false_eigenpairs)
        if e.closed_orbit is not None:
            x0, t_max = e.closed_orbit
            holds = []
            for f in fams:
                co = closed_orbit_check(X, f, x0, t_max, DEFAULTS.dt)
                holds.append(co.obstruction_holds and co.period is not None)
            run.add("closed-orbit obstruction", len(fams), sum(holds), all(holds),
                    period=co.period)

    if e.isometry is not None:
        fw, inv, fn, lam = e.isometry
        phi = DiffeoMap.parse(fw, inv, domain, domain)
        rep = isometry_transport(phi, X, scalar(fn), lam, grid, tol)
        run.add("isometry transport", True, rep.target.verdict, rep.target.verdict,
                isometry_residual=rep.isometry_residual,
                max_rel_residual=rep.target.max_rel_residual)

    if e.commuting is not None:
        other, fn, lam, zero = e.commuting
        Y = VectorField.parse(other, domain)
        rep = commuting_transport(X, Y, scalar(fn), lam, grid, tol)
        run.add("commuting transport", True, rep.image.verdict,
                rep.image.verdict and rep.zero_image == zero,
                bracket_residual=rep.bracket_residual, zero_image=rep.zero_image)

    mismatches = sum(not c["ok"] for c in run.checks)
    return {
        "name": e.name,
        "domain": e.domain,
        "metric": e.metric,
        "field": e.field,
        "notes": e.notes,
        "tol": tol,
        "checks": run.checks,
        "mismatches": mismatches,
    }


def run_all(tol: float = 1e-9, seed: int = DEFAULTS.seed) -> dict:
    results = []
    for name in ENTRIES:
        try:
            results.append(run_entry(name, tol, seed))
        except VfspecError as exc:
            results.append({"name": name, "error": str(exc), "mismatches": 1})
    return {"entries": results, "mismatches": sum(r["mismatches"] for r in results)}
