"""Command-line front end: ``vfspec <command> [flags]``.

Reports are JSON documents with a header that echoes the numerical
defaults, the seed and the kernel backend. ``flow`` writes CSV instead.

Exit codes: 0 success, 1 verdict false under ``--expect-true``, 2 usage or
parse error, 3 a precondition or evaluation failure during computation.
Errors are written to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import __version__, catalog, kernels
from .analysis import bound_check, norm_report
from .calculus import DiffeoMap, ScalarField, VectorField, classify
from .config import DEFAULTS
from .errors import ParseError, SpecError, VfspecError
from .expr import variable_names
from .families import bound_family, trig_family
from .flow import integrate
from .geometry import build_grid, parse_domain, parse_metric
from .spectral import (commuting_transport, eigenspace_dim_probe, estimate_eigenvalue,
                       flow_law_check, isometry_transport, scan_eigenvalues,
                       triviality_battery, verify_eigenpair)

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ------------------------------------------------------------ flag parsing

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def _common(p, *, field=True, function=True, lam=False, grid=True):
    p.add_argument("--domain", required=True, help='domain spec, e.g. "box:-2,2,-2,2"')
    p.add_argument("--metric", default="euclidean",
                   help='"euclidean" or ";"-separated row-major expressions')
    if field:
        p.add_argument("--field", required=True, help='components, e.g. "-y,x"')
    if function:
        p.add_argument("--function", required=True, help="scalar expression")
    if lam:
        p.add_argument("--lambda", dest="lam", type=float, required=True)
    if grid:
        p.add_argument("--resolution", type=_positive(int), default=DEFAULTS.resolution)
    p.add_argument("--tol", type=_positive(float), default=DEFAULTS.tol)
    p.add_argument("--seed", type=int, default=DEFAULTS.seed)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--expect-true", action="store_true",
                   help="exit 1 when the report's verdict is false")


def _flow_flags(p, t_required=True):
    p.add_argument("--x0", required=True, help='start point, e.g. "0.5,0"')
    p.add_argument("--tmax", type=_positive(float), required=t_required, default=None)
    p.add_argument("--dt", type=_positive(float), default=DEFAULTS.dt)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vfspec", description="Point spectra of vector fields.")
    parser.add_argument("--version", action="version", version=f"vfspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="check X f = lambda f on a grid")
    _common(p, lam=True)

    p = sub.add_parser("estimate", help="fit lambda along an integral curve")
    _common(p, grid=False)
    _flow_flags(p)
    p.add_argument("--lambda", dest="lam", type=float,
                   help="also report the flow-law deviation for this lambda")

    p = sub.add_parser("scan", help="verify a lambda-indexed family")
    _common(p, function=False)
    p.add_argument("--template", required=True,
                   help='function with a "{lambda}" placeholder, e.g. "exp({lambda}*atan(y/x))"')
    p.add_argument("--lambdas", required=True, help="comma-separated candidates")

    p = sub.add_parser("battery", help="try to falsify a trivial point spectrum")
    _common(p, function=False)
    p.add_argument("--candidates", default="-2,-1,-0.5,0.5,1,2")
    p.add_argument("--count", type=_positive(int), default=30, help="seeded test functions")

    p = sub.add_parser("flow", help="integral curve as CSV")
    _common(p, function=False, grid=False)
    _flow_flags(p)

    p = sub.add_parser("norms", help="L2/H1 norms and the sup-norm bound")
    _common(p, field=False)
    p.add_argument("--field", help="also report sup norm and Rayleigh quotient")
    p.add_argument("--family", type=int, default=0,
                   help="check the bound over this many seeded test functions")

    p = sub.add_parser("classify", help="Killing / homothetic / concurrent test")
    _common(p, function=False)
    p.add_argument("--expect", choices=["concurrent", "killing", "homothetic", "none"],
                   help="exit 1 unless the verdict matches")

    p = sub.add_parser("dim-probe", help="rank of {1, f, ..., f^k}")
    _common(p, field=False)
    p.add_argument("--field", help="first check that f lies in E_0 of this field")
    p.add_argument("--kmax", type=int, default=4)

    p = sub.add_parser("transport", help="move an eigenpair by an isometry or commuting field")
    tsub = p.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    q = tsub.add_parser("isometry")
    _common(q, lam=True)
    q.add_argument("--map", required=True, help="forward map components")
    q.add_argument("--inverse", required=True, help="inverse map components")
    q.add_argument("--target-domain", help="defaults to --domain")
    q.add_argument("--target-metric", help="defaults to --metric")
    q = tsub.add_parser("commuting")
    _common(q, lam=True)
    q.add_argument("--other", required=True, help="the commuting field Y")

    p = sub.add_parser("catalog", help="bundled worked examples")
    csub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = csub.add_parser("list")
    q.add_argument("--out")
    q = csub.add_parser("run")
    q.add_argument("name", help='entry name or "all"')
    q.add_argument("--tol", type=_positive(float), default=1e-9)
    q.add_argument("--seed", type=int, default=DEFAULTS.seed)
    q.add_argument("--out")
    q.add_argument("--expect-true", action="store_true")
    return parser


# ---------------------------------------------------------------- output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)  # "inf" / "nan" keep the JSON strict
    return obj


def _header(args) -> dict:
    return {
        "tool": "vfspec",
        "version": __version__,
        "defaults": DEFAULTS.as_dict(),
        "seed": getattr(args, "seed", DEFAULTS.seed),
        "backend": kernels.BACKEND,
    }


def _dump(doc: dict) -> str:
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def _emit(text: str, out: str | None, stdout):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)


# -------------------------------------------------------------- commands

def _setup(args):
    domain = parse_domain(args.domain)
    metric = parse_metric(args.metric, domain.dim)
    return domain, metric


def _grid(args, domain, metric):
    return build_grid(domain, metric, args.resolution)


def _inputs(args, *names) -> dict:
    return {n: getattr(args, n) for n in names if getattr(args, n, None) is not None}


def _point(text: str, dim: int) -> list[float]:
    x = _floats(text)
    if len(x) != dim:
        raise UsageError(f"point {text!r} has {len(x)} coordinates, domain has {dim}")
    return x


def cmd_verify(args):
    domain, metric = _setup(args)
    X = VectorField.parse(args.field, domain)
    f = ScalarField.parse(args.function, domain)
    rep = verify_eigenpair(X, f, args.lam, _grid(args, domain, metric), args.tol)
    return rep.as_dict(), rep.verdict


def cmd_estimate(args):
    domain, _ = _setup(args)
    X = VectorField.parse(args.field, domain)
    f = ScalarField.parse(args.function, domain)
    x0 = _point(args.x0, domain.dim)
    rep = estimate_eigenvalue(X, f, x0, args.tmax, args.dt)
    out = rep.as_dict()
    ok = rep.lambda_hat is not None
    if args.lam is not None:
        dev = flow_law_check(X, f, args.lam, x0, args.tmax, args.dt)
        out["lambda"] = args.lam
        out["flow_law_deviation"] = dev
        ok = ok and abs(rep.lambda_hat - args.lam) < 1e-4
    return out, ok


def cmd_scan(args):
    if "{lambda}" not in args.template:
        raise UsageError('--template must contain the placeholder "{lambda}"')
    domain, metric = _setup(args)
    X = VectorField.parse(args.field, domain)

    def family(lam):
        return ScalarField.parse(args.template.replace("{lambda}", f"({lam!r})"), domain)

    rep = scan_eigenvalues(X, family, _floats(args.lambdas), _grid(args, domain, metric), args.tol)
    return rep.as_dict(), all(e.verdict for e in rep.entries)


def cmd_battery(args):
    domain, metric = _setup(args)
    X = VectorField.parse(args.field, domain)
    fams = trig_family(args.seed, args.count, domain)
    rep = triviality_battery(X, _floats(args.candidates), fams, _grid(args, domain, metric),
                             args.tol)
    return rep.as_dict(), rep.violations == 0


def cmd_norms(args):
    domain, metric = _setup(args)
    grid = _grid(args, domain, metric)
    f = ScalarField.parse(args.function, domain)
    X = VectorField.parse(args.field, domain) if args.field else None
    out = norm_report(f, metric, grid, X, DEFAULTS.bound_slack).as_dict()
    ok = out["bound_satisfied"] is not False
    if args.family:
        if X is None:
            raise UsageError("--family needs --field")
        b = bound_check(X, bound_family(args.seed, args.family, domain), metric, grid,
                        DEFAULTS.bound_slack)
        out["family"] = {"count": args.family, "worst_ratio": b.worst_ratio,
                         "satisfied": b.satisfied}
        ok = ok and b.satisfied
    return out, ok


def cmd_classify(args):
    domain, metric = _setup(args)
    X = VectorField.parse(args.field, domain)
    rep = classify(X, metric, _grid(args, domain, metric), args.tol)
    ok = rep.verdict == args.expect if args.expect else rep.verdict != "none"
    return rep.as_dict(), ok


def cmd_dim_probe(args):
    domain, metric = _setup(args)
    X = VectorField.parse(args.field, domain) if args.field else None
    f = ScalarField.parse(args.function, domain)
    rep = eigenspace_dim_probe(X, f, args.kmax, _grid(args, domain, metric), args.tol)
    return rep.as_dict(), rep.verdict == "dimInfinityEvidence"


def cmd_transport(args):
    domain, metric = _setup(args)
    X = VectorField.parse(args.field, domain)
    f = ScalarField.parse(args.function, domain)
    if args.mode == "isometry":
        target = parse_domain(args.target_domain) if args.target_domain else domain
        tmetric = parse_metric(args.target_metric or args.metric, target.dim)
        phi = DiffeoMap.parse(args.map, args.inverse, domain, target)
        rep = isometry_transport(phi, X, f, args.lam, build_grid(target, tmetric, args.resolution),
                                 args.tol, source_metric=metric)
        return rep.as_dict(), rep.target.verdict
    Y = VectorField.parse(args.other, domain)
    rep = commuting_transport(X, Y, f, args.lam, _grid(args, domain, metric), args.tol)
    return rep.as_dict(), rep.image.verdict


def cmd_catalog(args):
    if args.action == "list":
        return {"entries": [{"name": e.name, "domain": e.domain, "field": e.field,
                             "notes": e.notes} for e in catalog.ENTRIES.values()]}, True
    if args.name == "all":
        out = catalog.run_all(args.tol, args.seed)
    else:
        if args.name not in catalog.ENTRIES:
            raise UsageError(f"unknown catalog entry {args.name!r}; "
                             f"known: {', '.join(catalog.ENTRIES)}")
        out = catalog.run_entry(args.name, args.tol, args.seed)
    return out, out["mismatches"] == 0


def flow_csv(args) -> tuple[str, bool]:
    domain, _ = _setup(args)
    X = VectorField.parse(args.field, domain)
    traj = integrate(X, _point(args.x0, domain.dim), args.tmax, args.dt)
    buf = io.StringIO()
    header = _header(args)
    for key in ("tool", "version", "backend"):
        buf.write(f"# {key}: {header[key]}\n")
    buf.write(f"# field: {X.spec}\n# domain: {domain.spec}\n# metric: {args.metric}\n")
    buf.write(f"# x0: {args.x0}\n# tmax: {args.tmax!r}\n# dt: {traj.dt!r}\n")
    buf.write("t," + ",".join(variable_names(domain.dim)) + "\n")
    for t, p in zip(traj.times, traj.points):
        buf.write(",".join(repr(float(v)) for v in (t, *p)) + "\n")
    buf.write("# " + json.dumps(_jsonable(traj.metadata()), allow_nan=False) + "\n")
    return buf.getvalue(), not traj.exited


COMMANDS = {
    "verify": cmd_verify,
    "estimate": cmd_estimate,
    "scan": cmd_scan,
    "battery": cmd_battery,
    "norms": cmd_norms,
    "classify": cmd_classify,
    "dim-probe": cmd_dim_probe,
    "transport": cmd_transport,
    "catalog": cmd_catalog,
}


def _error(stderr, kind: str, exc: BaseException, code: int) -> int:
    doc = {"error": {"type": kind, "class": type(exc).__name__, "message": str(exc)}}
    if isinstance(exc, ParseError):
        doc["error"]["position"] = exc.position
    stderr.write(json.dumps(doc) + "\n")
    return code


_FLAGS = {"--expect-true", "--help", "--version"}


def _attach_dash_values(argv: list[str]) -> list[str]:
    """Rewrite ``--field -y,x`` as ``--field=-y,x``.

    argparse reads any token starting with "-" as an option; field and
    function specs routinely start with a minus sign.
    """
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and tok not in _FLAGS and nxt is not None
                and nxt.startswith("-") and not nxt.startswith("--") and nxt != "-h"):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = _attach_dash_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _error(stderr, "usage", exc, EXIT_USAGE)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        if args.command == "flow":
            text, ok = flow_csv(args)
        else:
            report, ok = COMMANDS[args.command](args)
            inputs = _inputs(args, "mode", "action", "name", "domain", "metric", "field",
                             "function", "lam", "template", "lambdas", "candidates", "count",
                             "x0", "tmax", "dt", "resolution", "tol", "kmax", "family",
                             "map", "inverse", "target_domain", "target_metric", "other")
            if "lam" in inputs:
                inputs["lambda"] = inputs.pop("lam")
            text = _dump({"header": _header(args), "command": args.command,
                          "inputs": inputs, "report": report})
    except (UsageError, ParseError, SpecError) as exc:
        return _error(stderr, "usage", exc, EXIT_USAGE)
    except (VfspecError, ArithmeticError, ValueError) as exc:
        return _error(stderr, "failure", exc, EXIT_FAILURE)
    _emit(text, args.out, stdout)
    if getattr(args, "expect_true", False) and not ok:
        return EXIT_FALSE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
