"""Eigenpairs of vector fields acting as derivations: X f = lambda f.

Verification is pointwise on a grid with exact first derivatives. Eigenspaces
follow kernel semantics, E_lambda = ker(X - lambda I): eigenfunctions may have
zeros, only the identically zero function is rejected. Whether a function is
nowhere vanishing on the grid is reported separately.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .calculus import (DiffeoMap, ScalarField, VectorField, lie_bracket,
                       pullback_metric_residual, pushforward)
from .config import DEFAULTS, max_workers
from .errors import EvalDomainError, PreconditionError
from .expr import BinOp, Const, diff
from .flow import Trajectory, detect_period, flow_map, integrate
from .geometry import Grid, Metric

__all__ = [
    "EigenpairReport", "SpectralScanReport", "ScanEntry", "EstimateReport",
    "DimProbeReport", "CriticalPointReport", "TransportReport", "CommutingReport",
    "ClosedOrbitReport", "verify_eigenpair", "estimate_eigenvalue", "flow_law_check",
    "power_chain_verify", "eigenspace_dim_probe", "scan_eigenvalues",
    "triviality_battery", "critical_point_check", "isometry_transport",
    "commuting_transport", "closed_orbit_check",
]

_MIN_FLOW_SAMPLES = 20


@dataclass(frozen=True)
class EigenpairReport:
    lam: float
    max_abs_residual: float
    max_rel_residual: float
    samples: int
    verdict: bool
    tol: float
    nowhere_vanishing: bool = False
    note: str | None = None

    def as_dict(self) -> dict:
        out = {
            "lambda": self.lam,
            "max_abs_residual": self.max_abs_residual,
            "max_rel_residual": self.max_rel_residual,
            "samples": self.samples,
            "verdict": self.verdict,
            "tol": self.tol,
            "nowhere_vanishing": self.nowhere_vanishing,
        }
        if self.note:
            out["note"] = self.note
        return out


def _report(xf, fv, lam, tol, note=None) -> EigenpairReport:
    if fv.size == 0:
        raise PreconditionError("no sample points")
    if np.max(np.abs(fv)) <= DEFAULTS.zero_function:
        raise PreconditionError("function is numerically zero on the grid; "
                                "eigenfunctions must be non-zero")
    r = np.abs(xf - lam * fv)
    rel = float(np.max(r / (1.0 + np.abs(fv))))
    return EigenpairReport(
        lam=float(lam),
        max_abs_residual=float(np.max(r)),
        max_rel_residual=rel,
        samples=int(fv.size),
        verdict=bool(rel < tol),
        tol=float(tol),
        nowhere_vanishing=bool(np.min(np.abs(fv)) > DEFAULTS.zero_function),
        note=note,
    )


def _residual_at(X: VectorField, f: ScalarField, lam: float, pts, tol) -> EigenpairReport:
    fv, df = f.value_grad(pts)
    xf = np.sum(X.values(pts) * df, axis=1)
    return _report(xf, fv, lam, tol)


def verify_eigenpair(X: VectorField, f: ScalarField, lam: float, grid: Grid,
                     tol: float = DEFAULTS.tol) -> EigenpairReport:
    """Residual statistics of X f - lam f over the grid.

    The verdict holds when max |Xf - lam f| / (1 + |f|) < tol; the relative
    scaling keeps exponentially large eigenfunctions comparable.
    """
    return _residual_at(X, f, lam, grid.points, tol)


def _power(f: ScalarField, k: int) -> ScalarField:
    if k == 1:
        return f
    return ScalarField(BinOp("^", f.expr, Const(float(k))), f.domain)


def power_chain_verify(X: VectorField, f: ScalarField, lam: float, k_max: int, grid: Grid,
                       tol: float = DEFAULTS.chain_tol) -> list[EigenpairReport]:
    """Check that f^k lies in E_{k lam} for k = 1..k_max (Leibniz rule)."""
    base = verify_eigenpair(X, f, lam, grid, tol)
    if not base.verdict:
        raise PreconditionError(f"({f.spec}, {lam}) is not an eigenpair of X "
                                f"(residual {base.max_rel_residual:.3g})")
    reports = [base]
    for k in range(2, k_max + 1):
        try:
            reports.append(verify_eigenpair(X, _power(f, k), k * lam, grid, tol))
        except EvalDomainError as exc:
            reports.append(EigenpairReport(k * lam, math.inf, math.inf, len(grid), False, tol,
                                           note=f"overflow: {exc.reason}"))
    return reports


# ------------------------------------------------------------ eigenspace

@dataclass(frozen=True)
class DimProbeReport:
    rank: int
    verdict: str  # "dim1" | "dimInfinityEvidence" | "inconclusive"
    k_max: int
    singular_values: tuple

    def as_dict(self) -> dict:
        return {"rank": self.rank, "verdict": self.verdict, "k_max": self.k_max,
                "singular_values": list(self.singular_values)}


def eigenspace_dim_probe(X: VectorField | None, f: ScalarField, k_max: int, grid: Grid,
                         tol: float = DEFAULTS.tol,
                         drop_tol: float = DEFAULTS.rank_drop_tol) -> DimProbeReport:
    """Numerical rank of {1, f, ..., f^k_max} in L2 of the grid.

    For f in E_0(X) every power is in E_0 too, so full rank k_max + 1 is
    evidence that E_0 is infinite dimensional; rank 1 means f is constant.
    ``X=None`` skips the membership check.
    """
    if not 1 <= k_max <= 5:
        raise ValueError("k_max must be between 1 and 5 (monomial conditioning)")
    if X is not None:
        rep = verify_eigenpair(X, f, 0.0, grid, tol)
        if not rep.verdict:
            raise PreconditionError(f"{f.spec} is not in E_0(X) "
                                    f"(residual {rep.max_rel_residual:.3g})")
    fv = f.values(grid.points)
    sw = np.sqrt(grid.weights)
    A = np.stack([sw * fv ** k for k in range(k_max + 1)], axis=1)
    norms = np.linalg.norm(A, axis=0)
    A = A[:, norms > 0] / norms[norms > 0]
    s = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(s > drop_tol * s[0]))
    if rank <= 1:
        verdict = "dim1"
    elif rank == k_max + 1:
        verdict = "dimInfinityEvidence"
    else:
        verdict = "inconclusive"
    return DimProbeReport(rank, verdict, k_max, tuple(float(v) for v in s))


# ------------------------------------------------------- flow estimation

@dataclass(frozen=True, eq=False)
class EstimateReport:
    lambda_hat: float | None
    regression_residual: float | None
    sign_consistent: bool
    samples: int
    trajectory: Trajectory = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "lambda_hat": self.lambda_hat,
            "regression_residual": self.regression_residual,
            "sign_consistent": self.sign_consistent,
            "samples": self.samples,
            "trajectory": self.trajectory.metadata(),
        }


def _orbit_values(X, f, x0, t_max, dt):
    f0 = f.values(np.asarray(x0, dtype=float))
    if f0 == 0.0:
        raise PreconditionError("f vanishes at the start point")
    traj = integrate(X, x0, t_max, dt)
    if len(traj.times) < _MIN_FLOW_SAMPLES:
        raise PreconditionError(f"only {len(traj.times)} flow samples "
                                f"(need {_MIN_FLOW_SAMPLES}); domain exit too early")
    return traj, f.values(traj.points)


def estimate_eigenvalue(X: VectorField, f: ScalarField, x0, t_max: float,
                        dt: float = DEFAULTS.dt) -> EstimateReport:
    """Fit ln|f(Phi(t, x0))| = ln|f(x0)| + lam t by least squares along the orbit.

    No estimate is produced when f changes sign or vanishes on the orbit.
    """
    traj, y = _orbit_values(X, f, x0, t_max, dt)
    consistent = bool(np.all(np.sign(y[0]) * y > 0))
    if not consistent:
        return EstimateReport(None, None, False, len(y), traj)
    t = traj.times
    z = np.log(np.abs(y))
    tc = t - t.mean()
    slope = float(np.sum(tc * (z - z.mean())) / np.sum(tc * tc))
    intercept = z.mean() - slope * t.mean()
    rms = float(np.sqrt(np.mean((z - intercept - slope * t) ** 2)))
    return EstimateReport(slope, rms, True, len(y), traj)


def flow_law_check(X: VectorField, f: ScalarField, lam: float, x0, t_max: float,
                   dt: float = DEFAULTS.dt) -> float:
    """max_t |f(Phi(t, x0)) - f(x0) e^{lam t}| / (1 + |f(x0) e^{lam t}|)."""
    traj, y = _orbit_values(X, f, x0, t_max, dt)
    expected = y[0] * np.exp(lam * traj.times)
    return float(np.max(np.abs(y - expected) / (1.0 + np.abs(expected))))


@dataclass(frozen=True)
class ClosedOrbitReport:
    period: float | None
    return_gap: float | None
    lambda_hat: float | None

    @property
    def obstruction_holds(self) -> bool:
        """A closed orbit forces lambda = 0: e^{lam T} = 1 for real lam."""
        if self.period is None or self.return_gap is None or self.return_gap >= 1e-6:
            return True
        return self.lambda_hat is not None and abs(self.lambda_hat) < 1e-4

    def as_dict(self) -> dict:
        return {"period": self.period, "return_gap": self.return_gap,
                "lambda_hat": self.lambda_hat, "obstruction_holds": self.obstruction_holds}


def closed_orbit_check(X: VectorField, f: ScalarField, x0, t_max: float,
                       dt: float = DEFAULTS.dt,
                       tol: float = DEFAULTS.period_tol) -> ClosedOrbitReport:
    """Detect a periodic orbit through x0 and estimate lambda from the return map.

    If f(Phi(T, x)) = f(x) e^{lam T}, then lam = ln|f(Phi(T, x)) / f(x)| / T.
    """
    traj = integrate(X, x0, t_max, dt)
    T = detect_period(traj, tol)
    if T is None:
        return ClosedOrbitReport(None, None, None)
    x0 = traj.points[0]
    f0 = float(f.values(x0))
    fT = float(f.values(X.domain.wrap(flow_map(X, T, x0, dt))))
    gap = abs(fT - f0)
    lam = math.log(abs(fT) / abs(f0)) / T if f0 * fT > 0 else None
    return ClosedOrbitReport(T, gap, lam)


# ---------------------------------------------------------------- scans

@dataclass(frozen=True)
class ScanEntry:
    lam: float
    verdict: bool
    residual: float


@dataclass(frozen=True)
class SpectralScanReport:
    entries: tuple
    field_spec: str
    function_specs: tuple
    domain_spec: str
    false_eigenpairs: int = 0

    @property
    def violations(self) -> int:
        return self.false_eigenpairs + sum(1 for e in self.entries if e.lam == 0 and not e.verdict)

    def as_dict(self) -> dict:
        return {
            "entries": [{"lambda": e.lam, "verdict": e.verdict, "residual": e.residual}
                        for e in self.entries],
            "field": self.field_spec,
            "functions": list(self.function_specs),
            "domain": self.domain_spec,
            "false_eigenpairs": self.false_eigenpairs,
            "violations": self.violations,
        }


def _map(fn, items):
    workers = max_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def scan_eigenvalues(X: VectorField, family: Callable[[float], ScalarField],
                     candidates: Sequence[float], grid: Grid,
                     tol: float = DEFAULTS.tol) -> SpectralScanReport:
    """Verify (family(lam), lam) for each candidate lam."""
    lams = sorted(set(float(c) for c in candidates))
    fams = [family(lam) for lam in lams]
    reports = _map(lambda i: verify_eigenpair(X, fams[i], lams[i], grid, tol), range(len(lams)))
    entries = tuple(ScanEntry(r.lam, r.verdict, r.max_rel_residual) for r in reports)
    return SpectralScanReport(entries, X.spec, tuple(f.spec for f in fams), X.domain.spec)


def _compactly_supported(X: VectorField, grid: Grid) -> bool:
    """X vanishes identically on the outer layer of cells of the grid's box."""
    lo = np.array([b[0] for b in grid.domain.bounds])
    hi = np.array([b[1] for b in grid.domain.bounds])
    band = 2.0 * grid.spacing
    pts = grid.points
    outer = np.any((pts - lo < band) | (hi - pts < band), axis=1)
    if not np.any(outer):
        return False
    return bool(np.max(np.abs(X.values(pts[outer]))) == 0.0)


def _require_compact(X: VectorField, grid: Grid):
    if not (grid.domain.compact or _compactly_supported(X, grid)):
        raise PreconditionError("needs a compact domain (torus) or a field vanishing "
                                "near the boundary of the domain")


def triviality_battery(X: VectorField, candidates: Sequence[float],
                       functions: Sequence[ScalarField], grid: Grid,
                       tol: float = DEFAULTS.tol) -> SpectralScanReport:
    """Try to falsify sigma_p(X) = {0} for a compact or compactly supported X.

    Every (lam != 0, f) must fail verification; (0, 1) must pass.
    """
    _require_compact(X, grid)
    lams = sorted(set(float(c) for c in candidates) | {0.0})
    one = ScalarField(Const(1.0), X.domain)

    def run(lam):
        if lam == 0.0:
            r = verify_eigenpair(X, one, 0.0, grid, tol)
            return ScanEntry(0.0, r.verdict, r.max_rel_residual), 0
        reports = [verify_eigenpair(X, f, lam, grid, tol) for f in functions]
        false = sum(r.verdict for r in reports)
        return ScanEntry(lam, false > 0, min(r.max_rel_residual for r in reports)), false

    results = _map(run, lams)
    return SpectralScanReport(
        entries=tuple(e for e, _ in results),
        field_spec=X.spec,
        function_specs=tuple(f.spec for f in functions),
        domain_spec=grid.domain.spec,
        false_eigenpairs=sum(n for _, n in results),
    )


@dataclass(frozen=True)
class CriticalPointReport:
    x_max: tuple
    x_min: tuple
    xf_at_max: float
    lf_at_max: float
    xf_at_min: float
    lf_at_min: float
    critical_scale: float
    contradiction: bool

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def critical_point_check(X: VectorField, f: ScalarField, lam: float,
                         grid: Grid) -> CriticalPointReport:
    """Evaluate Xf and lam f at the grid extrema of f.

    At an interior extremum df = 0, so Xf vanishes there up to the grid
    resolution. If lam f does not vanish too, Xf = lam f is impossible.
    ``critical_scale`` = cell size * (max|Xf| + max|X| max|df|) is the
    resolution-limited size of a "vanishing" Xf.
    """
    _require_compact(X, grid)
    pts = grid.points
    fv, df = f.value_grad(pts)
    xv = X.values(pts)
    xf = np.sum(xv * df, axis=1)
    i_max, i_min = int(np.argmax(fv)), int(np.argmin(fv))
    scale = grid.cell_size * (np.max(np.abs(xf))
                              + np.max(np.linalg.norm(xv, axis=1)) * np.max(np.linalg.norm(df, axis=1)))

    def witnessed(i):
        return abs(xf[i]) <= scale and abs(lam * fv[i]) > scale

    return CriticalPointReport(
        x_max=tuple(float(v) for v in pts[i_max]),
        x_min=tuple(float(v) for v in pts[i_min]),
        xf_at_max=float(xf[i_max]),
        lf_at_max=float(lam * fv[i_max]),
        xf_at_min=float(xf[i_min]),
        lf_at_min=float(lam * fv[i_min]),
        critical_scale=float(scale),
        contradiction=bool(witnessed(i_max) or witnessed(i_min)),
    )


# ------------------------------------------------------------ transport

@dataclass(frozen=True)
class TransportReport:
    source: EigenpairReport
    target: EigenpairReport
    isometry_residual: float
    inverse_residual: float

    def as_dict(self) -> dict:
        return {"source": self.source.as_dict(), "target": self.target.as_dict(),
                "isometry_residual": self.isometry_residual,
                "inverse_residual": self.inverse_residual}


def isometry_transport(phi: DiffeoMap, X: VectorField, f: ScalarField, lam: float,
                       grid: Grid, tol: float = DEFAULTS.tol,
                       source_metric: Metric | None = None,
                       isometry_tol: float = 1e-10) -> TransportReport:
    """Verify (f o phi^{-1}, lam) for Y = phi_* X on the target grid.

    The grid's metric is the target metric h; ``source_metric`` defaults to
    the flat metric. Raises PreconditionError unless phi^* h = g at the
    preimages of the grid points and (f, lam) is an eigenpair of X there.
    """
    q = grid.points
    p = phi.preimages(q)
    g = source_metric or Metric.flat(phi.source.dim)
    inv_res = phi.inverse_residual(p, q)
    if inv_res > 1e-10:
        raise PreconditionError(f"inverse formulas do not invert the map (residual {inv_res:.3g})")
    iso = pullback_metric_residual(phi, g, grid.metric, q)
    if iso > isometry_tol:
        raise PreconditionError(f"map is not an isometry (pullback residual {iso:.3g})")
    source = _residual_at(X, f, lam, p, tol)
    if not source.verdict:
        raise PreconditionError(f"({f.spec}, {lam}) is not an eigenpair of X")
    y = pushforward(phi, X, q)
    moved = phi.compose_inverse(f)
    fv, df = moved.value_grad(q)
    target = _report(np.sum(y * df, axis=1), fv, lam, tol)
    return TransportReport(source, target, iso, inv_res)


@dataclass(frozen=True)
class CommutingReport:
    bracket_residual: float
    image: EigenpairReport
    zero_image: bool
    image_spec: str

    def as_dict(self) -> dict:
        return {"bracket_residual": self.bracket_residual, "image": self.image.as_dict(),
                "zero_image": self.zero_image, "image_function": self.image_spec}


def commuting_transport(X: VectorField, Y: VectorField, f: ScalarField, lam: float, grid: Grid,
                        tol: float = DEFAULTS.tol,
                        bracket_tol: float = 1e-10) -> CommutingReport:
    """If [X, Y] = 0 then Y f is again in E_lam(X); verify it on the grid.

    Y f is built as the expression sum_k Y^k * df/dx^k so that X can be
    applied to it with first-order dual numbers.
    """
    pts = grid.points
    bracket = float(np.max(np.abs(lie_bracket(X, Y, pts)), initial=0.0))
    if bracket >= bracket_tol:
        raise PreconditionError(f"fields do not commute ([X,Y] residual {bracket:.3g})")
    base = verify_eigenpair(X, f, lam, grid, tol)
    if not base.verdict:
        raise PreconditionError(f"({f.spec}, {lam}) is not an eigenpair of X")
    terms = [BinOp("*", Y.components[k], diff(f.expr, k)) for k in range(X.dim)]
    expr = terms[0]
    for t in terms[1:]:
        expr = BinOp("+", expr, t)
    image = ScalarField(expr, f.domain)
    iv = image.values(pts)
    fscale = 1.0 + float(np.max(np.abs(f.values(pts))))
    if np.max(np.abs(iv)) <= 1e-12 * fscale:
        rep = EigenpairReport(float(lam), 0.0, 0.0, len(pts), True, tol,
                              note="zero image (trivially in E_lambda)")
        return CommutingReport(bracket, rep, True, image.spec)
    return CommutingReport(bracket, verify_eigenpair(X, image, lam, grid, tol), False, image.spec)
