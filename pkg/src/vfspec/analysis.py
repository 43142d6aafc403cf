"""L2 and H1 inner products, sup norms and the operator-norm bound, by quadrature.

All integrals are weighted sums over a :class:`~vfspec.geometry.Grid`, whose
weights already carry the Riemannian volume element. Sums go through
``np.sum`` (pairwise, fixed order) so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import ScalarField, VectorField
from .errors import PreconditionError
from .geometry import Grid, Metric

__all__ = [
    "NormReport", "BoundReport", "l2_inner", "h1_inner", "l2_norm", "h1_norm",
    "sup_norm_field", "rayleigh_quotient", "norm_report", "bound_check",
]


@dataclass(frozen=True)
class NormReport:
    l2: float
    h1: float
    resolution: tuple
    sup_norm_X: float | None = None
    sup_is_estimate: bool = False
    rayleigh: float | None = None
    bound_satisfied: bool | None = None

    def as_dict(self) -> dict:
        return {
            "l2": self.l2,
            "h1": self.h1,
            "resolution": list(self.resolution),
            "sup_norm_X": self.sup_norm_X,
            "sup_is_estimate": self.sup_is_estimate,
            "rayleigh": self.rayleigh,
            "bound_satisfied": self.bound_satisfied,
        }


def l2_inner(f: ScalarField, h: ScalarField, grid: Grid) -> float:
    return float(np.sum(grid.weights * f.values(grid.points) * h.values(grid.points)))


def _h1_sum(fv, df, hv, dh, grid: Grid) -> float:
    if grid.metric.euclidean:
        pairing = np.sum(df * dh, axis=1)
    else:
        pairing = np.einsum("pi,pij,pj->p", df, grid.G_inv, dh)
    return float(np.sum(grid.weights * fv * hv) + np.sum(grid.weights * pairing))


def h1_inner(f: ScalarField, h: ScalarField, m: Metric, grid: Grid) -> float:
    """int f h dv + int g(grad f, grad h) dv."""
    _require_grid_metric(m, grid)
    fv, df = f.value_grad(grid.points)
    hv, dh = (fv, df) if h is f else h.value_grad(grid.points)
    return _h1_sum(fv, df, hv, dh, grid)


def l2_norm(f: ScalarField, grid: Grid) -> float:
    return float(np.sqrt(max(l2_inner(f, f, grid), 0.0)))


def h1_norm(f: ScalarField, m: Metric, grid: Grid) -> float:
    return float(np.sqrt(max(h1_inner(f, f, m, grid), 0.0)))


def _require_grid_metric(m: Metric, grid: Grid):
    if m is not grid.metric and m.spec != grid.metric.spec:
        raise PreconditionError("grid was built for a different metric")


def sup_norm_field(X: VectorField, m: Metric, grid: Grid) -> float:
    """max over grid points of sqrt(g_ij X^i X^j).

    On a non-compact domain this is only a lower estimate of the supremum;
    :func:`norm_report` carries the flag.
    """
    _require_grid_metric(m, grid)
    if len(grid) == 0:
        return 0.0
    xv = X.values(grid.points)
    length2 = np.einsum("pi,pij,pj->p", xv, grid.G, xv)
    return float(np.sqrt(np.max(length2)))


def rayleigh_quotient(X: VectorField, f: ScalarField, m: Metric, grid: Grid) -> float:
    """||X f||_L2 / ||f||_H1."""
    _require_grid_metric(m, grid)
    fv, df = f.value_grad(grid.points)   # one AD pass serves both norms
    denom = np.sqrt(max(_h1_sum(fv, df, fv, df, grid), 0.0))
    if denom == 0.0:
        raise PreconditionError("H1 norm of the test function is zero")
    xf = np.sum(X.values(grid.points) * df, axis=1)
    return float(np.sqrt(np.sum(grid.weights * xf * xf)) / denom)


def norm_report(f: ScalarField, m: Metric, grid: Grid, X: VectorField | None = None,
                slack: float = 0.02) -> NormReport:
    l2 = l2_norm(f, grid)
    h1 = h1_norm(f, m, grid)
    if X is None:
        return NormReport(l2, h1, grid.resolution)
    sup = sup_norm_field(X, m, grid)
    rq = rayleigh_quotient(X, f, m, grid) if h1 > 0 else None
    ok = None if rq is None else bool(rq <= sup * (1.0 + slack))
    return NormReport(l2, h1, grid.resolution, sup, not grid.domain.compact, rq, ok)


@dataclass(frozen=True)
class BoundReport:
    sup_norm_X: float
    quotients: tuple
    slack: float

    @property
    def worst_ratio(self) -> float:
        if self.sup_norm_X == 0.0:
            return 0.0 if max(self.quotients, default=0.0) == 0.0 else float("inf")
        return max(self.quotients, default=0.0) / self.sup_norm_X

    @property
    def satisfied(self) -> bool:
        return all(q <= self.sup_norm_X * (1.0 + self.slack) for q in self.quotients)


def bound_check(X: VectorField, functions, m: Metric, grid: Grid,
                slack: float = 0.02) -> BoundReport:
    """Compare ||Xf|| / ||f||_H1 with ||X||_inf over a family of test functions."""
    sup = sup_norm_field(X, m, grid)
    quotients = tuple(rayleigh_quotient(X, f, m, grid) for f in functions)
    return BoundReport(sup, quotients, slack)
