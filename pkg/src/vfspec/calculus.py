"""Scalar and vector fields and the differential operators acting on them.

Every pointwise operation accepts either one point of shape (n,) or a batch
of shape (N, n) and returns a correspondingly shaped result. Derivatives are
exact first-order (forward-mode dual numbers).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from ._program import compile_exprs
from .errors import PreconditionError, SpecError
from .expr import Expr, Var, parse_scalar, substitute, to_string
from .geometry import Domain, Grid, Metric, christoffels_at, inverse

__all__ = [
    "ScalarField", "VectorField", "DiffeoMap", "ClassificationReport",
    "apply_field", "gradient", "lie_bracket", "lie_derivative_metric",
    "covariant_derivative", "pushforward", "pullback_metric_residual", "classify",
    "parse_field",
]


def _batch(p):
    p = np.asarray(p, dtype=float)
    return np.atleast_2d(p), p.ndim == 1


@dataclass(frozen=True, eq=False)
class ScalarField:
    expr: Expr
    domain: Domain

    @classmethod
    def parse(cls, text: str, domain: Domain) -> "ScalarField":
        return cls(parse_scalar(text, domain.dim), domain)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @cached_property
    def program(self):
        return compile_exprs([self.expr], self.dim)

    def values(self, pts) -> np.ndarray:
        pts, single = _batch(pts)
        v = kernels.eval_values(self.program, pts)[:, 0]
        return v[0] if single else v

    def value_grad(self, pts):
        pts, single = _batch(pts)
        v, g, _ = kernels.eval_duals(self.program, pts)
        v, g = v[:, 0], g[:, 0, :]
        return (v[0], g[0]) if single else (v, g)

    @property
    def spec(self) -> str:
        return to_string(self.expr, self.dim)


@dataclass(frozen=True, eq=False)
class VectorField:
    components: tuple
    domain: Domain

    def __post_init__(self):
        if len(self.components) != self.domain.dim:
            raise SpecError(f"field has {len(self.components)} components on a "
                            f"{self.domain.dim}-dimensional domain")

    @classmethod
    def parse(cls, text: str, domain: Domain) -> "VectorField":
        return cls(tuple(parse_scalar(s, domain.dim) for s in _split_top(text)), domain)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @cached_property
    def program(self):
        return compile_exprs(self.components, self.dim)

    def values(self, pts) -> np.ndarray:
        pts, single = _batch(pts)
        v = kernels.eval_values(self.program, pts)
        return v[0] if single else v

    def value_jac(self, pts):
        """Components (N, n) and Jacobian ``J[p, k, i] = d_i X^k``."""
        pts, single = _batch(pts)
        v, J, _ = kernels.eval_duals(self.program, pts)
        return (v[0], J[0]) if single else (v, J)

    def on(self, domain: Domain) -> "VectorField":
        return VectorField(self.components, domain)

    @property
    def spec(self) -> str:
        return ",".join(to_string(c, self.dim) for c in self.components)


def _split_top(text: str) -> list[str]:
    """Split on commas that are not inside parentheses."""
    parts, level, cur = [], 0, []
    for ch in text:
        if ch == "," and level == 0:
            parts.append("".join(cur))
            cur = []
            continue
        level += (ch == "(") - (ch == ")")
        cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_field(text: str, domain: Domain) -> VectorField:
    return VectorField.parse(text, domain)


# ------------------------------------------------------------- operators

def apply_field(X: VectorField, f: ScalarField, p):
    """(X f)(p) = sum_i X^i(p) df/dx^i(p)."""
    pts, single = _batch(p)
    _, df = f.value_grad(pts)
    out = np.sum(X.values(pts) * df, axis=1)
    return out[0] if single else out


def gradient(m: Metric, f: ScalarField, p):
    """Metric gradient g^{kl} d_l f."""
    pts, single = _batch(p)
    _, df = f.value_grad(pts)
    if m.euclidean:
        out = df
    else:
        out = np.einsum("pkl,pl->pk", inverse(m.values(pts)), df)
    return out[0] if single else out


def lie_bracket(X: VectorField, Y: VectorField, p):
    """[X, Y]^k = X^i d_i Y^k - Y^i d_i X^k."""
    pts, single = _batch(p)
    xv, JX = X.value_jac(pts)
    yv, JY = Y.value_jac(pts)
    out = np.einsum("pki,pi->pk", JY, xv) - np.einsum("pki,pi->pk", JX, yv)
    return out[0] if single else out


def lie_derivative_metric(X: VectorField, m: Metric, p):
    """(L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k."""
    pts, single = _batch(p)
    xv, J = X.value_jac(pts)
    G, dG = m.values_and_derivatives(pts)
    out = (np.einsum("pijk,pk->pij", dG, xv)
           + np.einsum("pkj,pki->pij", G, J)
           + np.einsum("pik,pkj->pij", G, J))
    return out[0] if single else out


def covariant_derivative(Y, X: VectorField, m: Metric, p):
    """(nabla_Y X)^k = Y^i d_i X^k + Gamma^k_ij Y^i X^j.

    ``Y`` is a :class:`VectorField` or a constant vector.
    """
    pts, single = _batch(p)
    xv, J = X.value_jac(pts)
    if isinstance(Y, VectorField):
        yv = Y.values(pts)
    else:
        yv = np.broadcast_to(np.asarray(Y, dtype=float), xv.shape)
    out = np.einsum("pki,pi->pk", J, yv)
    if not m.euclidean:
        gamma = christoffels_at(m, pts)
        out = out + np.einsum("pkij,pi,pj->pk", gamma, yv, xv)
    return out[0] if single else out


# ----------------------------------------------------------------- maps

@dataclass(frozen=True, eq=False)
class DiffeoMap:
    """Diffeomorphism between chart domains given by forward and inverse formulas."""

    forward: tuple
    inverse: tuple
    source: Domain
    target: Domain

    @classmethod
    def parse(cls, forward: str, inverse: str, source: Domain, target: Domain) -> "DiffeoMap":
        fw = tuple(parse_scalar(s, source.dim) for s in _split_top(forward))
        inv = tuple(parse_scalar(s, target.dim) for s in _split_top(inverse))
        if len(fw) != target.dim or len(inv) != source.dim:
            raise SpecError("map component counts do not match the domains")
        return cls(fw, inv, source, target)

    @classmethod
    def identity(cls, domain: Domain) -> "DiffeoMap":
        comps = tuple(Var(i) for i in range(domain.dim))
        return cls(comps, comps, domain, domain)

    @cached_property
    def _fw(self):
        return compile_exprs(self.forward, self.source.dim)

    @cached_property
    def _inv(self):
        return compile_exprs(self.inverse, self.target.dim)

    def apply(self, pts) -> np.ndarray:
        return kernels.eval_values(self._fw, np.atleast_2d(pts))

    def apply_inverse(self, pts) -> np.ndarray:
        return kernels.eval_values(self._inv, np.atleast_2d(pts))

    def jacobian(self, pts) -> np.ndarray:
        """``J[p, k, i] = d phi^k / d x^i`` at source points."""
        return kernels.eval_duals(self._fw, np.atleast_2d(pts))[1]

    def preimages(self, q) -> np.ndarray:
        p = self.apply_inverse(q)
        if not np.all(self.source.contains(p)):
            bad = np.atleast_2d(q)[~self.source.contains(p)][0]
            raise PreconditionError(f"point {tuple(bad)} has no preimage in the source domain")
        return p

    def inverse_residual(self, source_pts, target_pts) -> float:
        """Max deviation of forward∘inverse and inverse∘forward from the identity."""
        a = np.max(np.abs(self.apply(self.apply_inverse(target_pts)) - np.atleast_2d(target_pts)),
                   initial=0.0)
        b = np.max(np.abs(self.apply_inverse(self.apply(source_pts)) - np.atleast_2d(source_pts)),
                   initial=0.0)
        return float(max(a, b))

    def compose_inverse(self, f: ScalarField) -> ScalarField:
        """The transported function f ∘ phi^{-1} on the target domain."""
        return ScalarField(substitute(f.expr, self.inverse), self.target)


def pushforward(phi: DiffeoMap, X: VectorField, q):
    """(phi_* X)(q) = Dphi(phi^{-1}(q)) X(phi^{-1}(q))."""
    qs, single = _batch(q)
    p = phi.preimages(qs)
    out = np.einsum("pki,pi->pk", phi.jacobian(p), X.values(p))
    return out[0] if single else out


def pullback_metric_residual(phi: DiffeoMap, g: Metric, h: Metric, q) -> float:
    """max |Dphi^T h(q) Dphi - g(phi^{-1} q)| over target points ``q``."""
    qs, _ = _batch(q)
    p = phi.preimages(qs)
    J = phi.jacobian(p)
    pulled = np.einsum("pki,pkl,plj->pij", J, h.values(qs), J)
    return float(np.max(np.abs(pulled - g.values(p)), initial=0.0))


# -------------------------------------------------------- classification

@dataclass(frozen=True)
class ClassificationReport:
    killing_residual: float
    homothetic_residual: float
    c: float
    concurrent_residual: float
    length_variance: float
    verdict: str  # "concurrent" | "killing" | "homothetic" | "none"
    tol: float

    def as_dict(self) -> dict:
        return {
            "killing_residual": self.killing_residual,
            "homothetic_residual": self.homothetic_residual,
            "c": self.c,
            "concurrent_residual": self.concurrent_residual,
            "length_variance": self.length_variance,
            "verdict": self.verdict,
            "tol": self.tol,
        }


def classify(X: VectorField, m: Metric, grid: Grid, tol: float = 1e-8) -> ClassificationReport:
    """Residuals of the symmetry equations over ``grid``, with the resulting verdict.

    The homothetic constant is fitted first as c = mean(tr(g^{-1} L_X g)) / 2n;
    the concurrent test uses the coordinate basis fields as directions.
    """
    pts = grid.points
    if len(pts) == 0:
        raise PreconditionError("classification needs a non-empty grid")
    n = X.dim
    L = lie_derivative_metric(X, m, pts)
    G = grid.G
    killing = float(np.max(np.abs(L)))
    c = float(np.mean(np.einsum("pij,pji->p", grid.G_inv, L)) / (2 * n))
    homothetic = float(np.max(np.abs(L - 2 * c * G)))

    xv, J = X.value_jac(pts)
    nabla = J.copy()  # nabla[p, k, i] = (nabla_{e_i} X)^k
    if not m.euclidean:
        nabla += np.einsum("pkij,pj->pki", christoffels_at(m, pts), xv)
    concurrent = float(np.max(np.abs(nabla - np.eye(n))))

    length2 = np.einsum("pi,pij,pj->p", xv, G, xv)
    w = grid.weights / np.sum(grid.weights)
    mean = np.sum(w * length2)
    variance = float(np.sum(w * (length2 - mean) ** 2))

    if concurrent < tol and homothetic < tol:
        verdict = "concurrent"
    elif killing < tol:
        verdict = "killing"
    elif homothetic < tol:
        verdict = "homothetic"
    else:
        verdict = "none"
    return ClassificationReport(killing, homothetic, c, concurrent, variance, verdict, tol)
