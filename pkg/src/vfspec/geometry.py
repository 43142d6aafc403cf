"""Chart domains, Riemannian metrics and quadrature grids.

A :class:`Domain` is a region of R^n with a decidable membership test. The
open, non-complete regions (punctured disc, plane minus a line) keep a guard
band around their singular set so numerics never touch it. Compact manifolds
are represented as flat periodic boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from ._program import compile_exprs
from .errors import GeometryError, ParseError, SpecError
from .expr import Const, evaluate, parse_scalar, to_string

__all__ = [
    "Domain", "Metric", "Grid", "parse_domain", "parse_metric", "membership",
    "build_grid", "christoffels_at", "det", "inverse",
]

DEFAULT_PUNCTURE = 0.01
DEFAULT_LINE_GUARD = 0.05


@dataclass(frozen=True)
class Domain:
    """Region of R^n. Build with the classmethods or :func:`parse_domain`."""

    kind: str
    dim: int
    bounds: tuple  # ((lo, hi), ...) bounding box
    center: tuple = ()
    radius: float = 0.0
    inner: float = 0.0  # puncture radius, annulus inner radius or line guard
    clip_radius: float | None = None
    periods: tuple | None = None

    @property
    def compact(self) -> bool:
        return self.kind == "torus"

    @property
    def lengths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.bounds])

    # constructors ------------------------------------------------------
    @classmethod
    def box(cls, bounds: Sequence[tuple[float, float]]) -> "Domain":
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if not bounds or any(hi <= lo for lo, hi in bounds):
            raise SpecError("box needs non-empty intervals lo < hi")
        return cls("box", len(bounds), bounds)

    @classmethod
    def disc(cls, center: Sequence[float], radius: float) -> "Domain":
        center = tuple(float(c) for c in center)
        if radius <= 0:
            raise SpecError("disc radius must be positive")
        return cls("disc", len(center), tuple((c - radius, c + radius) for c in center),
                   center=center, radius=float(radius))

    @classmethod
    def annulus(cls, r_in: float, r_out: float, center=(0.0, 0.0)) -> "Domain":
        if not 0 < r_in < r_out:
            raise SpecError("annulus needs 0 < r_in < r_out")
        center = tuple(float(c) for c in center)
        return cls("annulus", len(center), tuple((c - r_out, c + r_out) for c in center),
                   center=center, radius=float(r_out), inner=float(r_in))

    @classmethod
    def punctured_disc(cls, radius: float, eps: float = DEFAULT_PUNCTURE,
                       center=(0.0, 0.0)) -> "Domain":
        if not 0 < eps < radius:
            raise SpecError("punctured disc needs 0 < eps < radius")
        center = tuple(float(c) for c in center)
        return cls("punctured-disc", len(center), tuple((c - radius, c + radius) for c in center),
                   center=center, radius=float(radius), inner=float(eps))

    @classmethod
    def plane_minus_line(cls, half_width: float, guard: float = DEFAULT_LINE_GUARD,
                         clip_radius: float | None = None) -> "Domain":
        """Square [-w, w]^2 with the strip |x| < guard removed (the line x = 0 excluded)."""
        if not 0 < guard < half_width:
            raise SpecError("plane-minus-line needs 0 < guard < half width")
        if clip_radius is not None and clip_radius <= guard:
            raise SpecError("clip radius must exceed the guard")
        w = float(half_width)
        return cls("plane-minus-line", 2, ((-w, w), (-w, w)), inner=float(guard),
                   clip_radius=None if clip_radius is None else float(clip_radius))

    @classmethod
    def torus(cls, periods: Sequence[float]) -> "Domain":
        periods = tuple(float(p) for p in periods)
        if not periods or any(p <= 0 for p in periods):
            raise SpecError("torus periods must be positive")
        return cls("torus", len(periods), tuple((0.0, p) for p in periods), periods=periods)

    # behaviour ---------------------------------------------------------
    def contains(self, pts) -> np.ndarray:
        """Vectorised membership for points of shape (N, n)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        finite = np.all(np.isfinite(pts), axis=1)
        if self.kind == "torus":
            return finite
        if self.kind == "box":
            lo = np.array([b[0] for b in self.bounds])
            hi = np.array([b[1] for b in self.bounds])
            return finite & np.all((pts >= lo) & (pts <= hi), axis=1)
        if self.kind == "plane-minus-line":
            w = self.bounds[0][1]
            ok = finite & (np.abs(pts[:, 0]) >= self.inner) & np.all(np.abs(pts) <= w, axis=1)
            if self.clip_radius is not None:
                ok &= np.hypot(pts[:, 0], pts[:, 1]) <= self.clip_radius
            return ok
        r = np.sqrt(np.sum((pts - np.array(self.center)) ** 2, axis=1))
        if self.kind == "disc":
            return finite & (r < self.radius)
        if self.kind == "annulus":
            return finite & (r > self.inner) & (r < self.radius)
        return finite & (r >= self.inner) & (r < self.radius)  # punctured disc

    def wrap(self, pts) -> np.ndarray:
        """Canonical representative: periodic coordinates reduced into [0, period)."""
        pts = np.array(pts, dtype=float)
        if self.periods is None:
            return pts
        per = np.array(self.periods)
        out = pts - per * np.floor(pts / per)
        return np.where(out >= per, out - per, out)

    def displacement(self, a, b) -> np.ndarray:
        """b - a, taking the shortest representative on periodic axes."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.periods is not None:
            per = np.array(self.periods)
            d = d - per * np.round(d / per)
        return d

    @property
    def spec(self) -> str:
        def fmt(values):
            return ",".join(repr(float(v)) for v in values)

        if self.kind == "box":
            return "box:" + fmt(v for b in self.bounds for v in b)
        if self.kind == "disc":
            return "disc:" + fmt(self.center + (self.radius,))
        if self.kind == "annulus":
            return "annulus:" + fmt((self.inner, self.radius) + self.center)
        if self.kind == "punctured-disc":
            return "punctured-disc:" + fmt((self.radius, self.inner) + self.center)
        if self.kind == "plane-minus-line":
            extra = () if self.clip_radius is None else (self.clip_radius,)
            return "plane-minus-line:" + fmt((self.bounds[0][1], self.inner) + extra)
        return "torus:" + fmt(self.periods)


def membership(d: Domain, p) -> bool:
    return bool(d.contains(np.asarray(p, dtype=float)[None, :])[0])


def _numbers(text: str) -> list[float]:
    values = []
    for item in text.split(","):
        item = item.strip()
        try:
            values.append(evaluate(parse_scalar(item, 0), ()))
        except ParseError as exc:
            raise SpecError(f"bad number {item!r} in domain spec: {exc}") from None
    return values


def parse_domain(spec: str) -> Domain:
    """Parse a CLI domain string such as ``"box:-2,2,-2,2"`` or ``"torus:2*pi,2*pi"``."""
    kind, sep, rest = spec.partition(":")
    kind = kind.strip()
    if not sep:
        raise SpecError(f"domain spec {spec!r} lacks 'kind:' prefix")
    nums = _numbers(rest)
    try:
        if kind == "box":
            if len(nums) % 2:
                raise SpecError("box needs lo,hi pairs")
            return Domain.box(list(zip(nums[::2], nums[1::2])))
        if kind == "disc":
            if len(nums) < 2:
                raise SpecError("disc needs center coordinates then the radius")
            return Domain.disc(nums[:-1], nums[-1])
        if kind == "annulus":
            return Domain.annulus(nums[0], nums[1], nums[2:] or (0.0, 0.0))
        if kind == "punctured-disc":
            eps = nums[1] if len(nums) > 1 else DEFAULT_PUNCTURE
            return Domain.punctured_disc(nums[0], eps, nums[2:] or (0.0, 0.0))
        if kind == "plane-minus-line":
            guard = nums[1] if len(nums) > 1 else DEFAULT_LINE_GUARD
            clip = nums[2] if len(nums) > 2 else None
            return Domain.plane_minus_line(nums[0], guard, clip)
        if kind in ("torus", "periodic-box"):
            return Domain.torus(nums)
    except IndexError:
        raise SpecError(f"too few numbers in domain spec {spec!r}") from None
    raise SpecError(f"unknown domain kind {kind!r}")


# ------------------------------------------------------------------ metric

def det(G: np.ndarray) -> np.ndarray:
    """Determinants of a stack of n x n matrices; closed form for n <= 3."""
    n = G.shape[-1]
    if n == 1:
        return G[..., 0, 0].copy()
    if n == 2:
        return G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
    if n == 3:
        return (G[..., 0, 0] * (G[..., 1, 1] * G[..., 2, 2] - G[..., 1, 2] * G[..., 2, 1])
                - G[..., 0, 1] * (G[..., 1, 0] * G[..., 2, 2] - G[..., 1, 2] * G[..., 2, 0])
                + G[..., 0, 2] * (G[..., 1, 0] * G[..., 2, 1] - G[..., 1, 1] * G[..., 2, 0]))
    return np.linalg.det(G)


def inverse(G: np.ndarray) -> np.ndarray:
    n = G.shape[-1]
    if n > 3:
        return np.linalg.inv(G)
    d = det(G)
    if np.any(d == 0):
        raise GeometryError("singular metric")
    if n == 1:
        return 1.0 / G
    out = np.empty_like(G)
    if n == 2:
        out[..., 0, 0] = G[..., 1, 1]
        out[..., 1, 1] = G[..., 0, 0]
        out[..., 0, 1] = -G[..., 0, 1]
        out[..., 1, 0] = -G[..., 1, 0]
        return out / d[..., None, None]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = (G[..., r[0], c[0]] * G[..., r[1], c[1]]
                     - G[..., r[0], c[1]] * G[..., r[1], c[0]])
            out[..., i, j] = (-1) ** (i + j) * minor
    return out / d[..., None, None]


def leading_minors_positive(G: np.ndarray) -> np.ndarray:
    ok = np.ones(G.shape[:-2], dtype=bool)
    for k in range(1, G.shape[-1] + 1):
        ok &= det(G[..., :k, :k]) > 0
    return ok


@dataclass(frozen=True, eq=False)
class Metric:
    """Symmetric matrix of component expressions g_ij over n coordinates."""

    entries: tuple  # n x n tuple of Expr
    euclidean: bool = False

    @classmethod
    def flat(cls, dim: int) -> "Metric":
        rows = tuple(tuple(Const(1.0 if i == j else 0.0) for j in range(dim)) for i in range(dim))
        return cls(rows, euclidean=True)

    @property
    def dim(self) -> int:
        return len(self.entries)

    @cached_property
    def _program(self):
        return compile_exprs([e for row in self.entries for e in row], self.dim)

    def values(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        n = self.dim
        if self.euclidean:
            return np.broadcast_to(np.eye(n), (len(pts), n, n)).copy()
        G = kernels.eval_values(self._program, pts).reshape(len(pts), n, n)
        _check_symmetric(G)
        return G

    def values_and_derivatives(self, pts):
        """``G[p, i, j] = g_ij`` and ``dG[p, i, j, k] = d_k g_ij``."""
        pts = np.atleast_2d(pts)
        n = self.dim
        if self.euclidean:
            return self.values(pts), np.zeros((len(pts), n, n, n))
        v, g, _ = kernels.eval_duals(self._program, pts)
        G = v.reshape(len(pts), n, n)
        _check_symmetric(G)
        return G, g.reshape(len(pts), n, n, n)

    @property
    def spec(self) -> str:
        if self.euclidean:
            return "euclidean"
        return ";".join(to_string(e, self.dim) for row in self.entries for e in row)


def _check_symmetric(G):
    asym = np.max(np.abs(G - np.swapaxes(G, -1, -2)), initial=0.0)
    if asym > 1e-12 * max(1.0, float(np.max(np.abs(G), initial=0.0))):
        raise GeometryError(f"metric is not symmetric (max |g_ij - g_ji| = {asym:.3g})")


def parse_metric(spec: str, dim: int) -> Metric:
    """``"euclidean"`` or n*n semicolon-separated row-major expressions."""
    if spec.strip().lower() == "euclidean":
        return Metric.flat(dim)
    parts = [s for s in spec.split(";")]
    if len(parts) != dim * dim:
        raise SpecError(f"metric needs {dim * dim} entries, got {len(parts)}")
    exprs = [parse_scalar(s, dim) for s in parts]
    # symmetry is checked numerically at evaluation time, not structurally
    rows = tuple(tuple(exprs[i * dim:(i + 1) * dim]) for i in range(dim))
    return Metric(rows)


# ------------------------------------------------------------------- grids

@dataclass(frozen=True, eq=False)
class Grid:
    """Member points of a midpoint tensor grid with Riemannian volume weights."""

    domain: Domain
    metric: Metric
    resolution: tuple
    spacing: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    G: np.ndarray = field(repr=False)
    G_inv: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.points)

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    @property
    def cell_size(self) -> float:
        return float(np.max(self.spacing))


def build_grid(d: Domain, m: Metric, resolution) -> Grid:
    """Midpoint-rule tensor grid over the bounding box, clipped to the domain.

    Each weight is the cell volume times sqrt(det g) at the cell centre.
    """
    if m.dim != d.dim:
        raise SpecError("metric and domain dimensions differ")
    res = (resolution,) * d.dim if np.isscalar(resolution) else tuple(resolution)
    if len(res) != d.dim or any(int(r) < 2 for r in res):
        raise ValueError("resolution must be >= 2 per axis")
    res = tuple(int(r) for r in res)
    axes = []
    spacing = []
    for (lo, hi), r in zip(d.bounds, res):
        h = (hi - lo) / r
        axes.append(lo + (np.arange(r) + 0.5) * h)
        spacing.append(h)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([a.ravel() for a in mesh], axis=1)
    pts = np.ascontiguousarray(pts[d.contains(pts)])
    G = m.values(pts)
    if len(pts) and not np.all(leading_minors_positive(G)):
        bad = pts[~leading_minors_positive(G)][0]
        raise GeometryError(f"metric not positive-definite at {tuple(bad)}")
    G_inv = inverse(G) if len(pts) else G
    cell = math.prod(spacing)
    weights = cell * np.sqrt(det(G)) if len(pts) else np.zeros(0)
    return Grid(d, m, res, np.array(spacing), pts, weights, G, G_inv)


def christoffels_at(m: Metric, p) -> np.ndarray:
    """Gamma[k, i, j] (or a stack over points) of the Levi-Civita connection."""
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    G, dG = m.values_and_derivatives(np.atleast_2d(p))
    if not np.all(leading_minors_positive(G)):
        raise GeometryError("metric not positive-definite")
    G_inv = inverse(G)
    # lowered[p, l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lowered = (np.einsum("pjli->plij", dG) + np.einsum("pilj->plij", dG)
               - np.einsum("pijl->plij", dG))
    gamma = 0.5 * np.einsum("pkl,plij->pkij", G_inv, lowered)
    return gamma[0] if single else gamma
