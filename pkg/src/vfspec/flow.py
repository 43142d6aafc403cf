"""Integral curves, the local flow map and periodic-orbit detection.

Integration is fixed-step classical RK4. The requested horizon is split
into ``ceil(t_max / dt)`` equal steps, so the stored times are uniform and
the last one is ``t_max``. A step that lands outside the domain stops the
curve; the exit time is then bracketed by bisecting that last step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .calculus import VectorField
from .config import DEFAULTS
from .errors import FlowError, FlowExitError, PreconditionError
from .expr import Neg
from .geometry import Domain, membership

__all__ = ["Trajectory", "integrate", "flow_map", "detect_period"]

_CHUNK = 4096
_BISECTIONS = 4  # bracket width h / 16


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    domain: Domain
    exited: bool = False
    exit_bracket: tuple | None = None
    period: float | None = None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def metadata(self) -> dict:
        return {
            "exited": self.exited,
            "exit_bracket": list(self.exit_bracket) if self.exit_bracket else None,
            "period": self.period,
            "samples": len(self.times),
            "t_end": float(self.times[-1]),
        }


def _bisect_exit(X: VectorField, x: np.ndarray, h: float, periods) -> tuple[float, float]:
    lo, hi = 0.0, h
    for _ in range(_BISECTIONS):
        mid = 0.5 * (lo + hi)
        path, err = kernels.rk4(X.program, x, mid, 1, periods)
        if err is None and len(path) == 2 and membership(X.domain, path[1]):
            lo = mid
        else:
            hi = mid
    return lo, hi


def integrate(X: VectorField, x0, t_max: float, dt: float = DEFAULTS.dt) -> Trajectory:
    """Integral curve of ``X`` from ``x0`` up to ``t_max`` or the domain exit."""
    d = X.domain
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_max < 0:
        raise ValueError("t_max must be non-negative (integrate -X for backward time)")
    x0 = d.wrap(np.asarray(x0, dtype=float))
    if x0.shape != (d.dim,) or not membership(d, x0):
        raise PreconditionError(f"start point {tuple(x0)} is not in the domain {d.spec}")
    nsteps = math.ceil(t_max / dt - 1e-9) if t_max > 0 else 0
    h = t_max / nsteps if nsteps else dt
    periods = d.periods

    pieces = [x0[None, :]]
    x = x0
    done = 0
    exited, bracket = False, None
    while done < nsteps:
        k = min(_CHUNK, nsteps - done)
        path, err = kernels.rk4(X.program, x, h, k, periods)
        new = path[1:]
        inside = d.contains(new) if len(new) else np.zeros(0, dtype=bool)
        if not np.all(inside):
            j = int(np.argmin(inside))
            pieces.append(new[:j])
            last = path[j]
            lo, hi = _bisect_exit(X, last, h, periods)
            t_last = (done + j) * h
            exited, bracket = True, (t_last + lo, t_last + hi)
            break
        if err is not None:
            raise FlowError(f"integration hit a pole inside the domain: {err}")
        pieces.append(new)
        x = new[-1]
        done += k
    points = np.concatenate(pieces)
    times = np.arange(len(points)) * h
    traj = Trajectory(times, points, d, exited, bracket)
    if not exited and len(points) > 2:
        traj = replace(traj, period=detect_period(traj))
    return traj


def flow_map(X: VectorField, t: float, x, dt: float = DEFAULTS.dt) -> np.ndarray:
    """Phi(t, x). Negative ``t`` integrates ``-X``. Raises FlowExitError on exit."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        return x.copy()
    field = X if t > 0 else VectorField(tuple(Neg(c) for c in X.components), X.domain)
    traj = integrate(field, x, abs(t), dt)
    if traj.exited:
        raise FlowExitError("flow leaves the domain before the requested time", traj.exit_bracket)
    return traj.end


def detect_period(traj: Trajectory, tol: float = DEFAULTS.period_tol) -> float | None:
    """Smallest return time T with |Phi(T, x0) - x0| < tol, or None.

    Scans the squared distance to the start point for interior local minima
    and refines each by a parabola through the three neighbouring samples.
    """
    if traj.exited or len(traj.points) < 3:
        return None
    disp = traj.domain.displacement(traj.points[0], traj.points)
    d2 = np.sum(disp * disp, axis=1)
    h = traj.dt
    # strict descent into i, non-ascent out of it
    idx = np.flatnonzero((d2[1:-1] < d2[:-2]) & (d2[1:-1] <= d2[2:])) + 1
    for i in idx:
        a, b, c = d2[i - 1], d2[i], d2[i + 1]
        curv = a - 2 * b + c
        if curv > 0:
            shift = 0.5 * (a - c) / curv
            floor = b - 0.25 * (a - c) * shift
        else:
            shift, floor = 0.0, b
        if math.sqrt(max(floor, 0.0)) < tol:
            return float(traj.times[i] + shift * h)
    return None
