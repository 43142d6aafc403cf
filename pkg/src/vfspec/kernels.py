"""Evaluation kernels with backend selection at import.

The compiled extension ``vfspec._ckernels`` is used when it was built;
otherwise the pure-Python ``vfspec._pykernels`` is used. Set
``VFSPEC_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from . import _pykernels
from ._program import STATUS_REASONS, Program
from .errors import EvalDomainError


def _load_compiled() -> ModuleType | None:
    if os.environ.get("VFSPEC_BACKEND", "").lower() == "python":
        return None
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_compiled = _load_compiled()
BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled
BACKEND = "cython" if _compiled is not None else "python"


def _impl(backend: str | None) -> ModuleType:
    return BACKENDS[backend or BACKEND]


def _points(pts, dim: int) -> np.ndarray:
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"expected points of shape (N, {dim}), got {pts.shape}")
    return pts


def _raise(prog: Program, status: int, instr: int, point):
    raise EvalDomainError(STATUS_REASONS[status], prog.nodes[instr], point)


def eval_values(prog: Program, pts, backend: str | None = None) -> np.ndarray:
    """Values of every packed output at every point, shape (N, m)."""
    pts = _points(pts, prog.dim)
    out = np.empty((pts.shape[0], prog.n_outputs))
    if pts.shape[0] == 0:
        return out
    status, instr, where = _impl(backend).eval_values(
        prog.ops, prog.iargs, prog.fargs, prog.starts, prog.depth, pts, out)
    if status:
        _raise(prog, status, instr, pts[where])
    return out


def eval_duals(prog: Program, pts, backend: str | None = None):
    """Values (N, m), gradients (N, m, dim) and the count of abs() kinks hit."""
    pts = _points(pts, prog.dim)
    npts = pts.shape[0]
    out = np.empty((npts, prog.n_outputs))
    grad = np.empty((npts, prog.n_outputs, prog.dim))
    if npts == 0:
        return out, grad, 0
    status, instr, where, abs_zero = _impl(backend).eval_duals(
        prog.ops, prog.iargs, prog.fargs, prog.starts, prog.depth, pts, out, grad)
    if status:
        _raise(prog, status, instr, pts[where])
    return out, grad, abs_zero


def rk4(prog: Program, x0, h: float, nsteps: int, periods=None, backend: str | None = None):
    """Run ``nsteps`` fourth-order steps of size ``h`` on the field ``prog``.

    Returns ``(path, error)`` where ``path`` holds the successful steps
    (``path[0] == x0``) and ``error`` is an :class:`EvalDomainError` for the
    step that hit a pole, or None.
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    n = prog.dim
    if prog.n_outputs != n or x0.shape != (n,):
        raise ValueError("field program and start point must share the dimension")
    periods = np.zeros(n) if periods is None else np.ascontiguousarray(periods, dtype=np.float64)
    path = np.empty((nsteps + 1, n))
    done, status, instr = _impl(backend).rk4(
        prog.ops, prog.iargs, prog.fargs, prog.starts, prog.depth, x0, float(h),
        int(nsteps), periods, path)
    err = None
    if status:
        err = EvalDomainError(STATUS_REASONS[status], prog.nodes[instr], path[done])
    return path[: done + 1], err
