"""Pure-Python kernels with the same signatures as the compiled ones.

Grid evaluation is vectorised over points with numpy; the integrator runs a
scalar stack machine on ``math`` since it evaluates one point at a time.
"""

import math

import numpy as np

from ._program import (ABS, ADD, ATAN, ATAN2, CONST, COS, DIV, EXP, LOG, MUL,
                       NEG, POW, POWI, SIN, SQRT, SUB, TAN, VAR)

_BINARY = {ADD, SUB, MUL, DIV, POW, ATAN2}


class _Fail(Exception):
    def __init__(self, status, instr, mask):
        self.status = status
        self.instr = instr
        self.point = int(np.flatnonzero(mask)[0]) if np.ndim(mask) else 0


def _guard(status, k, mask):
    if np.any(mask):
        raise _Fail(status, k, mask)


def _run_vec(ops, iargs, fargs, start, stop, pts, with_grad):
    npts, n = pts.shape
    vals = []
    grads = []
    abs_zero = 0
    for k in range(start, stop):
        op = ops[k]
        if op == CONST:
            vals.append(np.full(npts, fargs[k]))
            if with_grad:
                grads.append(np.zeros((npts, n)))
            continue
        if op == VAR:
            vals.append(pts[:, iargs[k]].copy())
            if with_grad:
                g = np.zeros((npts, n))
                g[:, iargs[k]] = 1.0
                grads.append(g)
            continue
        if op in _BINARY:
            b = vals.pop()
            a = vals.pop()
            gb = grads.pop() if with_grad else None
            ga = grads.pop() if with_grad else None
            if op == ADD:
                r = a + b
                g = ga + gb if with_grad else None
            elif op == SUB:
                r = a - b
                g = ga - gb if with_grad else None
            elif op == MUL:
                r = a * b
                g = b[:, None] * ga + a[:, None] * gb if with_grad else None
            elif op == DIV:
                _guard(1, k, b == 0.0)
                r = a / b
                g = (ga - r[:, None] * gb) / b[:, None] if with_grad else None
            elif op == POW:
                _guard(4, k, a <= 0.0)
                r = np.power(a, b)
                if with_grad:
                    g = r[:, None] * (gb * np.log(a)[:, None] + (b / a)[:, None] * ga)
                else:
                    g = None
            else:
                r2 = a * a + b * b
                _guard(5, k, r2 == 0.0)
                r = np.arctan2(a, b)
                g = (b[:, None] * ga - a[:, None] * gb) / r2[:, None] if with_grad else None
        else:
            a = vals.pop()
            ga = grads.pop() if with_grad else None
            f = None
            if op == NEG:
                r = -a
                f = -1.0
            elif op == POWI:
                e = int(iargs[k])
                if e == 0:
                    r = np.ones_like(a)
                    f = 0.0
                else:
                    _guard(8, k, (a == 0.0) & (e < 0))
                    r = np.power(a, float(e))
                    if with_grad:
                        f = e * np.power(a, float(e - 1))
            elif op == SIN:
                r = np.sin(a)
                f = np.cos(a) if with_grad else None
            elif op == COS:
                r = np.cos(a)
                f = -np.sin(a) if with_grad else None
            elif op == TAN:
                r = np.tan(a)
                f = 1.0 + r * r
            elif op == EXP:
                r = np.exp(a)
                f = r
            elif op == LOG:
                _guard(2, k, a <= 0.0)
                r = np.log(a)
                f = 1.0 / a if with_grad else None
            elif op == SQRT:
                _guard(3, k, a < 0.0)
                if with_grad:
                    _guard(7, k, a == 0.0)
                r = np.sqrt(a)
                f = 0.5 / r if with_grad else None
            elif op == ATAN:
                r = np.arctan(a)
                f = 1.0 / (1.0 + a * a) if with_grad else None
            else:
                r = np.abs(a)
                if with_grad:
                    f = np.sign(a)
                    abs_zero += int(np.count_nonzero(a == 0.0))
            if with_grad:
                g = ga * (f[:, None] if np.ndim(f) else f)
        _guard(6, k, ~np.isfinite(r))
        if with_grad:
            _guard(6, k, ~np.all(np.isfinite(g), axis=1))
            grads.append(g)
        vals.append(r)
    return vals[0], (grads[0] if with_grad else None), abs_zero


def eval_values(ops, iargs, fargs, starts, depth, pts, out):
    try:
        with np.errstate(all="ignore"):
            for o in range(len(starts) - 1):
                out[:, o] = _run_vec(ops, iargs, fargs, starts[o], starts[o + 1], pts, False)[0]
    except _Fail as fail:
        return fail.status, fail.instr, fail.point
    return 0, -1, -1


def eval_duals(ops, iargs, fargs, starts, depth, pts, out, grad):
    total = 0
    try:
        with np.errstate(all="ignore"):
            for o in range(len(starts) - 1):
                v, g, abs_zero = _run_vec(ops, iargs, fargs, starts[o], starts[o + 1], pts, True)
                out[:, o] = v
                grad[:, o, :] = g
                total += abs_zero
    except _Fail as fail:
        return fail.status, fail.instr, fail.point, total
    return 0, -1, -1, total


# ------------------------------------------------------------- integrator

_SCALAR = {
    SIN: math.sin, COS: math.cos, TAN: math.tan, EXP: math.exp,
    ATAN: math.atan, ABS: abs,
}


def _run_scalar(code, x):
    st = []
    for op, iarg, farg, k in code:
        if op == CONST:
            st.append(farg)
            continue
        if op == VAR:
            st.append(x[iarg])
            continue
        if op in _BINARY:
            b = st.pop()
            a = st.pop()
            if op == ADD:
                r = a + b
            elif op == SUB:
                r = a - b
            elif op == MUL:
                r = a * b
            elif op == DIV:
                if b == 0.0:
                    raise _Fail(1, k, True)
                r = a / b
            elif op == POW:
                if a <= 0.0:
                    raise _Fail(4, k, True)
                r = _checked(math.pow, k, a, b)
            else:
                if a == 0.0 and b == 0.0:
                    raise _Fail(5, k, True)
                r = math.atan2(a, b)
        else:
            a = st.pop()
            if op == NEG:
                r = -a
            elif op == POWI:
                if a == 0.0 and iarg < 0:
                    raise _Fail(8, k, True)
                r = _checked(math.pow, k, a, float(iarg))
            elif op == LOG:
                if a <= 0.0:
                    raise _Fail(2, k, True)
                r = math.log(a)
            elif op == SQRT:
                if a < 0.0:
                    raise _Fail(3, k, True)
                r = math.sqrt(a)
            else:
                r = _checked(_SCALAR[op], k, a)
        if not math.isfinite(r):
            raise _Fail(6, k, True)
        st.append(r)
    return st[0]


def _checked(fn, k, *args):
    try:
        return fn(*args)
    except (OverflowError, ValueError):
        raise _Fail(6, k, True)


def rk4(ops, iargs, fargs, starts, depth, x0, h, nsteps, periods, path):
    n = len(x0)
    codes = []
    for o in range(n):
        rng = range(int(starts[o]), int(starts[o + 1]))
        codes.append([(int(ops[k]), int(iargs[k]), float(fargs[k]), k) for k in rng])
    periods = [float(p) for p in periods]

    def field(x):
        return [_run_scalar(c, x) for c in codes]

    x = [float(v) for v in x0]
    path[0, :] = x
    half = 0.5 * h
    sixth = h / 6.0
    for s in range(nsteps):
        try:
            k1 = field(x)
            k2 = field([x[j] + half * k1[j] for j in range(n)])
            k3 = field([x[j] + half * k2[j] for j in range(n)])
            k4 = field([x[j] + h * k3[j] for j in range(n)])
        except _Fail as fail:
            return s, fail.status, fail.instr
        y = [x[j] + sixth * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) for j in range(n)]
        for j, p in enumerate(periods):
            if p > 0.0:
                y[j] = y[j] - p * math.floor(y[j] / p)
                if y[j] >= p:
                    y[j] -= p
        path[s + 1, :] = y
        x = y
    return nsteps, 0, -1
