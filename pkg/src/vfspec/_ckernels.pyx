# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stack-machine kernels.

Opcodes and status codes mirror vfspec._program. Every kernel returns a
status tuple instead of raising, so the GIL is only held at entry and exit.
"""

from libc.math cimport sin, cos, tan, exp, log, sqrt, atan, atan2, fabs, pow, isfinite, floor
from libc.stdlib cimport malloc, free

cdef enum:
    CONST = 0
    VAR = 1
    NEG = 2
    ADD = 3
    SUB = 4
    MUL = 5
    DIV = 6
    POW = 7
    POWI = 8
    SIN = 9
    COS = 10
    TAN = 11
    EXP = 12
    LOG = 13
    SQRT = 14
    ATAN = 15
    ATAN2 = 16
    ABS = 17


cdef int run_value(const int[::1] ops, const long long[::1] iargs, const double[::1] fargs,
                   Py_ssize_t start, Py_ssize_t stop, const double* x, double* st,
                   double* result, Py_ssize_t* bad) noexcept nogil:
    cdef Py_ssize_t k, sp = 0
    cdef int op
    cdef double a, b, r
    for k in range(start, stop):
        op = ops[k]
        if op == CONST:
            st[sp] = fargs[k]
            sp += 1
            continue
        if op == VAR:
            st[sp] = x[iargs[k]]
            sp += 1
            continue
        a = st[sp - 1]
        if op == NEG:
            r = -a
        elif op == ADD or op == SUB or op == MUL or op == DIV or op == POW or op == ATAN2:
            b = a
            a = st[sp - 2]
            sp -= 1
            if op == ADD:
                r = a + b
            elif op == SUB:
                r = a - b
            elif op == MUL:
                r = a * b
            elif op == DIV:
                if b == 0.0:
                    bad[0] = k
                    return 1
                r = a / b
            elif op == POW:
                if a <= 0.0:
                    bad[0] = k
                    return 4
                r = pow(a, b)
            else:
                if a == 0.0 and b == 0.0:
                    bad[0] = k
                    return 5
                r = atan2(a, b)
        elif op == POWI:
            if a == 0.0 and iargs[k] < 0:
                bad[0] = k
                return 8
            r = pow(a, <double>iargs[k])
        elif op == SIN:
            r = sin(a)
        elif op == COS:
            r = cos(a)
        elif op == TAN:
            r = tan(a)
        elif op == EXP:
            r = exp(a)
        elif op == LOG:
            if a <= 0.0:
                bad[0] = k
                return 2
            r = log(a)
        elif op == SQRT:
            if a < 0.0:
                bad[0] = k
                return 3
            r = sqrt(a)
        elif op == ATAN:
            r = atan(a)
        else:
            r = fabs(a)
        if not isfinite(r):
            bad[0] = k
            return 6
        st[sp - 1] = r
    result[0] = st[0]
    return 0


cdef int run_dual(const int[::1] ops, const long long[::1] iargs, const double[::1] fargs,
                  Py_ssize_t start, Py_ssize_t stop, const double* x, Py_ssize_t n,
                  double* st, double* gs, double* result, double* grad,
                  Py_ssize_t* bad, Py_ssize_t* abs_zero) noexcept nogil:
    cdef Py_ssize_t k, j, sp = 0
    cdef int op
    cdef double a, b, r, f, s, r2
    cdef double* ga
    cdef double* gb
    for k in range(start, stop):
        op = ops[k]
        if op == CONST or op == VAR:
            ga = gs + sp * n
            for j in range(n):
                ga[j] = 0.0
            if op == CONST:
                st[sp] = fargs[k]
            else:
                st[sp] = x[iargs[k]]
                ga[iargs[k]] = 1.0
            sp += 1
            continue
        a = st[sp - 1]
        ga = gs + (sp - 1) * n
        if op == ADD or op == SUB or op == MUL or op == DIV or op == POW or op == ATAN2:
            b = a
            gb = ga
            a = st[sp - 2]
            ga = gs + (sp - 2) * n
            sp -= 1
            if op == ADD:
                r = a + b
                for j in range(n):
                    ga[j] = ga[j] + gb[j]
            elif op == SUB:
                r = a - b
                for j in range(n):
                    ga[j] = ga[j] - gb[j]
            elif op == MUL:
                r = a * b
                for j in range(n):
                    ga[j] = b * ga[j] + a * gb[j]
            elif op == DIV:
                if b == 0.0:
                    bad[0] = k
                    return 1
                r = a / b
                for j in range(n):
                    ga[j] = (ga[j] - r * gb[j]) / b
            elif op == POW:
                if a <= 0.0:
                    bad[0] = k
                    return 4
                r = pow(a, b)
                f = log(a)
                for j in range(n):
                    ga[j] = r * (gb[j] * f + b * ga[j] / a)
            else:
                r2 = a * a + b * b
                if r2 == 0.0:
                    bad[0] = k
                    return 5
                r = atan2(a, b)
                for j in range(n):
                    ga[j] = (b * ga[j] - a * gb[j]) / r2
        else:
            if op == NEG:
                r = -a
                f = -1.0
            elif op == POWI:
                if iargs[k] == 0:
                    r = 1.0
                    f = 0.0
                else:
                    if a == 0.0 and iargs[k] < 0:
                        bad[0] = k
                        return 8
                    r = pow(a, <double>iargs[k])
                    f = iargs[k] * pow(a, <double>(iargs[k] - 1))
            elif op == SIN:
                r = sin(a)
                f = cos(a)
            elif op == COS:
                r = cos(a)
                f = -sin(a)
            elif op == TAN:
                r = tan(a)
                f = 1.0 + r * r
            elif op == EXP:
                r = exp(a)
                f = r
            elif op == LOG:
                if a <= 0.0:
                    bad[0] = k
                    return 2
                r = log(a)
                f = 1.0 / a
            elif op == SQRT:
                if a < 0.0:
                    bad[0] = k
                    return 3
                if a == 0.0:
                    bad[0] = k
                    return 7
                r = sqrt(a)
                f = 0.5 / r
            elif op == ATAN:
                r = atan(a)
                f = 1.0 / (1.0 + a * a)
            else:
                r = fabs(a)
                if a > 0.0:
                    f = 1.0
                elif a < 0.0:
                    f = -1.0
                else:
                    f = 0.0
                    abs_zero[0] += 1
            for j in range(n):
                ga[j] = f * ga[j]
        if not isfinite(r):
            bad[0] = k
            return 6
        for j in range(n):
            if not isfinite(ga[j]):
                bad[0] = k
                return 6
        st[sp - 1] = r
    result[0] = st[0]
    for j in range(n):
        grad[j] = gs[j]
    return 0


def eval_values(const int[::1] ops, const long long[::1] iargs, const double[::1] fargs,
                const long long[::1] starts, int depth, const double[:, ::1] pts,
                double[:, ::1] out):
    cdef Py_ssize_t npts = pts.shape[0], m = starts.shape[0] - 1
    cdef Py_ssize_t i, o, bad = -1, where = -1
    cdef int status = 0
    cdef double* st = <double*> malloc(depth * sizeof(double))
    if st == NULL:
        raise MemoryError()
    with nogil:
        for i in range(npts):
            for o in range(m):
                status = run_value(ops, iargs, fargs, starts[o], starts[o + 1],
                                   &pts[i, 0], st, &out[i, o], &bad)
                if status != 0:
                    where = i
                    break
            if status != 0:
                break
    free(st)
    return status, bad, where


def eval_duals(const int[::1] ops, const long long[::1] iargs, const double[::1] fargs,
               const long long[::1] starts, int depth, const double[:, ::1] pts,
               double[:, ::1] out, double[:, :, ::1] grad):
    cdef Py_ssize_t npts = pts.shape[0], m = starts.shape[0] - 1, n = pts.shape[1]
    cdef Py_ssize_t i, o, bad = -1, where = -1, abs_zero = 0
    cdef int status = 0
    cdef Py_ssize_t width = n if n > 0 else 1
    cdef double* st = <double*> malloc(depth * sizeof(double))
    cdef double* gs = <double*> malloc(depth * width * sizeof(double))
    if st == NULL or gs == NULL:
        free(st)
        free(gs)
        raise MemoryError()
    with nogil:
        for i in range(npts):
            for o in range(m):
                status = run_dual(ops, iargs, fargs, starts[o], starts[o + 1],
                                  &pts[i, 0], n, st, gs, &out[i, o], &grad[i, o, 0],
                                  &bad, &abs_zero)
                if status != 0:
                    where = i
                    break
            if status != 0:
                break
    free(st)
    free(gs)
    return status, bad, where, abs_zero


cdef int field(const int[::1] ops, const long long[::1] iargs, const double[::1] fargs,
               const long long[::1] starts, Py_ssize_t n, const double* x, double* st,
               double* v, Py_ssize_t* bad) noexcept nogil:
    cdef Py_ssize_t o
    cdef int status
    for o in range(n):
        status = run_value(ops, iargs, fargs, starts[o], starts[o + 1], x, st, &v[o], bad)
        if status != 0:
            return status
    return 0


def rk4(const int[::1] ops, const long long[::1] iargs, const double[::1] fargs,
        const long long[::1] starts, int depth, const double[::1] x0, double h,
        Py_ssize_t nsteps, const double[::1] periods, double[:, ::1] path):
    """Classical fourth-order steps from x0; path[0] = x0, path[s] after s steps.

    Returns (steps completed, status, instruction). Coordinates with a
    positive period are wrapped into [0, period) after every step.
    """
    cdef Py_ssize_t n = x0.shape[0], s, j, bad = -1, done = 0
    cdef int status = 0
    cdef double* st = <double*> malloc(depth * sizeof(double))
    cdef double* w = <double*> malloc(6 * n * sizeof(double) + sizeof(double))
    if st == NULL or w == NULL:
        free(st)
        free(w)
        raise MemoryError()
    cdef double* k1 = w
    cdef double* k2 = w + n
    cdef double* k3 = w + 2 * n
    cdef double* k4 = w + 3 * n
    cdef double* y = w + 4 * n
    cdef double* x = w + 5 * n
    cdef double p
    with nogil:
        for j in range(n):
            path[0, j] = x0[j]
        for s in range(nsteps):
            for j in range(n):
                x[j] = path[s, j]
            status = field(ops, iargs, fargs, starts, n, x, st, k1, &bad)
            if status != 0:
                break
            for j in range(n):
                y[j] = x[j] + 0.5 * h * k1[j]
            status = field(ops, iargs, fargs, starts, n, y, st, k2, &bad)
            if status != 0:
                break
            for j in range(n):
                y[j] = x[j] + 0.5 * h * k2[j]
            status = field(ops, iargs, fargs, starts, n, y, st, k3, &bad)
            if status != 0:
                break
            for j in range(n):
                y[j] = x[j] + h * k3[j]
            status = field(ops, iargs, fargs, starts, n, y, st, k4, &bad)
            if status != 0:
                break
            for j in range(n):
                y[j] = x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                p = periods[j]
                if p > 0.0:
                    y[j] = y[j] - p * floor(y[j] / p)
                    if y[j] >= p:
                        y[j] = y[j] - p
                path[s + 1, j] = y[j]
            done = s + 1
    free(st)
    free(w)
    return done, status, bad
