"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--resolution 200] [--steps 20000]
"""

import argparse
import time

import numpy as np

from vfspec import kernels
from vfspec._program import compile_exprs
from vfspec.expr import parse_scalar

FIELD = ("-y", "x")
FUNCTION = "exp(2*atan(y/x))*sqrt(x^2+y^2) + sin(3*x)*cos(y)"


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--resolution", type=int, default=200)
    ap.add_argument("--steps", type=int, default=20_000)
    args = ap.parse_args(argv)

    f_prog = compile_exprs([parse_scalar(FUNCTION, 2)], 2)
    x_prog = compile_exprs([parse_scalar(c, 2) for c in FIELD], 2)
    s = np.linspace(0.1, 2.0, args.resolution)
    pts = np.stack(np.meshgrid(s, s), axis=-1).reshape(-1, 2)

    backends = list(kernels.BACKENDS)
    if "cython" not in backends:
        print("compiled core not built; timing the fallback only")
    rows = []
    for b in backends:
        duals = best_of(args.repeat, lambda: kernels.eval_duals(f_prog, pts, backend=b))
        flow = best_of(args.repeat, lambda: kernels.rk4(x_prog, [1.0, 0.0], 1e-3, args.steps, backend=b))
        rows.append((b, duals, flow))

    print(f"{'backend':<8} {'eval_duals':>14} {'rk4':>14}")
    print(f"{'':<8} {f'{len(pts)} pts':>14} {f'{args.steps} steps':>14}")
    for b, duals, flow in rows:
        print(f"{b:<8} {duals * 1e3:>11.2f} ms {flow * 1e3:>11.2f} ms")
    if len(rows) == 2:
        (_, pd, pf), (_, cd, cf) = rows
        print(f"speedup  {pd / cd:>13.1f}x {pf / cf:>13.1f}x")


if __name__ == "__main__":
    main()
