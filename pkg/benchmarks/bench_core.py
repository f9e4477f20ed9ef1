"""Time the compiled stiffness quadrature against the numpy fallback.

    python benchmarks/bench_core.py --N 32 64 --ell 1 3 --repeat 3
"""

import argparse
import time

import numpy as np

from nlwave import _core_py, fem
from nlwave.micromodulus import extend, unit_box
from nlwave.quadrature import gauss_legendre

try:
    from nlwave import _core
except ImportError:
    _core = None


def convolution_with(impl, space, kernel):
    xg, wg = (np.ascontiguousarray(a) for a in gauss_legendre(space.quad_order()))
    nodes = np.ascontiguousarray(space.mesh.nodes)
    bps = np.ascontiguousarray(kernel.breakpoints, dtype=float)
    n = space.n_local
    B = np.empty((space.dim, space.dim))
    for K in range(space.mesh.N):
        x, y, w, T = impl.row_nodes(K, nodes, bps, xg, wg)
        wk = np.ascontiguousarray(w * kernel(x - y))
        B[K * n:(K + 1) * n] = impl.row_accumulate(x, y, wk, T, nodes, K, space.degree, space.normalized)
    return B


def best_of(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, nargs="+", default=[16, 32, 64])
    p.add_argument("--ell", type=int, nargs="+", default=[0, 3])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if _core is None:
        print("compiled core not built; run `pip install -e . --no-build-isolation` first")
        return 1
    kernel = extend(unit_box(), "periodic2")
    print(f"{'N':>4} {'ell':>3} {'python [s]':>11} {'compiled [s]':>12} {'speedup':>8} {'max diff':>9}")
    for N in args.N:
        for ell in args.ell:
            space = fem.PolySpace(fem.Mesh.uniform(N), ell)
            tp, Bp = best_of(lambda: convolution_with(_core_py, space, kernel), args.repeat)
            tc, Bc = best_of(lambda: convolution_with(_core, space, kernel), args.repeat)
            diff = np.max(np.abs(Bp - Bc))
            print(f"{N:>4} {ell:>3} {tp:>11.4f} {tc:>12.4f} {tp / tc:>8.1f} {diff:>9.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
