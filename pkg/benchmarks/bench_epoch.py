"""Throughput comparison of the epoch backends.

Times one memory-lean epoch of the damped Finito update three ways:
the numba-compiled kernel (when available), the pure-NumPy kernel, and the
generic per-component fallback used for custom problems.

Usage: python3 benchmarks/bench_epoch.py [n] [d] [repeats]
"""
from __future__ import annotations

import sys
import time

import numpy as np

from dfinito import engine, kernels, problems
from dfinito.model import Regularizer


def time_epoch(fn, z, zbar, repeats):
    best = float("inf")
    for _ in range(repeats):
        zc, zbc = z.copy(), zbar.copy()
        t0 = time.perf_counter()
        fn(zc, zbc)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    d = int(sys.argv[2]) if len(sys.argv) > 2 else 100
    repeats = int(sys.argv[3]) if len(sys.argv) > 3 else 5
    p = problems.gen_least_squares(0, n=n, d=d, k=1, L=5.0, mu=0.0,
                                   regularizer=Regularizer.l1(0.01))
    alpha, theta = 1.0 / p.L, 0.5
    rng = np.random.default_rng(0)
    z = rng.standard_normal((n, d))
    zbar = z.mean(axis=0)
    order = rng.permutation(n)

    rows = []
    if kernels.HAVE_NUMBA:
        # warm up the JIT outside the timed region
        kernels.epoch_inplace(p, z.copy(), zbar.copy(), alpha, theta, order)
        rows.append((
            "numba kernel",
            time_epoch(lambda zz, zb: kernels.epoch_inplace(p, zz, zb, alpha, theta, order),
                       z, zbar, repeats),
        ))
    rows.append((
        "numpy kernel",
        time_epoch(lambda zz, zb: kernels.epoch_inplace(p, zz, zb, alpha, theta, order,
                                                        backend="numpy"),
                   z, zbar, repeats),
    ))
    rows.append((
        "generic fallback",
        time_epoch(lambda zz, zb: engine.epoch_step_efficient_inplace(p, zz, zb, alpha,
                                                                      theta, order),
                   z, zbar, repeats),
    ))

    print(f"one epoch, n={n} d={d} (best of {repeats})")
    base = rows[-1][1]
    for name, t in rows:
        print(f"  {name:18s} {t * 1e3:9.3f} ms   speedup vs fallback: {base / t:6.2f}x")


if __name__ == "__main__":
    main()
