"""Hot epoch kernels for the damped Finito update.

One epoch of the memory-lean update (running average maintained in O(d) per
step, damping folded into the per-block correction) is implemented once in
plain NumPy and, when available, JIT-compiled with numba. Set the environment
variable ``DFINITO_DISABLE_NUMBA=1`` to force the pure-NumPy path; the two
backends agree to floating-point noise and ``benchmarks/bench_epoch.py``
compares their throughput.
"""
from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLED = os.environ.get("DFINITO_DISABLE_NUMBA", "").lower() in ("1", "true", "yes")

try:
    if NUMBA_DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # identity decorator fallback
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


BACKEND = "numba" if HAVE_NUMBA else "numpy"

REG_CODE = {"none": 0, "l1": 1, "l2sq": 2}


def _prox_step(v, reg_code, t):
    if reg_code == 1:
        return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)
    if reg_code == 2:
        return v / (1.0 + t)
    return v.copy()


def _epoch_least_squares(z, zbar, A, b, alpha, theta, order, reg_code, reg_t):
    n = z.shape[0]
    for t in range(n):
        i = order[t]
        x = _prox_step(zbar, reg_code, reg_t)
        g = A[i].T @ (A[i] @ x - b[i])
        dvec = x - alpha * g - z[i]
        zbar += dvec / n
        z[i] += theta * dvec
    # exact fixed-order recompute at the epoch boundary bounds fp drift
    acc = np.zeros(z.shape[1])
    for i in range(n):
        acc = acc + z[i]
    zbar[:] = acc / n


def _epoch_logistic(z, zbar, W, y, ridge, alpha, theta, order, reg_code, reg_t):
    n = z.shape[0]
    for t in range(n):
        i = order[t]
        x = _prox_step(zbar, reg_code, reg_t)
        m = y[i] * (W[i] @ x)
        if m <= 0.0:
            s = 1.0 / (1.0 + np.exp(m))
        else:
            e = np.exp(-m)
            s = e / (1.0 + e)
        g = -y[i] * s * W[i] + ridge * x
        dvec = x - alpha * g - z[i]
        zbar += dvec / n
        z[i] += theta * dvec
    acc = np.zeros(z.shape[1])
    for i in range(n):
        acc = acc + z[i]
    zbar[:] = acc / n


epoch_least_squares_numpy = _epoch_least_squares
epoch_logistic_numpy = _epoch_logistic

if HAVE_NUMBA:
    _prox_step = njit(cache=True)(_prox_step)
    epoch_least_squares = njit(cache=True)(_epoch_least_squares)
    epoch_logistic = njit(cache=True)(_epoch_logistic)
else:
    epoch_least_squares = epoch_least_squares_numpy
    epoch_logistic = epoch_logistic_numpy


def supports(problem) -> bool:
    """Whether the fast epoch path applies to this problem instance."""
    return problem.kind in ("least_squares", "logistic")


def epoch_inplace(problem, z, zbar, alpha, theta, order, backend=None):
    """Run one memory-lean epoch in place on (z, zbar)."""
    reg_code = REG_CODE[problem.regularizer.kind]
    reg_t = alpha * problem.regularizer.lam
    order = np.ascontiguousarray(order, dtype=np.int64)
    if backend == "numpy":
        ls, lo = epoch_least_squares_numpy, epoch_logistic_numpy
    else:
        ls, lo = epoch_least_squares, epoch_logistic
    if problem.kind == "least_squares":
        ls(z, zbar, problem.A, problem.b, alpha, theta, order, reg_code, reg_t)
    elif problem.kind == "logistic":
        lo(z, zbar, problem.W, problem.y, problem.ridge, alpha, theta, order, reg_code, reg_t)
    else:
        raise ValueError(f"no fast epoch kernel for problem kind {problem.kind!r}")
