"""Comparison optimizers and the theoretical step-size table.

All baselines share the epoch/grad-eval accounting of the main engine: the
x-axis unit is individual gradient evaluations, so variance-reduction
snapshot and table-initialization costs are charged explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance, as_vector
from .prox import prox
from .sampling import SamplingPlan, epoch_order

ALGORITHMS = ("dfinito", "svrg", "saga")
REGIMES = ("rr", "cyclic")


def theoretical_step_size(algorithm: str, regime: str, L: float, mu: float, n: int) -> float:
    """Best-known-analysis step sizes for the strongly convex regime."""
    if algorithm not in ALGORITHMS or regime not in REGIMES:
        raise ValueError(f"no step-size entry for ({algorithm!r}, {regime!r})")
    if not (L > mu > 0):
        raise ValueError("the step-size table requires L > mu > 0")
    if algorithm == "dfinito":
        return 2.0 / (L + mu)
    if algorithm == "svrg":
        if regime == "rr":
            threshold = (2.0 * L / mu) / (1.0 - mu / (math.sqrt(2.0) * L))
            if n >= threshold:
                return 1.0 / (math.sqrt(2.0) * L * n)
            return (1.0 / (2.0 * math.sqrt(2.0) * L * n)) * math.sqrt(mu / L)
        return (1.0 / (4.0 * L * n)) * math.sqrt(mu / L)
    # saga
    if regime == "rr":
        return mu / (11.0 * L**2 * n)
    return mu / (65.0 * L**2 * math.sqrt(n * (n + 1.0)))


@dataclass
class BaselineRecord:
    """One epoch-boundary snapshot of a baseline run."""

    epoch: int
    grad_evals: int
    x: np.ndarray


def _record(trace, epoch, grad_evals, x):
    trace.append(BaselineRecord(epoch=epoch, grad_evals=grad_evals, x=x.copy()))


def prox_gd_run(p: ProblemInstance, alpha: float, epochs: int, x0):
    """Full proximal gradient descent; one epoch costs n gradient evaluations."""
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    x = as_vector(x0, p.d).copy()
    trace = []
    _record(trace, 0, 0, x)
    for k in range(1, epochs + 1):
        x = prox(p.regularizer, alpha, x - alpha * p.full_grad(x))
        _record(trace, k, k * p.n, x)
    return trace


def sgd_run(p: ProblemInstance, plan: SamplingPlan, alpha: float, epochs: int, x0, schedule="constant"):
    """Plain incremental gradient descent along the plan's orders.

    Smooth problems only (no proximal step is taken, so a nonzero
    regularizer is rejected rather than silently dropped).
    schedule: "constant" or "inv_sqrt" (alpha / sqrt(t+1) per inner step t).
    """
    if p.regularizer.kind != "none":
        raise ValueError("sgd supports smooth problems only (regularizer must be none)")
    if schedule not in ("constant", "inv_sqrt"):
        raise ValueError(f"unknown schedule {schedule!r}")
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    x = as_vector(x0, p.d).copy()
    trace = []
    _record(trace, 0, 0, x)
    t = 0
    for k in range(1, epochs + 1):
        for i in epoch_order(plan, k - 1):
            step = alpha if schedule == "constant" else alpha / math.sqrt(t + 1.0)
            x = x - step * p.component_grad(int(i), x)
            t += 1
        _record(trace, k, t, x)
    return trace


def svrg_run(
    p: ProblemInstance,
    plan: SamplingPlan,
    alpha: float,
    epochs: int,
    x0,
    snapshot_every: int = 2,
    correction: bool = True,
):
    """Variance reduction with a periodic full-gradient snapshot.

    The snapshot (anchor point plus its full gradient) refreshes every
    ``snapshot_every`` epochs at a cost of n gradient evaluations; each inner
    step evaluates two component gradients. ``correction=False`` drops the
    control variate, reducing the method to plain incremental gradient
    descent (used by the reduction tests).
    """
    if not (alpha > 0) or snapshot_every < 1:
        raise ValueError("need alpha > 0 and snapshot_every >= 1")
    x = as_vector(x0, p.d).copy()
    trace = []
    _record(trace, 0, 0, x)
    evals = 0
    y = gy = None
    for k in range(1, epochs + 1):
        if correction and (k - 1) % snapshot_every == 0:
            y = x.copy()
            gy = p.full_grad(y)
            evals += p.n
        for i in epoch_order(plan, k - 1):
            i = int(i)
            g = p.component_grad(i, x)
            evals += 1
            if correction:
                g = g - p.component_grad(i, y) + gy
                evals += 1
            x = prox(p.regularizer, alpha, x - alpha * g)
        _record(trace, k, evals, x)
    return trace


def saga_run(
    p: ProblemInstance,
    plan: SamplingPlan,
    alpha: float,
    epochs: int,
    x0,
    correction: bool = True,
    table_init=None,
):
    """Per-component gradient-table variance reduction.

    The table starts at grad f_i(x0) (n evaluations, charged) unless an
    explicit ``table_init`` is given; the table mean is maintained
    incrementally. ``correction=False`` reduces to plain incremental
    gradient descent.
    """
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    x = as_vector(x0, p.d).copy()
    trace = []
    evals = 0
    if correction:
        if table_init is None:
            table = np.stack([p.component_grad(i, x) for i in range(p.n)])
            evals += p.n
        else:
            table = np.asarray(table_init, dtype=np.float64).copy()
            if table.shape != (p.n, p.d):
                raise ValueError("table_init must have shape (n, d)")
        gmean = np.zeros(p.d)
        for i in range(p.n):
            gmean = gmean + table[i]
        gmean /= p.n
    _record(trace, 0, evals, x)
    for k in range(1, epochs + 1):
        for i in epoch_order(plan, k - 1):
            i = int(i)
            g = p.component_grad(i, x)
            evals += 1
            if correction:
                step_dir = g - table[i] + gmean
                gmean = gmean + (g - table[i]) / p.n
                table[i] = g
            else:
                step_dir = g
            x = prox(p.regularizer, alpha, x - alpha * step_dir)
        _record(trace, k, evals, x)
    return trace
