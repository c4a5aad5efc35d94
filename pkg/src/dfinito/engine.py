"""The damped Finito optimizer and its block-operator building blocks.

``apply_Ti``/``apply_Tpi`` are the literal fixed-point operators used by the
theory checks (O(n d) average per block application; clarity over speed).
``epoch_step`` executes the textbook epoch with an end-of-epoch damping pass,
``epoch_step_efficient`` the memory-lean variant that folds damping into each
block correction; for permutation orders the two produce identical x-iterate
sequences. ``run`` drives whole experiments and records diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .diagnostics import (
    TraceRecord,
    bound_convex,
    bound_strongly_convex,
    grad_map_residual,
    pi_norm_sq,
)
from .model import MemoryState, ProblemInstance, ordered_mean, validate_permutation
from .prox import prox
from .sampling import SamplingPlan, epoch_order, update_importance

WITHOUT_REPLACEMENT = ("cyclic", "reshuffle", "shuffle_once", "adaptive")


@dataclass
class DampedRunConfig:
    alpha: float
    theta: float
    epochs: int
    plan: SamplingPlan
    trace_every: int = 1

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ValueError("alpha must be positive")
        if not (0.0 < self.theta <= 1.0):
            raise ValueError("theta must lie in (0, 1]")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")


def apply_Ti(p: ProblemInstance, i: int, z, alpha: float):
    """Block operator: replace block i by (I - alpha grad f_i) o prox(mean z)."""
    z = np.asarray(z, dtype=np.float64)
    p._check_index(i)
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    x = prox(p.regularizer, alpha, ordered_mean(z))
    out = z.copy()
    out[i] = x - alpha * p.component_grad(i, x)
    return out


def apply_Tpi(p: ProblemInstance, order, z, alpha: float):
    """Sequential composition T_{pi(n)} o ... o T_{pi(1)}."""
    z = np.asarray(z, dtype=np.float64)
    order = validate_permutation(order, z.shape[0])
    for i in order:
        z = apply_Ti(p, int(i), z, alpha)
    return z


def apply_Spi(p: ProblemInstance, order, z, alpha: float, theta: float):
    """Damped epoch operator (1 - theta) I + theta T_pi."""
    z = np.asarray(z, dtype=np.float64)
    if not (0.0 < theta <= 1.0):
        raise ValueError("theta must lie in (0, 1]")
    return (1.0 - theta) * z + theta * apply_Tpi(p, order, z, alpha)


def epoch_step(p: ProblemInstance, s: MemoryState, order, theta: float) -> MemoryState:
    """One literal epoch: n inner updates, then damp the table by theta
    against the epoch-start snapshot and recompute the average exactly.

    ``order`` may contain repeats (uniform regime); permutation orders make
    this equal to (1-theta) z + theta T_pi z.
    """
    n, _ = s.z.shape
    order = np.asarray(order, dtype=np.int64)
    if order.shape != (n,) or order.min() < 0 or order.max() >= n:
        raise ValueError("order must contain n valid indices")
    z0 = s.z.copy()
    z = s.z.copy()
    zbar = s.zbar.copy()
    for i in order:
        x = prox(p.regularizer, s.alpha, zbar)
        znew = x - s.alpha * p.component_grad(int(i), x)
        zbar = zbar + (znew - z[i]) / n
        z[i] = znew
    z = (1.0 - theta) * z0 + theta * z
    return MemoryState(z=z, zbar=ordered_mean(z), alpha=s.alpha, theta=s.theta)


def epoch_step_efficient_inplace(p, z, zbar, alpha, theta, order):
    """Memory-lean epoch mutating (z, zbar); no second n-by-d table."""
    n = z.shape[0]
    for i in order:
        i = int(i)
        x = prox(p.regularizer, alpha, zbar)
        dvec = x - alpha * p.component_grad(i, x) - z[i]
        zbar += dvec / n
        z[i] += theta * dvec
    acc = np.zeros(z.shape[1])
    for i in range(n):
        acc = acc + z[i]
    zbar[:] = acc / n


def epoch_step_efficient(p: ProblemInstance, s: MemoryState, order, theta: float) -> MemoryState:
    """Same contract as :func:`epoch_step` for permutation orders."""
    order = validate_permutation(order, s.z.shape[0])
    z = s.z.copy()
    zbar = s.zbar.copy()
    epoch_step_efficient_inplace(p, z, zbar, s.alpha, theta, order)
    return MemoryState(z=z, zbar=zbar, alpha=s.alpha, theta=s.theta)


def _stepsize_flags(p: ProblemInstance, alpha: float, theta: float) -> str:
    """Empty when the run satisfies the certified step-size/damping regime."""
    flags = []
    if p.mu > 0:
        if alpha > 2.0 / (p.mu + p.L):
            flags.append("alpha_uncertified")
    else:
        if alpha > 2.0 / p.L:
            flags.append("alpha_uncertified")
        if theta >= 1.0:
            flags.append("theta_uncertified")
    return ";".join(flags)


def run(
    p: ProblemInstance,
    config: DampedRunConfig,
    z0,
    reference=None,
    backend="auto",
    sink=None,
):
    """Execute a full damped-Finito run.

    reference: optional (xstar, zstar) pair enabling distance-to-optimum and
    bound-envelope columns. backend: "auto" uses the fast epoch kernels when
    the instance carries raw data arrays; "oracle" forces the generic path.
    Returns (final MemoryState, list of TraceRecord).
    """
    z0 = np.asarray(z0, dtype=np.float64)
    if z0.shape != (p.n, p.d):
        raise ValueError(f"z0 must have shape ({p.n}, {p.d})")
    plan = config.plan
    if plan.n != p.n:
        raise ValueError("sampling plan size mismatch")
    state = MemoryState.from_table(z0, config.alpha, config.theta)
    flags = _stepsize_flags(p, config.alpha, config.theta)
    xstar = zstar = None
    if reference is not None:
        xstar, zstar = reference
        xstar = np.asarray(xstar, dtype=np.float64)
        zstar = np.asarray(zstar, dtype=np.float64)

    use_kernel = (
        backend == "auto" and kernels.supports(p) and plan.regime != "uniform"
    )
    w = None
    if plan.regime == "adaptive":
        diff = z0 - state.zbar
        w = np.einsum("ij,ij->i", diff, diff)
    z_init = z0.copy()

    def make_record(k, grad_evals, pre_z, order):
        true_min, certified = grad_map_residual(p, state.zbar, config.alpha)
        rec = TraceRecord(
            epoch=k,
            grad_evals=grad_evals,
            grad_map_residual_sq=true_min,
            prox_residual_sq=certified,
            flags=flags,
        )
        if pre_z is not None and order is not None and plan.regime != "uniform":
            rec.pi_norm_residual_sq = pi_norm_sq(state.z - pre_z, order)
        if xstar is not None:
            x = prox(p.regularizer, config.alpha, state.zbar)
            rec.dist_sq_to_opt = float(np.sum((x - xstar) ** 2))
        if zstar is not None and plan.regime in ("cyclic", "reshuffle", "shuffle_once"):
            order_arg = plan.order if plan.regime == "cyclic" else None
            try:
                rec.bound_convex = bound_convex(
                    k, config.alpha, config.theta, p.L, p.n, z_init, zstar,
                    plan.regime, order_arg,
                )
            except ValueError:
                pass
            try:
                rec.bound_sc = bound_strongly_convex(
                    k, config.alpha, config.theta, p.L, p.mu, p.n, z_init, zstar,
                    plan.regime, order_arg,
                )
            except ValueError:
                pass
        if sink is not None:
            sink(rec)
        return rec

    records = [make_record(0, 0, None, None)]
    grad_evals = 0
    for k in range(1, config.epochs + 1):
        order = epoch_order(plan, k - 1, w)
        tracing = (k % config.trace_every == 0) or (k == config.epochs)
        pre_z = state.z.copy() if tracing else None
        if plan.regime == "uniform":
            state = epoch_step(p, state, order, config.theta)
        elif use_kernel:
            kernels.epoch_inplace(p, state.z, state.zbar, config.alpha, config.theta, order)
        else:
            epoch_step_efficient_inplace(
                p, state.z, state.zbar, config.alpha, config.theta, order
            )
        grad_evals += p.n
        if plan.regime == "adaptive":
            w = update_importance(w, z_init, state.z, plan.gamma)
        if tracing:
            records.append(make_record(k, grad_evals, pre_z, order))
    return state, records
