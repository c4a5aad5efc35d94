"""Independent ground truth used to freeze expected values into tests.

Everything here is deliberately written against the problem definition, not
against the optimizer implementation: closed-form solves where available,
plain proximal gradient descent otherwise, and brute-force enumeration over
permutations for the ordering and expectation oracles.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .engine import apply_Tpi
from .model import ProblemInstance, stable_sigmoid
from .prox import prox, subgradient_residual

ITERATION_CAP = 10**7


class OracleError(RuntimeError):
    pass


def _fast_full_grad(p: ProblemInstance):
    """Vectorized full-gradient closure (the oracle's own, not the model's)."""
    if p.kind == "least_squares":
        # mean_i A_i^T (A_i x - b_i) = H x - g with precomputed H, g
        H = np.einsum("ikd,ike->de", p.A, p.A) / p.n
        g = np.einsum("ikd,ik->d", p.A, p.b) / p.n
        return lambda x: H @ x - g
    if p.kind == "logistic":
        W, y, ridge, n = p.W, p.y, p.ridge, p.n

        def grad(x):
            s = stable_sigmoid(-(y * (W @ x)))
            return -(W.T @ (y * s)) / n + ridge * x

        return grad
    return p.full_grad


def solve_reference(p: ProblemInstance, tol=1e-10):
    """High-accuracy minimizer of F(x) + r(x).

    Least squares with regularizer none/l2sq uses the regularized normal
    equations; every other case runs proximal gradient descent with step 1/L
    until the exact subdifferential residual drops below tol^2.
    """
    if not (tol > 0):
        raise ValueError("tol must be positive")
    if p.kind == "least_squares" and p.regularizer.kind in ("none", "l2sq"):
        H = np.einsum("ikd,ike->de", p.A, p.A) / p.n
        g = np.einsum("ikd,ik->d", p.A, p.b) / p.n
        if p.regularizer.kind == "l2sq":
            H = H + p.regularizer.lam * np.eye(p.d)
        return np.linalg.solve(H, g)
    grad = _fast_full_grad(p)
    alpha = 1.0 / p.L
    x = np.zeros(p.d)
    res = math.inf
    for _ in range(ITERATION_CAP):
        x = prox(p.regularizer, alpha, x - alpha * grad(x))
        res = subgradient_residual(p.regularizer, x, grad(x))
        if res <= tol * tol:
            return x
    raise OracleError(f"no convergence within {ITERATION_CAP} iterations; residual {res:.3e}")


def zstar_table(p: ProblemInstance, xstar, alpha):
    """Fixed-point table z_i* = x* - alpha * grad f_i(x*)."""
    xstar = np.asarray(xstar, dtype=np.float64)
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    return np.stack([xstar - alpha * p.component_grad(i, xstar) for i in range(p.n)])


def brute_force_best_order(scores):
    """Exhaustive argmin of sum_i (i/n) scores[pi(i)] over all permutations.

    Returns (permutation, value); ties resolved by lexicographically smallest
    permutation (itertools enumerates in that order). Guarded at n <= 8.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    if n > 8:
        raise ValueError("brute force is guarded at n <= 8")
    if n == 0:
        raise ValueError("scores must be non-empty")
    weights = np.arange(1, n + 1) / n
    best_perm, best_val = None, math.inf
    for perm in itertools.permutations(range(n)):
        val = float(weights @ scores[list(perm)])
        if val < best_val:
            best_perm, best_val = perm, val
    return np.asarray(best_perm, dtype=np.int64), best_val


def expected_contraction(p: ProblemInstance, u, v, alpha):
    """Exact E_tau ||T_tau u - T_tau v||^2 over all n! permutations (n <= 6)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if p.n > 6:
        raise ValueError("exact expectation is guarded at n <= 6")
    total = 0.0
    count = 0
    for perm in itertools.permutations(range(p.n)):
        du = apply_Tpi(p, perm, u, alpha) - apply_Tpi(p, perm, v, alpha)
        total += float(np.sum(du * du))
        count += 1
    return total / count
