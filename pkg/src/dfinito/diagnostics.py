"""Per-epoch error metrics and theoretical bound envelopes."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance, as_vector, validate_permutation
from .prox import prox, subgradient_residual

CSV_COLUMNS = (
    "epoch",
    "grad_evals",
    "grad_map_residual_sq",
    "prox_residual_sq",
    "dist_sq_to_opt",
    "pi_norm_residual_sq",
    "bound_convex",
    "bound_sc",
    "flags",
)


@dataclass
class TraceRecord:
    """Diagnostics at one epoch boundary.

    ``pi_norm_residual_sq`` is the pi-norm of the z-table displacement of the
    epoch that just finished (absent on the initial record). Optional metrics
    are None when not computable (no reference solution, regime without a
    bound, etc.).
    """

    epoch: int
    grad_evals: int
    grad_map_residual_sq: float | None = None
    prox_residual_sq: float | None = None
    dist_sq_to_opt: float | None = None
    pi_norm_residual_sq: float | None = None
    bound_convex: float | None = None
    bound_sc: float | None = None
    flags: str = ""

    def to_row(self):
        def fmt(v):
            return "" if v is None else repr(float(v))

        return [
            str(self.epoch),
            str(self.grad_evals),
            fmt(self.grad_map_residual_sq),
            fmt(self.prox_residual_sq),
            fmt(self.dist_sq_to_opt),
            fmt(self.pi_norm_residual_sq),
            fmt(self.bound_convex),
            fmt(self.bound_sc),
            self.flags,
        ]


def pi_norm_sq(z, order) -> float:
    """Order-weighted squared norm: sum_{i=1..n} (i/n) ||z_{pi(i)}||^2."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError("z must be a 2-d table")
    n = z.shape[0]
    order = validate_permutation(order, n)
    weights = np.arange(1, n + 1) / n
    block_sq = np.einsum("ij,ij->i", z, z)
    return float(weights @ block_sq[order])


def table_norm_sq(z) -> float:
    z = np.asarray(z, dtype=np.float64)
    return float(np.sum(z * z))


def rho_ratio(z0, zstar, order_opt) -> float:
    """||z0 - zstar||^2_{pi*} / ||z0 - zstar||^2, always in [1/n, 1]."""
    diff = np.asarray(z0, dtype=np.float64) - np.asarray(zstar, dtype=np.float64)
    denom = table_norm_sq(diff)
    if denom == 0.0:
        raise ZeroDivisionError("z0 equals zstar; rho undefined")
    return pi_norm_sq(diff, order_opt) / denom


def grad_map_residual(p: ProblemInstance, zbar, alpha) -> tuple[float, float]:
    """(true minimum, prox-certified) squared gradient-mapping residual.

    x = prox(r, alpha, zbar). The prox-certified value uses the specific
    subgradient (zbar - x)/alpha supplied by the prox step and upper-bounds
    the true minimum over the whole subdifferential.
    """
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    zbar = as_vector(zbar, p.d)
    x = prox(p.regularizer, alpha, zbar)
    gF = p.full_grad(x)
    certified_vec = gF + (zbar - x) / alpha
    certified = float(certified_vec @ certified_vec)
    true_min = subgradient_residual(p.regularizer, x, gF)
    return true_min, certified


def _convex_constant(alpha, L, n, z0, zstar, regime, order=None) -> float:
    diff = np.asarray(z0, dtype=np.float64) - np.asarray(zstar, dtype=np.float64)
    base = (2.0 / (alpha * L)) ** 2
    logn = math.log(n) + 1.0
    if regime == "cyclic":
        if order is None:
            raise ValueError("cyclic bound needs the fixed order")
        return base * (logn / n) * pi_norm_sq(diff, order)
    if regime == "reshuffle":
        return (5.0 / (3.0 * alpha * L)) ** 2 * table_norm_sq(diff) / n
    if regime == "shuffle_once":
        return base * ((n + 1) * logn / (2.0 * n**2)) * table_norm_sq(diff)
    raise ValueError(f"no convex bound for regime {regime!r}")


def bound_convex(k, alpha, theta, L, n, z0, zstar, regime, order=None) -> float:
    """Sublinear envelope on the (expected) gradient-mapping residual."""
    if not (0.0 < theta < 1.0):
        raise ValueError("convex envelope needs theta strictly inside (0, 1)")
    if not (0.0 < alpha <= 2.0 / L):
        raise ValueError("convex envelope needs 0 < alpha <= 2/L")
    C = _convex_constant(alpha, L, n, z0, zstar, regime, order)
    return C * L**2 / ((k + 1) * theta * (1.0 - theta))


def bound_strongly_convex(k, alpha, theta, L, mu, n, z0, zstar, regime, order=None) -> float:
    """Linear envelope on the (expected) squared distance to the optimum."""
    if not (mu > 0):
        raise ValueError("strongly convex envelope needs mu > 0")
    if not (0.0 < alpha <= 2.0 / (mu + L)):
        raise ValueError("strongly convex envelope needs 0 < alpha <= 2/(mu+L)")
    if not (0.0 < theta <= 1.0):
        raise ValueError("theta must lie in (0, 1]")
    diff = np.asarray(z0, dtype=np.float64) - np.asarray(zstar, dtype=np.float64)
    logn = math.log(n) + 1.0
    if regime == "cyclic":
        if order is None:
            raise ValueError("cyclic bound needs the fixed order")
        C = (logn / n) * pi_norm_sq(diff, order)
    elif regime == "reshuffle":
        C = table_norm_sq(diff) / n
    elif regime == "shuffle_once":
        C = ((n + 1) * logn / (2.0 * n**2)) * table_norm_sq(diff)
    else:
        raise ValueError(f"no strongly convex bound for regime {regime!r}")
    rate = 1.0 - 2.0 * theta * alpha * mu * L / (mu + L)
    return rate**k * C
