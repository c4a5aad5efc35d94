"""Problem abstraction and mutable optimizer state.

A :class:`ProblemInstance` is the finite sum (1/n) sum_i f_i(x) + r(x).
Three component families are supported natively (least squares, ridge-folded
logistic, and arbitrary user callables); the first two carry their raw data
arrays so the accelerated epoch kernels can consume them directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

REG_KINDS = ("none", "l1", "l2sq")

PROBLEM_KINDS = ("least_squares", "logistic", "custom")


def as_vector(x, dim=None):
    """Validate and return a finite 1-d float64 vector."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or infinite entries")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


def ordered_sum(rows):
    """Sum table rows strictly left to right.

    Every average in this package uses a fixed summation order so that runs
    are reproducible independent of BLAS reduction strategy.
    """
    rows = np.asarray(rows, dtype=np.float64)
    acc = np.zeros(rows.shape[-1])
    for r in rows:
        acc = acc + r
    return acc


def ordered_mean(rows):
    rows = np.asarray(rows, dtype=np.float64)
    return ordered_sum(rows) / rows.shape[0]


def stable_sigmoid(u):
    """Elementwise 1 / (1 + exp(-u)) without overflow."""
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


@dataclass(frozen=True)
class Regularizer:
    """Convex regularizer r(x) with a closed-form prox: none, l1, or squared l2."""

    kind: str = "none"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in REG_KINDS:
            raise ValueError(f"unsupported regularizer kind {self.kind!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError("regularizer weight must be finite and >= 0")

    @classmethod
    def none(cls):
        return cls("none", 0.0)

    @classmethod
    def l1(cls, lam):
        return cls("l1", float(lam))

    @classmethod
    def l2sq(cls, lam):
        return cls("l2sq", float(lam))

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "l1":
            return self.lam * float(np.sum(np.abs(x)))
        if self.kind == "l2sq":
            return 0.5 * self.lam * float(x @ x)
        return 0.0


@dataclass
class ProblemInstance:
    """Immutable finite-sum problem: n component oracles plus a regularizer.

    ``L`` is a global smoothness constant for every f_i and ``mu`` the
    strong-convexity constant (0 means merely convex).
    """

    kind: str
    n: int
    d: int
    regularizer: Regularizer
    L: float
    mu: float
    A: np.ndarray | None = None  # least squares, shape (n, k, d)
    b: np.ndarray | None = None  # least squares, shape (n, k)
    W: np.ndarray | None = None  # logistic, shape (n, d)
    y: np.ndarray | None = None  # logistic labels in {-1, +1}, shape (n,)
    ridge: float = 0.0  # logistic: per-component (lam/2)||x||^2 folded in
    values: list | None = None  # custom value oracles f_i(x) -> float
    grads: list | None = None  # custom gradient oracles grad f_i(x) -> (d,)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if not (self.L > 0):
            raise ValueError("L must be positive")
        if not (0.0 <= self.mu <= self.L):
            raise ValueError("need 0 <= mu <= L")
        if self.kind == "least_squares":
            self.A = np.asarray(self.A, dtype=np.float64)
            self.b = np.asarray(self.b, dtype=np.float64)
            if self.A.shape[:1] != (self.n,) or self.A.shape[2] != self.d:
                raise ValueError(f"A must have shape (n, k, d), got {self.A.shape}")
            if self.b.shape != self.A.shape[:2]:
                raise ValueError(f"b must have shape (n, k), got {self.b.shape}")
        elif self.kind == "logistic":
            self.W = np.asarray(self.W, dtype=np.float64)
            self.y = np.asarray(self.y, dtype=np.float64)
            if self.W.shape != (self.n, self.d):
                raise ValueError(f"W must have shape (n, d), got {self.W.shape}")
            if self.y.shape != (self.n,):
                raise ValueError("y must have shape (n,)")
            if not np.all(np.isin(self.y, (-1.0, 1.0))):
                raise ValueError("labels must be -1 or +1")
        else:
            if self.grads is None or len(self.grads) != self.n:
                raise ValueError("custom problems need n gradient oracles")

    def _check_index(self, i):
        if not (0 <= i < self.n):
            raise IndexError(f"component index {i} out of range [0, {self.n})")

    def component_value(self, i, x):
        self._check_index(i)
        x = as_vector(x, self.d)
        if self.kind == "least_squares":
            r = self.A[i] @ x - self.b[i]
            return 0.5 * float(r @ r)
        if self.kind == "logistic":
            m = self.y[i] * (self.W[i] @ x)
            return float(np.logaddexp(0.0, -m)) + 0.5 * self.ridge * float(x @ x)
        if self.values is None:
            raise ValueError("custom problem has no value oracles")
        return float(self.values[i](x))

    def component_grad(self, i, x):
        self._check_index(i)
        x = as_vector(x, self.d)
        if self.kind == "least_squares":
            return self.A[i].T @ (self.A[i] @ x - self.b[i])
        if self.kind == "logistic":
            m = self.y[i] * (self.W[i] @ x)
            s = float(stable_sigmoid(np.array([-m]))[0])
            return -self.y[i] * s * self.W[i] + self.ridge * x
        g = as_vector(self.grads[i](x), self.d)
        return g

    def full_grad(self, x):
        """(1/n) sum_i grad f_i(x), summed in fixed order i = 0..n-1."""
        x = as_vector(x, self.d)
        acc = np.zeros(self.d)
        for i in range(self.n):
            acc = acc + self.component_grad(i, x)
        return acc / self.n

    def full_value(self, x):
        x = as_vector(x, self.d)
        total = 0.0
        for i in range(self.n):
            total += self.component_value(i, x)
        return total / self.n

    def objective(self, x):
        return self.full_value(x) + self.regularizer.value(x)


def grad_component(p: ProblemInstance, i: int, x) -> np.ndarray:
    return p.component_grad(i, x)


def grad_full(p: ProblemInstance, x) -> np.ndarray:
    return p.full_grad(x)


@dataclass
class MemoryState:
    """The z-table, its running average, and the run's step/damping parameters."""

    z: np.ndarray  # (n, d)
    zbar: np.ndarray  # (d,)
    alpha: float
    theta: float

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        self.zbar = np.asarray(self.zbar, dtype=np.float64)
        if self.z.ndim != 2:
            raise ValueError("z table must be 2-d (n, d)")
        if self.zbar.shape != (self.z.shape[1],):
            raise ValueError("zbar dimension mismatch")
        if not (self.alpha > 0):
            raise ValueError("alpha must be positive")
        if not (0.0 < self.theta <= 1.0):
            raise ValueError("theta must lie in (0, 1]")

    @classmethod
    def from_table(cls, z, alpha, theta):
        z = np.asarray(z, dtype=np.float64)
        return cls(z=z.copy(), zbar=ordered_mean(z), alpha=float(alpha), theta=float(theta))

    def copy(self):
        return MemoryState(self.z.copy(), self.zbar.copy(), self.alpha, self.theta)


def recompute_zbar(s: MemoryState) -> MemoryState:
    """Return the state with zbar replaced by the exact fixed-order table mean."""
    return replace(s, z=s.z, zbar=ordered_mean(s.z))


def validate_permutation(order, n):
    """Check that ``order`` is a permutation of 0..n-1; return it as int64."""
    order = np.asarray(order, dtype=np.int64)
    if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
        raise ValueError(f"not a permutation of range({n}): {order}")
    return order
