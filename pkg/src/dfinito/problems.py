"""Problem generators, the planted heterogeneous instance, and file formats.

The heterogeneous generator plants a minimizer v and a geometric importance
profile ||z_i^0 - z_i*||^2 = n beta^{i-1}, so the optimal cyclic order is the
identity and the order-weighted/plain norm ratio is about 1/(n(1-beta)). Each
instance ships with a certificate that ``verify_heterogeneous`` re-checks
from scratch.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .checks import CheckResult, check_leq
from .diagnostics import pi_norm_sq, rho_ratio
from .model import ProblemInstance, Regularizer
from .sampling import optimal_cyclic_order


def _orthonormal(rng, rows, cols):
    """Random matrix with orthonormal columns (rows >= cols)."""
    m = rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(m)
    # fix the sign convention so the factor is deterministic given the draw
    return q * np.sign(np.diag(r))


def _component_matrix(rng, k, d, L, mu):
    """A (k, d) matrix whose Gram matrix has spectrum inside [mu, L].

    The extreme singular values are pinned to sqrt(L) and sqrt(mu) so the
    declared constants are tight. mu = 0 yields a rank-deficient factor.
    """
    r = min(k, d)
    s = np.sqrt(rng.uniform(mu, L, size=r))
    s[0] = math.sqrt(L)
    if r > 1:
        s[-1] = math.sqrt(mu)
    u = _orthonormal(rng, k, r)
    v = _orthonormal(rng, d, r)
    return (u * s) @ v.T


def gen_least_squares(seed, n, d, k, L, mu, regularizer=None):
    """Random least-squares instance: f_i(x) = 0.5 ||A_i x - b_i||^2.

    Every A_i^T A_i has spectrum inside [mu, L] with the extremes attained,
    so the declared smoothness/strong-convexity constants hold exactly.
    """
    if k < 1 or not (0.0 <= mu <= L):
        raise ValueError("need k >= 1 and 0 <= mu <= L")
    if mu > 0 and k < d:
        raise ValueError("mu > 0 needs k >= d (full-rank components)")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    A = np.stack([_component_matrix(rng, k, d, L, mu) for _ in range(n)])
    b = rng.standard_normal((n, k))
    return ProblemInstance(
        kind="least_squares",
        n=n,
        d=d,
        regularizer=regularizer or Regularizer.none(),
        L=float(L),
        mu=float(mu),
        A=A,
        b=b,
        metadata={"seed": int(seed), "k": int(k)},
    )


@dataclass
class HeterogeneityCertificate:
    """Construction witnesses for the planted heterogeneous instance."""

    v: np.ndarray  # planted minimizer, shape (d,)
    t: np.ndarray  # direction vectors with ||t_i|| = sqrt(n), shape (n, d)
    delta: np.ndarray  # residual vectors, shape (n, k)
    beta: float  # geometric decay of the importance profile, in (0, 1)
    alpha_used: float  # step size baked into the construction

    def zstar(self, z0):
        q = math.sqrt(self.beta)
        n = self.t.shape[0]
        scale = q ** np.arange(n)
        return np.asarray(z0, dtype=np.float64) - scale[:, None] * self.t


def _fsum_mean(rows):
    """Column means via compensated summation (construction-critical)."""
    rows = np.asarray(rows, dtype=np.float64)
    return np.array([math.fsum(rows[:, j]) for j in range(rows.shape[1])]) / rows.shape[0]


def gen_heterogeneous(seed, n, d, k, mu, L, alpha, beta, z0):
    """Planted instance with importance profile ||z_i^0 - z_i*||^2 = n beta^{i-1}.

    Returns (instance, certificate). The instance has minimizer x* = v and
    fixed-point table z_i* = z_i^0 - q^{i-1} t_i with q = sqrt(beta).
    """
    if k < d:
        raise ValueError("construction needs k >= d")
    if not (0.0 < mu < L):
        raise ValueError("need 0 < mu < L")
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    if not (alpha > 0):
        raise ValueError("alpha must be positive")
    z0 = np.asarray(z0, dtype=np.float64)
    if z0.shape != (n, d):
        raise ValueError(f"z0 must have shape ({n}, {d})")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    q = math.sqrt(beta)
    t = rng.standard_normal((n, d))
    t *= math.sqrt(n) / np.linalg.norm(t, axis=1, keepdims=True)
    scale = q ** np.arange(n)
    v = _fsum_mean(z0 - scale[:, None] * t)
    A = np.stack([_component_matrix(rng, k, d, L, mu) for _ in range(n)])
    c = (z0 - v[None, :] - scale[:, None] * t) / alpha
    delta = np.empty((n, k))
    for i in range(n):
        # delta_i = A_i (A_i^T A_i)^{-1} c_i satisfies A_i^T delta_i = c_i
        delta[i] = A[i] @ np.linalg.solve(A[i].T @ A[i], c[i])
    b = A @ v + delta
    p = ProblemInstance(
        kind="least_squares",
        n=n,
        d=d,
        regularizer=Regularizer.none(),
        L=float(L),
        mu=float(mu),
        A=A,
        b=b,
        metadata={"seed": int(seed), "k": int(k), "beta": float(beta), "planted": True},
    )
    cert = HeterogeneityCertificate(v=v, t=t, delta=delta, beta=float(beta), alpha_used=float(alpha))
    return p, cert


def verify_heterogeneous(p: ProblemInstance, cert: HeterogeneityCertificate, z0, alpha):
    """Re-check the planted construction from scratch.

    Returns a list of CheckResult covering: component spectra inside [mu, L];
    zero full gradient at the planted minimizer; the geometric importance
    profile; and the order-weighted norm ratio against 1/(n(1-beta)).
    """
    if alpha != cert.alpha_used:
        raise ValueError("certificate was built for a different step size")
    z0 = np.asarray(z0, dtype=np.float64)
    n = p.n
    results = []

    spectra_dev = 0.0
    for i in range(n):
        eig = np.linalg.eigvalsh(p.A[i].T @ p.A[i])
        spectra_dev = max(spectra_dev, p.mu - eig[0], eig[-1] - p.L, 0.0)
    results.append(check_leq("component_spectra_within_[mu,L]", spectra_dev, 1e-8))

    results.append(
        check_leq("full_gradient_zero_at_minimizer", float(np.linalg.norm(p.full_grad(cert.v))), 1e-10)
    )

    q = math.sqrt(cert.beta)
    tnorm_sq = np.einsum("ij,ij->i", cert.t, cert.t)
    results.append(
        check_leq("direction_norms_sqrt_n", float(np.max(np.abs(np.sqrt(tnorm_sq) - math.sqrt(n)))), 1e-10)
    )

    c = (z0 - cert.v[None, :] - (q ** np.arange(n))[:, None] * cert.t) / alpha
    residual_dev = max(
        float(np.linalg.norm(p.A[i].T @ cert.delta[i] - c[i])) for i in range(n)
    )
    results.append(check_leq("residual_vectors_solve_construction", residual_dev, 1e-8))

    # ||z_i^0 - z_i*||^2 = beta^{i-1} ||t_i||^2 by construction; beta powers
    # underflow for large i, so compare with the geometric factor divided out
    profile_normalized = tnorm_sq * (q * q / cert.beta) ** np.arange(n)
    results.append(
        check_leq(
            "importance_profile_geometric",
            float(np.max(np.abs(profile_normalized - n) / n)),
            1e-8,
        )
    )

    # the planted profile is strictly decreasing, so the optimal order is the
    # identity; underflowed tail blocks contribute nothing to either norm
    disp = (q ** np.arange(n))[:, None] * cert.t
    rho = pi_norm_sq(disp, np.arange(n)) / float(np.sum(disp * disp))
    # exact finite geometric sums: rho = (sum i b^{i-1}) / (n sum b^{i-1}),
    # which tends to 1/(n(1-beta)) as beta^n -> 0
    b = cert.beta
    s0 = (1.0 - b**n) / (1.0 - b)
    s1 = (1.0 - (n + 1) * b**n + n * b ** (n + 1)) / (1.0 - b) ** 2
    rho_target = s1 / (n * s0)
    results.append(
        check_leq("norm_ratio_matches_exact_sum", abs(rho - rho_target) / rho_target, 1e-3)
    )
    return results


def logistic_constants(W, y, lam):
    """(L, mu) for the ridge-folded logistic loss: L = lmax(W^T W)/(4n) + lam."""
    W = np.asarray(W, dtype=np.float64)
    n = W.shape[0]
    lmax = float(np.linalg.eigvalsh(W.T @ W)[-1])
    return lmax / (4.0 * n) + lam, float(lam)


def gen_logistic(W, y, lam):
    """Logistic regression with the ridge folded into every component.

    f_i(x) = log(1 + exp(-y_i <w_i, x>)) + (lam/2) ||x||^2, regularizer none.
    """
    W = np.asarray(W, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lam < 0:
        raise ValueError("lam must be >= 0")
    L, mu = logistic_constants(W, y, lam)
    n, d = W.shape
    per_component_L = (np.einsum("ij,ij->i", W, W) / 4.0 + lam).tolist()
    return ProblemInstance(
        kind="logistic",
        n=n,
        d=d,
        regularizer=Regularizer.none(),
        L=L,
        mu=mu,
        W=W,
        y=y,
        ridge=float(lam),
        metadata={"per_component_L": per_component_L},
    )


def make_synthetic_logistic(seed, n, d, kappa=None, lam=None):
    """Random separable-ish logistic data; lam resolved from a target
    condition number when given. Returns (W, y, lam)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2]))
    W = rng.standard_normal((n, d))
    xtrue = rng.standard_normal(d)
    y = np.where(rng.random(n) < 1.0 / (1.0 + np.exp(-(W @ xtrue))), 1.0, -1.0)
    if lam is None:
        if kappa is None or kappa <= 1:
            raise ValueError("need lam, or a condition number kappa > 1")
        smooth = float(np.linalg.eigvalsh(W.T @ W)[-1]) / (4.0 * n)
        lam = smooth / (kappa - 1.0)
    return W, y, float(lam)


def load_libsvm(path):
    """Parse LIBSVM text: 'label idx:val idx:val ...' with 1-based indices.

    Returns a dense (W, y) with labels mapped to {-1, +1} (0 maps to -1).
    Malformed input raises ValueError naming the offending line number.
    """
    rows = []
    labels = []
    max_idx = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric label {tokens[0]!r}")
            if label == 0.0:
                label = -1.0
            if label not in (-1.0, 1.0):
                raise ValueError(f"line {lineno}: label must be -1, 0, or +1, got {tokens[0]!r}")
            feats = {}
            for tok in tokens[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ValueError(f"line {lineno}: malformed feature token {tok!r}")
                if idx < 1:
                    raise ValueError(f"line {lineno}: feature indices are 1-based, got {idx}")
                if idx in feats:
                    raise ValueError(f"line {lineno}: duplicate feature index {idx}")
                feats[idx] = val
            rows.append(feats)
            labels.append(label)
            if feats:
                max_idx = max(max_idx, max(feats))
    if not rows:
        raise ValueError(f"{path}: no samples found")
    W = np.zeros((len(rows), max_idx))
    for r, feats in enumerate(rows):
        for idx, val in feats.items():
            W[r, idx - 1] = val
    return W, np.asarray(labels, dtype=np.float64)


def save_libsvm(path, W, y):
    """Write dense (W, y) in LIBSVM text form; zeros are omitted."""
    W = np.asarray(W, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row, label in zip(W, y):
            parts = ["+1" if label > 0 else "-1"]
            for j, val in enumerate(row, start=1):
                if val != 0.0:
                    parts.append(f"{j}:{float(val)!r}")
            fh.write(" ".join(parts) + "\n")


def _cert_to_json(cert: HeterogeneityCertificate):
    return {
        "v": cert.v.tolist(),
        "t": cert.t.tolist(),
        "delta": cert.delta.tolist(),
        "beta": cert.beta,
        "alpha_used": cert.alpha_used,
    }


def save_instance(path, p: ProblemInstance, cert: HeterogeneityCertificate | None = None):
    """Serialize an instance (and optional certificate) to JSON, atomically."""
    doc = {
        "kind": p.kind,
        "n": p.n,
        "d": p.d,
        "L": p.L,
        "mu": p.mu,
        "regularizer": {"kind": p.regularizer.kind, "lam": p.regularizer.lam},
        "metadata": p.metadata,
    }
    if p.kind == "least_squares":
        doc["A"] = p.A.tolist()
        doc["b"] = p.b.tolist()
    elif p.kind == "logistic":
        doc["W"] = p.W.tolist()
        doc["y"] = p.y.tolist()
        doc["ridge"] = p.ridge
    else:
        raise ValueError("custom problems are not serializable")
    if cert is not None:
        doc["certificate"] = _cert_to_json(cert)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_instance(path):
    """Load (instance, certificate-or-None) written by save_instance."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    reg = Regularizer(doc["regularizer"]["kind"], doc["regularizer"]["lam"])
    common = dict(
        kind=doc["kind"],
        n=doc["n"],
        d=doc["d"],
        regularizer=reg,
        L=doc["L"],
        mu=doc["mu"],
        metadata=doc.get("metadata", {}),
    )
    if doc["kind"] == "least_squares":
        p = ProblemInstance(A=np.array(doc["A"]), b=np.array(doc["b"]), **common)
    elif doc["kind"] == "logistic":
        p = ProblemInstance(
            W=np.array(doc["W"]), y=np.array(doc["y"]), ridge=doc.get("ridge", 0.0), **common
        )
    else:
        raise ValueError(f"unknown serialized kind {doc['kind']!r}")
    cert = None
    if "certificate" in doc:
        c = doc["certificate"]
        cert = HeterogeneityCertificate(
            v=np.array(c["v"]),
            t=np.array(c["t"]),
            delta=np.array(c["delta"]),
            beta=c["beta"],
            alpha_used=c["alpha_used"],
        )
    return p, cert
