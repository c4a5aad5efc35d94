"""Built-in verification suites: operator properties, bound envelopes,
ordering oracles, implementation equivalence, and the step-size table.

Each suite returns a list of CheckResult; the CLI prints one line per check
and exits nonzero when any fails. The acceptance tests exercise the same
properties at larger scale.
"""
from __future__ import annotations

import math

import numpy as np

from . import baselines, diagnostics, engine, oracle, problems, sampling
from .checks import CheckResult, check_leq
from .model import MemoryState, Regularizer, ordered_mean
from .prox import prox


def _pairs(rng, count, n, d, scale=1.0):
    for _ in range(count):
        yield rng.standard_normal((n, d)) * scale, rng.standard_normal((n, d)) * scale


def suite_operators(seed=0):
    rng = np.random.default_rng(seed)
    results = []

    # fixed point of every block operator at the reference table
    p = problems.gen_least_squares(seed, n=6, d=4, k=6, L=2.0, mu=0.5,
                                   regularizer=Regularizer.l1(0.05))
    alpha = 1.0 / p.L
    xstar = oracle.solve_reference(p, tol=1e-12)
    zstar = oracle.zstar_table(p, xstar, alpha)
    dev = max(
        float(np.linalg.norm(engine.apply_Ti(p, i, zstar, alpha) - zstar))
        for i in range(p.n)
    )
    results.append(check_leq("fixed_point_blockwise", dev, 1e-8))
    results.append(
        check_leq(
            "fixed_point_x_recovery",
            float(np.linalg.norm(prox(p.regularizer, alpha, ordered_mean(zstar)) - xstar)),
            1e-8,
        )
    )

    # order-weighted non-expansiveness of the cyclic epoch operator
    order = np.arange(p.n)
    worst = -math.inf
    for alpha_f in (0.5, 1.0, 2.0):
        a = alpha_f / p.L
        for u, v in _pairs(rng, 100, p.n, p.d):
            num = diagnostics.pi_norm_sq(
                engine.apply_Tpi(p, order, u, a) - engine.apply_Tpi(p, order, v, a), order
            )
            den = diagnostics.pi_norm_sq(u - v, order)
            worst = max(worst, num / den - 1.0)
    results.append(check_leq("epoch_operator_nonexpansive_pi_norm", worst, 1e-10))

    # exact expected non-expansiveness over all permutations (n = 5)
    p5 = problems.gen_least_squares(seed + 1, n=5, d=3, k=5, L=2.0, mu=0.0,
                                    regularizer=Regularizer.l1(0.05))
    a = 2.0 / p5.L
    worst = -math.inf
    for u, v in _pairs(rng, 30, p5.n, p5.d):
        num = oracle.expected_contraction(p5, u, v, a)
        den = float(np.sum((u - v) ** 2))
        worst = max(worst, num / den - 1.0)
    results.append(check_leq("epoch_operator_nonexpansive_expectation", worst, 1e-10))

    # contraction of the damped epoch operator under strong convexity
    psc = problems.gen_least_squares(seed + 2, n=5, d=3, k=5, L=2.0, mu=0.5)
    a = 2.0 / (psc.mu + psc.L)
    theta = 0.7
    rate = 1.0 - 2.0 * theta * a * psc.mu * psc.L / (psc.mu + psc.L)
    order = np.arange(psc.n)
    worst = -math.inf
    for u, v in _pairs(rng, 100, psc.n, psc.d):
        num = diagnostics.pi_norm_sq(
            engine.apply_Spi(psc, order, u, a, theta) - engine.apply_Spi(psc, order, v, a, theta),
            order,
        )
        den = diagnostics.pi_norm_sq(u - v, order)
        worst = max(worst, num / (rate * den) - 1.0)
    results.append(check_leq("damped_epoch_operator_contracts", worst, 1e-10))
    return results


def _run_cyclic(p, alpha, theta, epochs, z0, reference):
    order = np.arange(p.n)
    plan = sampling.SamplingPlan("cyclic", p.n, order=order)
    cfg = engine.DampedRunConfig(alpha=alpha, theta=theta, epochs=epochs, plan=plan)
    return engine.run(p, cfg, z0, reference=reference)


def suite_bounds(seed=0):
    results = []

    # sublinear envelope, fixed cyclic order, merely convex instance
    p = problems.gen_least_squares(seed, n=20, d=10, k=10, L=4.0, mu=0.0)
    alpha, theta, epochs = 2.0 / p.L, 0.5, 60
    xstar = oracle.solve_reference(p, tol=1e-10)
    zstar = oracle.zstar_table(p, xstar, alpha)
    rng = np.random.default_rng(seed)
    z0 = rng.standard_normal((p.n, p.d))
    _, trace = _run_cyclic(p, alpha, theta, epochs, z0, (xstar, zstar))
    worst = max(r.prox_residual_sq / r.bound_convex for r in trace)
    results.append(check_leq("convex_envelope_cyclic", worst, 1.0))

    # same instance, reshuffled every epoch, averaged over seeds
    plan_epochs = [
        engine.run(
            p,
            engine.DampedRunConfig(
                alpha=alpha, theta=theta, epochs=epochs,
                plan=sampling.SamplingPlan("reshuffle", p.n, seed=s),
            ),
            z0,
            reference=(xstar, zstar),
        )[1]
        for s in range(4)
    ]
    bound = plan_epochs[0]
    worst = max(
        (sum(tr[k].prox_residual_sq for tr in plan_epochs) / len(plan_epochs))
        / bound[k].bound_convex
        for k in range(len(bound))
    )
    results.append(check_leq("convex_envelope_reshuffle_mean", worst, 1.0))

    # linear envelope under strong convexity
    psc = problems.gen_least_squares(seed + 1, n=20, d=10, k=10, L=5.0, mu=0.2)
    a = 2.0 / (psc.mu + psc.L)
    xs = oracle.solve_reference(psc, tol=1e-12)
    zs = oracle.zstar_table(psc, xs, a)
    z0 = np.random.default_rng(seed + 1).standard_normal((psc.n, psc.d))
    _, tr = _run_cyclic(psc, a, 0.9, 100, z0, (xs, zs))
    worst = max(r.dist_sq_to_opt / r.bound_sc for r in tr if r.bound_sc > 1e-300)
    results.append(check_leq("strongly_convex_envelope_cyclic", worst, 1.0))

    # epoch displacement: non-increasing and sublinearly bounded
    order = np.arange(p.n)
    z0c = np.random.default_rng(seed + 2).standard_normal((p.n, p.d))
    _, tr = _run_cyclic(p, alpha, theta, epochs, z0c, (xstar, zstar))
    init = diagnostics.pi_norm_sq(z0c - zstar, order)
    disp = [r.pi_norm_residual_sq for r in tr if r.pi_norm_residual_sq is not None]
    mono = max(
        (disp[k + 1] - disp[k]) / max(disp[k], 1e-300) for k in range(len(disp) - 1)
    )
    results.append(check_leq("epoch_displacement_nonincreasing", mono, 1e-10))
    worst = max(
        disp[k] / (theta / ((k + 1) * (1.0 - theta)) * init) for k in range(len(disp))
    )
    results.append(check_leq("epoch_displacement_sublinear", worst, 1.0))
    return results


def suite_ordering(seed=0):
    results = []
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(2, 8):
        for _ in range(20):
            scores = rng.random(n) * 10.0
            fast = sampling.optimal_cyclic_order(scores)
            slow, slow_val = oracle.brute_force_best_order(scores)
            weights = np.arange(1, n + 1) / n
            fast_val = float(weights @ scores[fast])
            worst = max(worst, abs(fast_val - slow_val))
            if not np.array_equal(fast, slow):
                worst = max(worst, 1.0)
    results.append(check_leq("optimal_order_matches_brute_force", worst, 1e-12))

    n, d, beta = 100, 10, 0.1
    z0 = np.random.default_rng(seed + 3).standard_normal((n, d))
    p, cert = problems.gen_heterogeneous(seed, n, d, k=d, mu=0.1, L=10.0,
                                         alpha=2.0 / 10.1, beta=beta, z0=z0)
    for res in problems.verify_heterogeneous(p, cert, z0, 2.0 / 10.1):
        results.append(res)
    disp = (math.sqrt(beta) ** np.arange(n))[:, None] * cert.t
    profile = np.einsum("ij,ij->i", disp, disp)
    ident = float(np.max(np.abs(sampling.optimal_cyclic_order(profile) - np.arange(n))))
    results.append(check_leq("planted_optimal_order_is_identity", ident, 0.0))
    return results


def suite_equivalence(seed=0):
    results = []
    p = problems.gen_least_squares(seed, n=12, d=6, k=8, L=3.0, mu=0.0,
                                   regularizer=Regularizer.l1(0.02))
    alpha, theta = 1.0 / p.L, 0.6
    rng = np.random.default_rng(seed)
    z0 = rng.standard_normal((p.n, p.d))
    s1 = MemoryState.from_table(z0, alpha, theta)
    s3 = MemoryState.from_table(z0, alpha, theta)
    worst = 0.0
    for k in range(30):
        order = rng.permutation(p.n)
        s1 = engine.epoch_step(p, s1, order, theta)
        s3 = engine.epoch_step_efficient(p, s3, order, theta)
        x1 = prox(p.regularizer, alpha, s1.zbar)
        x3 = prox(p.regularizer, alpha, s3.zbar)
        worst = max(worst, float(np.max(np.abs(x1 - x3))))
    results.append(check_leq("literal_vs_efficient_epoch", worst, 1e-12))

    s = MemoryState.from_table(z0, alpha, 1.0)
    order = np.arange(p.n)
    undamped = engine.epoch_step(p, s, order, 1.0)
    direct = engine.apply_Tpi(p, order, z0, alpha)
    results.append(
        check_leq("undamped_epoch_equals_operator", float(np.max(np.abs(undamped.z - direct))), 1e-12)
    )
    return results


def suite_steps(seed=0):
    L, mu, n = 1.0, 0.1, 10
    expected = {
        ("dfinito", "rr"): 2.0 / 1.1,
        ("dfinito", "cyclic"): 2.0 / 1.1,
        ("svrg", "rr"): (1.0 / (2.0 * math.sqrt(2.0) * L * n)) * math.sqrt(mu / L),
        ("svrg", "cyclic"): (1.0 / (4.0 * L * n)) * math.sqrt(mu / L),
        ("saga", "rr"): mu / (11.0 * L**2 * n),
        ("saga", "cyclic"): mu / (65.0 * L**2 * math.sqrt(n * (n + 1.0))),
    }
    results = []
    for (alg, reg), want in expected.items():
        got = baselines.theoretical_step_size(alg, reg, L, mu, n)
        results.append(check_leq(f"step_size_{alg}_{reg}", abs(got - want), 1e-15))
    return results


SUITES = {
    "operators": suite_operators,
    "bounds": suite_bounds,
    "ordering": suite_ordering,
    "equivalence": suite_equivalence,
    "steps": suite_steps,
}


def run_suites(names=None, seed=0):
    """Run the named suites (all when None); returns list of CheckResult."""
    names = list(SUITES) if names is None else list(names)
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        results.extend(SUITES[name](seed=seed))
    return results
