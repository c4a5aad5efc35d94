import numpy as np
import pytest

from dfinito.model import ProblemInstance, Regularizer, ordered_mean
from dfinito.oracle import (
    brute_force_best_order,
    expected_contraction,
    solve_reference,
    zstar_table,
)
from dfinito.problems import gen_heterogeneous, gen_least_squares, gen_logistic
from dfinito.prox import prox
from dfinito.sampling import optimal_cyclic_order


def _scalar_ls(a_vals, b_vals):
    """1-d least squares components f_i(x) = 0.5 (a_i x - b_i)^2."""
    a = np.asarray(a_vals, dtype=np.float64)
    b = np.asarray(b_vals, dtype=np.float64)
    n = a.size
    return ProblemInstance(
        kind="least_squares", n=n, d=1, regularizer=Regularizer.none(),
        L=float(np.max(a**2)), mu=float(np.min(a**2)),
        A=a.reshape(n, 1, 1), b=b.reshape(n, 1),
    )


def test_solve_reference_1d_shifted_quadratic():
    p = _scalar_ls([1.0], [3.0])  # f(x) = 0.5 (x - 3)^2
    assert solve_reference(p, tol=1e-12)[0] == pytest.approx(3.0)


def test_solve_reference_ridge_pulls_to_zero():
    p = ProblemInstance(
        kind="least_squares", n=1, d=1, regularizer=Regularizer.l2sq(1.0),
        L=1.0, mu=1.0, A=np.ones((1, 1, 1)), b=np.zeros((1, 1)),
    )
    assert abs(solve_reference(p, tol=1e-12)[0]) <= 1e-12


def test_solve_reference_iterative_matches_closed_form():
    p = gen_least_squares(0, n=5, d=3, k=4, L=2.0, mu=0.4)
    closed = solve_reference(p, tol=1e-12)
    # force the iterative path with an l1 regularizer of weight zero
    p_l1 = ProblemInstance(kind="least_squares", n=p.n, d=p.d,
                           regularizer=Regularizer.l1(0.0), L=p.L, mu=p.mu,
                           A=p.A, b=p.b)
    iterative = solve_reference(p_l1, tol=1e-11)
    assert np.linalg.norm(closed - iterative) <= 1e-8


def test_solve_reference_heterogeneous_returns_planted(tmp_path):
    n, d = 30, 4
    z0 = np.random.default_rng(0).standard_normal((n, d))
    p, cert = gen_heterogeneous(1, n, d, k=d, mu=0.2, L=4.0, alpha=0.3,
                                beta=0.2, z0=z0)
    assert np.linalg.norm(solve_reference(p, tol=1e-12) - cert.v) <= 1e-8


def test_zstar_table_hand_example():
    # components 0.5 x^2 and 0.5 (x - 2)^2: x* = 1, z* = (0.5, 1.5)
    p = _scalar_ls([1.0, 1.0], [0.0, 2.0])
    xstar = solve_reference(p, tol=1e-13)
    assert xstar[0] == pytest.approx(1.0)
    z = zstar_table(p, xstar, 0.5)
    assert np.allclose(z.ravel(), [0.5, 1.5])
    assert ordered_mean(z)[0] == pytest.approx(1.0)  # mean(z*) = x* when r = 0


def test_zstar_table_zero_gradient_components():
    p = _scalar_ls([1.0, 1.0], [1.0, 1.0])  # both minimized at x = 1
    z = zstar_table(p, np.array([1.0]), 0.7)
    assert np.allclose(z, 1.0)


def test_zstar_prox_recovery_for_l1():
    p = gen_least_squares(1, n=6, d=4, k=5, L=3.0, mu=0.2,
                          regularizer=Regularizer.l1(0.1))
    alpha = 1.0 / p.L
    xstar = solve_reference(p, tol=1e-12)
    z = zstar_table(p, xstar, alpha)
    assert np.linalg.norm(prox(p.regularizer, alpha, ordered_mean(z)) - xstar) <= 1e-10


def test_brute_force_hand_example():
    perm, val = brute_force_best_order([9.0, 1.0, 4.0])
    assert np.array_equal(perm, [0, 2, 1])
    assert val == pytest.approx(20.0 / 3.0)


def test_brute_force_equal_scores_tie():
    perm, val = brute_force_best_order(np.ones(3))
    assert np.array_equal(perm, [0, 1, 2])  # lexicographically smallest
    assert val == pytest.approx(2.0)


def test_brute_force_guard():
    with pytest.raises(ValueError):
        brute_force_best_order(np.ones(9))
    with pytest.raises(ValueError):
        brute_force_best_order([])


def test_brute_force_agrees_with_fast_order():
    rng = np.random.default_rng(2)
    for _ in range(100):
        n = int(rng.integers(2, 8))
        scores = rng.random(n) * 5
        slow, slow_val = brute_force_best_order(scores)
        fast = optimal_cyclic_order(scores)
        assert np.array_equal(slow, fast)
        weights = np.arange(1, n + 1) / n
        assert float(weights @ scores[fast]) == pytest.approx(slow_val)


def test_expected_contraction_zero_on_equal_inputs():
    p = gen_least_squares(3, n=4, d=3, k=3, L=2.0, mu=0.0)
    u = np.random.default_rng(4).standard_normal((4, 3))
    assert expected_contraction(p, u, u, 0.5) == pytest.approx(0.0, abs=1e-24)


def test_expected_contraction_nonexpansive_small():
    p = gen_least_squares(4, n=4, d=3, k=3, L=2.0, mu=0.0,
                          regularizer=Regularizer.l1(0.05))
    rng = np.random.default_rng(5)
    for _ in range(20):
        u, v = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
        assert expected_contraction(p, u, v, 2.0 / p.L) <= float(np.sum((u - v) ** 2)) * (1 + 1e-10)


def test_expected_contraction_strongly_convex_rate():
    p = gen_least_squares(5, n=4, d=3, k=3, L=2.0, mu=0.5)
    alpha = 2.0 / (p.mu + p.L)
    rate = 1 - 2 * alpha * p.mu * p.L / (p.mu + p.L)
    rng = np.random.default_rng(6)
    for _ in range(20):
        u, v = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
        assert expected_contraction(p, u, v, alpha) <= rate * float(np.sum((u - v) ** 2)) * (1 + 1e-10)


def test_expected_contraction_guard():
    p = gen_least_squares(6, n=7, d=2, k=2, L=1.0, mu=0.0)
    with pytest.raises(ValueError):
        expected_contraction(p, np.zeros((7, 2)), np.zeros((7, 2)), 0.5)


def test_logistic_reference_residual():
    rng = np.random.default_rng(7)
    W = rng.standard_normal((20, 4))
    y = np.where(rng.random(20) < 0.5, -1.0, 1.0)
    p = gen_logistic(W, y, 0.3)
    xstar = solve_reference(p, tol=1e-10)
    assert float(np.linalg.norm(p.full_grad(xstar))) <= 1e-9
