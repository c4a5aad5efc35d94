import numpy as np
import pytest

from dfinito import engine, problems, verify
from dfinito.diagnostics import pi_norm_sq
from dfinito.model import Regularizer


def test_all_suites_pass_default_seed():
    results = verify.run_suites(seed=0)
    assert results, "suites produced no checks"
    failures = [r.line() for r in results if not r.passed]
    assert not failures, failures


def test_unknown_suite_raises():
    with pytest.raises(KeyError):
        verify.run_suites(["nonexistent"])


def test_suite_filter_runs_only_selected():
    results = verify.run_suites(["steps"])
    assert all(r.name.startswith("step_size_") for r in results)


def test_checkresult_line_format():
    from dfinito.checks import check_leq
    ok = check_leq("thing", 0.5, 1.0)
    bad = check_leq("thing", 2.0, 1.0)
    assert ok.line().startswith("PASS thing")
    assert bad.line().startswith("FAIL thing")


def test_fault_injection_large_step_breaks_nonexpansiveness():
    # with alpha = 3/L the epoch operator expands along the top eigendirection
    # by a factor (1 - alpha*L)^2 = 4, so the alpha <= 2/L certificate is sharp
    p = problems.gen_least_squares(0, n=1, d=4, k=5, L=4.0, mu=0.0)
    alpha = 3.0 / p.L
    order = np.arange(p.n)
    hess = p.A[0].T @ p.A[0]
    _, vecs = np.linalg.eigh(hess)
    top = vecs[:, -1]
    v = np.zeros((1, p.d))
    u = v + top[None, :]
    num = pi_norm_sq(engine.apply_Tpi(p, order, u, alpha)
                     - engine.apply_Tpi(p, order, v, alpha), order)
    den = pi_norm_sq(u - v, order)
    assert num > den * (1 + 1e-10)
    assert num / den == pytest.approx(4.0, rel=1e-10)
