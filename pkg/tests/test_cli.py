import json
import math
import os

import numpy as np
import pytest

from dfinito.cli import main, read_trace_csv
from dfinito.diagnostics import CSV_COLUMNS


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def ls_instance(tmp_path):
    out = tmp_path / "gen"
    out.mkdir()
    code = run_cli("generate", "--kind", "least_squares", "--n", "8", "--d", "4",
                   "--k", "4", "--L", "5", "--mu", "0.5", "--out", str(out))
    assert code == 0
    return str(out / "instance.json")


def _config(tmp_path, instance, **overrides):
    cfg = {
        "problem": {"path": instance},
        "algorithm": "dfinito",
        "sampling": {"regime": "reshuffle"},
        "alpha": "theory",
        "theta": 0.5,
        "epochs": 6,
        "seeds": [0, 1],
        "trace_every": 2,
    }
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def test_generate_missing_out_dir_errors(tmp_path):
    code = run_cli("generate", "--kind", "least_squares",
                   "--out", str(tmp_path / "missing"))
    assert code == 2


def test_generate_heterogeneous_prints_rho(tmp_path, capsys):
    out = tmp_path / "het"
    out.mkdir()
    code = run_cli("generate", "--kind", "heterogeneous", "--n", "50", "--d", "6",
                   "--k", "6", "--L", "10", "--mu", "0.1", "--beta", "0.1",
                   "--out", str(out))
    captured = capsys.readouterr().out
    assert code == 0
    assert "rho=" in captured
    rho = float(captured.split("rho=")[1].split()[0])
    assert rho == pytest.approx(1.0 / (50 * 0.9), rel=1e-2)


def test_generate_mu_equals_L_reports_kappa_one(tmp_path, capsys):
    out = tmp_path / "k1"
    out.mkdir()
    code = run_cli("generate", "--kind", "least_squares", "--n", "4", "--d", "3",
                   "--k", "3", "--L", "2", "--mu", "2", "--out", str(out))
    assert code == 0
    assert "kappa=1" in capsys.readouterr().out


def test_run_produces_schema_and_mean(tmp_path, ls_instance):
    out = tmp_path / "runout"
    out.mkdir()
    cfg = _config(tmp_path, ls_instance)
    assert run_cli("run", "--config", cfg, "--out", str(out)) == 0
    for fname in ("trace_seed0.csv", "trace_seed1.csv", "trace_mean.csv"):
        rows = read_trace_csv(str(out / fname))
        assert rows, fname
        assert rows[0]["epoch"] == 0
        assert rows[-1]["epoch"] == 6
    # mean equals pointwise average of the per-seed traces
    s0 = read_trace_csv(str(out / "trace_seed0.csv"))
    s1 = read_trace_csv(str(out / "trace_seed1.csv"))
    mean = read_trace_csv(str(out / "trace_mean.csv"))
    for a, b, m in zip(s0, s1, mean):
        for col in CSV_COLUMNS:
            if col in ("epoch", "grad_evals", "flags"):
                continue
            if a[col] is None or b[col] is None:
                assert m[col] is None
            else:
                assert abs(m[col] - (a[col] + b[col]) / 2) <= 1e-12 * max(1.0, abs(m[col]))


def test_run_epochs_zero_gives_initial_record(tmp_path, ls_instance):
    out = tmp_path / "zero"
    out.mkdir()
    cfg = _config(tmp_path, ls_instance, epochs=0, seeds=[0])
    assert run_cli("run", "--config", cfg, "--out", str(out)) == 0
    rows = read_trace_csv(str(out / "trace_seed0.csv"))
    assert len(rows) == 1 and rows[0]["epoch"] == 0


def test_run_deterministic_bytes(tmp_path, ls_instance):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        out.mkdir()
        cfg = _config(tmp_path, ls_instance, seeds=[3])
        assert run_cli("run", "--config", cfg, "--out", str(out)) == 0
        outs.append((out / "trace_seed3.csv").read_bytes())
    assert outs[0] == outs[1]


def test_run_seed_flag_overrides_config(tmp_path, ls_instance):
    out = tmp_path / "flagged"
    out.mkdir()
    cfg = _config(tmp_path, ls_instance)
    assert run_cli("run", "--config", cfg, "--out", str(out), "--seed", "7") == 0
    assert (out / "trace_seed7.csv").exists()
    assert not (out / "trace_seed0.csv").exists()


def test_run_baseline_algorithms(tmp_path, ls_instance):
    for algo in ("prox_gd", "svrg", "saga", "finito_uniform"):
        out = tmp_path / algo
        out.mkdir()
        cfg = _config(tmp_path, ls_instance, algorithm=algo, seeds=[0])
        assert run_cli("run", "--config", cfg, "--out", str(out)) == 0
        rows = read_trace_csv(str(out / "trace_seed0.csv"))
        assert rows[-1]["grad_map_residual_sq"] is not None


def test_run_sgd_theory_step_rejected(tmp_path, ls_instance):
    out = tmp_path / "sgd"
    out.mkdir()
    cfg = _config(tmp_path, ls_instance, algorithm="sgd", seeds=[0])
    assert run_cli("run", "--config", cfg, "--out", str(out)) == 2
    cfg = _config(tmp_path, ls_instance, algorithm="sgd", seeds=[0], alpha=0.01)
    assert run_cli("run", "--config", cfg, "--out", str(out)) == 0


def test_run_bad_format_and_missing_config(tmp_path, ls_instance):
    cfg = _config(tmp_path, ls_instance)
    assert run_cli("run", "--config", cfg, "--out", str(tmp_path), "--format", "parquet") == 2
    assert run_cli("run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)) == 2
    assert run_cli("run") == 2


def test_threads_env_parallel_matches_sequential(tmp_path, ls_instance, monkeypatch):
    results = {}
    for workers in ("1", "4"):
        monkeypatch.setenv("SHUFFLE_VR_THREADS", workers)
        out = tmp_path / f"w{workers}"
        out.mkdir()
        cfg = _config(tmp_path, ls_instance, seeds=[0, 1, 2])
        assert run_cli("run", "--config", cfg, "--out", str(out)) == 0
        results[workers] = (out / "trace_mean.csv").read_bytes()
    assert results["1"] == results["4"]


def test_threads_env_invalid(tmp_path, ls_instance, monkeypatch):
    monkeypatch.setenv("SHUFFLE_VR_THREADS", "lots")
    cfg = _config(tmp_path, ls_instance)
    assert run_cli("run", "--config", cfg, "--out", str(tmp_path)) == 2


def test_sweep_summary(tmp_path, ls_instance):
    out = tmp_path / "sweep"
    out.mkdir()
    cfg_path = tmp_path / "sweep.json"
    cfg_path.write_text(json.dumps({
        "problem": {"path": ls_instance},
        "algorithm": "dfinito",
        "sampling": {"regime": "reshuffle"},
        "epochs": 5,
        "seeds": [0],
        "grid": {"alpha": ["theory", 0.01], "theta": [0.5, 0.9]},
    }), encoding="utf-8")
    assert run_cli("sweep", "--config", str(cfg_path), "--out", str(out)) == 0
    lines = (out / "sweep_summary.csv").read_text(encoding="utf-8").strip().split("\n")
    assert lines[0] == "alpha,theta,regime,final_grad_map_residual_sq,best"
    assert len(lines) == 5
    assert sum(line.endswith(",1") for line in lines[1:]) == 1


def test_sweep_requires_grid(tmp_path, ls_instance):
    cfg = _config(tmp_path, ls_instance)
    assert run_cli("sweep", "--config", cfg, "--out", str(tmp_path)) == 2


def test_verify_steps_suite_exit_zero(capsys):
    assert run_cli("verify", "--suite", "steps") == 0
    out = capsys.readouterr().out
    assert "PASS step_size_dfinito_rr" in out


def test_verify_unknown_suite(capsys):
    assert run_cli("verify", "--suite", "bogus") == 2


def test_order_command(tmp_path, capsys):
    out = tmp_path / "het"
    out.mkdir()
    assert run_cli("generate", "--kind", "heterogeneous", "--n", "6", "--d", "3",
                   "--k", "3", "--L", "4", "--mu", "0.2", "--beta", "0.2",
                   "--out", str(out)) == 0
    capsys.readouterr()
    assert run_cli("order", "--instance", str(out / "instance.json")) == 0
    text = capsys.readouterr().out
    assert "optimal order: 1 2 3 4 5 6" in text
    assert "worst order:   6 5 4 3 2 1" in text
    assert "rho=" in text and "1/n=" in text


def test_order_matches_brute_force_small(tmp_path, capsys):
    out = tmp_path / "ls"
    out.mkdir()
    assert run_cli("generate", "--kind", "least_squares", "--n", "5", "--d", "3",
                   "--k", "3", "--L", "3", "--mu", "0.3", "--out", str(out)) == 0
    capsys.readouterr()
    assert run_cli("order", "--instance", str(out / "instance.json")) == 0
    printed = capsys.readouterr().out
    printed_order = [int(t) - 1 for t in
                     printed.split("optimal order:")[1].split("\n")[0].split()]
    from dfinito.oracle import brute_force_best_order, solve_reference, zstar_table
    from dfinito.problems import load_instance
    p, _ = load_instance(str(out / "instance.json"))
    alpha = 2.0 / (p.L + p.mu)
    zstar = zstar_table(p, solve_reference(p, tol=1e-10), alpha)
    scores = np.einsum("ij,ij->i", zstar, zstar)  # z0 = 0 table
    best, _ = brute_force_best_order(scores)
    assert printed_order == best.tolist()


def test_order_requires_instance():
    assert run_cli("order") == 2


def test_no_command_prints_help(capsys):
    assert run_cli() == 2
