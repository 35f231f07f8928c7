import json
import math

import numpy as np
import pytest

import cmfbo


def test_beta_schedule_hand_values():
    assert cmfbo.beta_schedule(7, 1) == pytest.approx(0.970406, abs=1e-6)
    assert cmfbo.beta_schedule(1, 1) == pytest.approx(0.138629, abs=1e-6)


def test_schedules():
    assert cmfbo.assistance_schedule(0.5) == 100.0
    assert cmfbo.episode_length_schedule(1.0) == 600.0
    with pytest.raises(ValueError):
        cmfbo.assistance_schedule(1.5)


def test_gp_posterior_matches_two_point_closed_form():
    h = cmfbo.KernelHyper(1.3, np.array([0.4]), 0.7, 0.2)
    x = np.array([[0.1], [0.6]])
    z = np.array([0.0, 1.0])
    y = np.array([0.5, -0.4])
    model = cmfbo.GpModel(h, x, z, y, standardize=False)
    k = lambda a, za, b, zb: 1.3 * math.exp(-0.5 * ((a - b) / 0.4) ** 2) * math.exp(-0.5 * ((za - zb) / 0.7) ** 2)
    K = np.array([[k(0.1, 0, 0.1, 0), k(0.1, 0, 0.6, 1)], [k(0.6, 1, 0.1, 0), k(0.6, 1, 0.6, 1)]]) + 0.04 * np.eye(2)
    ks = np.array([k(0.33, 0.6, 0.1, 0), k(0.33, 0.6, 0.6, 1)])
    mean, std = model.posterior(np.array([0.33]), 0.6)
    assert mean == pytest.approx(ks @ np.linalg.solve(K, y), abs=1e-12)
    assert std == pytest.approx(math.sqrt(1.34 - ks @ np.linalg.solve(K, ks)), abs=1e-12)


def test_fit_and_progressive_acquisition():
    rng = np.random.default_rng(0)
    x = rng.uniform(size=(12, 2))
    z = rng.uniform(size=12)
    y = np.sin(3 * x[:, 0]) + x[:, 1] * z
    hyper, lml, fallback = cmfbo.fit_hyperparameters(x, z, y, seed=1)
    assert not fallback and math.isfinite(lml)
    model = cmfbo.GpModel(hyper, x, z, y)
    r = cmfbo.progressive_acquisition(model, 3, hyper.fidelity_length_scale, seed=2)
    zs = [step[0] for step in r["path"]]
    assert zs[0] == 0.0 and all(b > a for a, b in zip(zs, zs[1:]))
    assert r["z"] == zs[-1] and np.all((r["x"] >= 0) & (r["x"] <= 1))


def test_optimize_python_objective():
    def objective(x, z, seed):
        return -((x[0] - 0.3) ** 2) + 0.1 * z, 1.0 + 9.0 * z

    trace = cmfbo.optimize(objective, dim=1, budget=120.0, seed=3)
    assert trace["total_cost"] >= 120.0
    top = trace["z"] == 1.0
    assert top.any()
    best = trace["x"][top][np.argmax(trace["y"][top])]
    assert abs(best[0] - 0.3) < 0.05
    again = cmfbo.optimize(objective, dim=1, budget=120.0, seed=3)
    assert again["text"] == trace["text"]


def test_benchmarks_and_runs():
    assert cmfbo.benchmark_optimum("gridworld") > 0
    y, cost = cmfbo.evaluate_benchmark("overlap", np.array([0.5, 0.5]), 0.0)
    _, top_cost = cmfbo.evaluate_benchmark("overlap", np.array([0.5, 0.5]), 1.0)
    assert math.isfinite(y) and 0 < cost < top_cost
    t = cmfbo.run_benchmark("random", "overlap", 3000.0, seed=1)
    assert np.all(t["z"] == 1.0) and t["total_cost"] >= 3000.0
    with pytest.raises(cmfbo.ConfigError):
        cmfbo.run_benchmark("nope", "overlap", 10.0)


def test_run_experiment_persists_traces(tmp_path):
    config = json.dumps({
        "benchmark": {"name": "overlap", "params": {"dim": 1}},
        "methods": [{"name": "random"}, {"name": "gp_ucb", "params": {"fit_restarts": 1}}],
        "budget": 3000,
        "seeds": [0, 1],
    })
    records = cmfbo.run_experiment(config, str(tmp_path))
    assert len(records) == 4
    assert records[0]["config_hash"] == cmfbo.config_hash(config)
    loaded = cmfbo.read_trace(str(tmp_path / "gp_ucb_seed1.trace.csv"))
    assert loaded["text"] == records[3]["text"]
