"""Experiment harness: system building, seed fan-out, emission, accounting."""
import csv
import json
import math
import os

import numpy as np
import pytest

import substab as ss
from substab.anneal import AnnealResult, AnnealTrace, TraceRecord, STATUS_REACHED
from substab.config import config_from_dict
from substab.errors import ConfigError
from substab.experiment import (
    build_system,
    iterations_to_one,
    learn_subspace,
    resolve_ell,
    run_experiment,
    run_single,
    run_subspace_sweep,
    summarize_run,
    summarize_trace_csv,
    write_aggregate_csv,
)


SMALL = {
    "system": {"kind": "spiked", "target_dim": 5, "unstable_count": 2,
               "unstable_modulus": 1.5},
    "estimation": {"n_s": 10, "n_c": 30, "tau": 40},
    "anneal": {"N": 10, "eta": 1e-3, "alpha_max": 1.0},
    "evaluation": {"repeats": 2, "name": "small", "baseline": False},
}


def _small_cfg(**overrides):
    data = {k: dict(v) for k, v in SMALL.items()}
    for section, vals in overrides.items():
        data.setdefault(section, {}).update(vals)
    return config_from_dict(data)


def test_build_system_kinds():
    cart = build_system(_small_cfg(system={"kind": "cartpole", "target_dim": 30}).system)
    assert cart.state_dim == 30 and cart.input_dim == 1
    pend = build_system(_small_cfg(system={"kind": "pendulum", "target_dim": 20}).system)
    assert pend.state_dim == 20
    rand = build_system(
        _small_cfg(system={"kind": "random", "target_dim": 6, "inputs": 2}).system
    )
    assert rand.state_dim == 6 and rand.input_dim == 2
    spiked = build_system(_small_cfg().system)
    assert spiked.state_dim == 5


def test_build_system_no_augmentation_below_nominal():
    # target at or below the nominal size returns the nominal system
    cfg = _small_cfg(system={"kind": "cartpole", "target_dim": 4})
    assert build_system(cfg.system).state_dim == 4


def test_resolve_ell():
    cfg = _small_cfg()
    system = build_system(cfg.system)
    assert resolve_ell(cfg, system) == 2  # from the true unstable count
    cfg2 = _small_cfg(subspace={"ell": 3})
    assert resolve_ell(cfg2, system) == 3


def test_learn_subspace_orthonormal_and_probe_budget():
    cfg = _small_cfg()
    system = build_system(cfg.system)
    estimate, oracle = learn_subspace(system, 30, 2, np.random.default_rng(0))
    phi = estimate.phi_hat
    np.testing.assert_allclose(phi.T @ phi, np.eye(2), atol=1e-12)
    assert oracle.probes_used == system.state_dim
    assert oracle.rollouts_used == 0  # adjoint side only


def _fake_result(gammas, status=STATUS_REACHED):
    trace = AnnealTrace(status=status)
    for j, g in enumerate(gammas):
        trace.append(TraceRecord(j=j, gamma=g, alpha=math.nan, cost_estimate=1.0,
                                 spectral_radius=0.9, rollouts_cum=0, steps_cum=0))
    return AnnealResult(k=np.zeros((1, 2)), theta=np.zeros((1, 2)),
                        phi=np.eye(2), gamma=gammas[-1], trace=trace,
                        rollouts_used=0, steps_used=0, probes_used=0)


def test_iterations_to_one_counts_ramp_only():
    # polishing iterations at gamma = 1 are excluded
    res = _fake_result([0.1, 0.5, 1.0, 1.0, 1.0])
    assert iterations_to_one(res) == 2
    assert iterations_to_one(_fake_result([0.1, 0.5], status="diverged")) is None


def test_summarize_run_budget_formulas():
    res = _fake_result([0.1, 0.5, 1.0])
    out = summarize_run(res, n_c=100, n_s=20, inner_steps=10, adjoint_samples=70)
    assert out["sc_rollouts"] == 3 * (100 + 20 * 10)
    assert out["trajectories"] == 3 * (100 + 2 * 20 * 10)
    assert out["adjoint_samples"] == 70
    assert out["iterations_to_gamma_one"] == 2


def test_run_single_fields_and_distance():
    cfg = _small_cfg()
    system = build_system(cfg.system)
    res = run_single(system, cfg, 0, with_baseline=False)
    assert res["ell"] == 2
    assert res["adjoint_samples"] == cfg.subspace.horizon + 5
    assert res["subspace_distance"] < 0.05
    assert res["result"].status == STATUS_REACHED
    assert res["final_rho"] < 1.0
    assert "baseline" not in res


def test_run_single_baseline_uses_its_own_step_size():
    # an absurd baseline step diverges the full-state run immediately while
    # the subspace run (small step) is unaffected
    cfg = _small_cfg(anneal={"eta_baseline": 1e6})
    system = build_system(cfg.system)
    res = run_single(system, cfg, 0, with_baseline=True)
    assert res["result"].status == STATUS_REACHED
    assert res["baseline"].status == "diverged"


def test_write_aggregate_csv_pads_with_terminal_values(tmp_path):
    results = [{"result": _fake_result([0.1, 0.5, 1.0])},
               {"result": _fake_result([0.1, 1.0])}]
    path = tmp_path / "agg.csv"
    write_aggregate_csv(path, results)
    with open(path) as fh:
        header = fh.readline()
        assert header.startswith("#") and "padded" in header
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    # second run carries its terminal gamma=1.0 into row 2
    assert float(rows[2]["gamma_mean"]) == pytest.approx(1.0)
    assert float(rows[1]["gamma_mean"]) == pytest.approx((0.5 + 1.0) / 2)


def test_run_subspace_sweep_emits_csv(tmp_path):
    cfg = _small_cfg(subspace={"horizon_sweep": [5, 40]},
                     evaluation={"repeats": 4})
    system = build_system(cfg.system)
    rows = run_subspace_sweep(system, cfg, str(tmp_path))
    assert [r["T"] for r in rows] == [5, 40]
    assert rows[1]["median_distance"] <= rows[0]["median_distance"] + 1e-12
    with open(tmp_path / "subspace_sweep.csv") as fh:
        got = list(csv.DictReader(fh))
    assert [int(r["T"]) for r in got] == [5, 40]


def test_run_experiment_layout_and_summary(tmp_path):
    cfg = _small_cfg(evaluation={"baseline": True, "repeats": 2})
    summary, out_dir = run_experiment(cfg, out_root=str(tmp_path))
    assert out_dir == str(tmp_path / "small")
    for k in range(2):
        assert os.path.exists(os.path.join(out_dir, f"run_{k}", "trace.csv"))
        assert os.path.exists(os.path.join(out_dir, f"run_{k}", "baseline_trace.csv"))
    assert os.path.exists(os.path.join(out_dir, "aggregate.csv"))
    assert os.path.exists(os.path.join(out_dir, "baseline_aggregate.csv"))
    with open(os.path.join(out_dir, "summary.json")) as fh:
        loaded = json.load(fh)
    assert loaded["repeats"] == 2
    assert loaded["stabilized_runs"] == 2
    assert loaded["mean_iterations_to_gamma_one"] > 0
    assert len(loaded["runs"]) == 2
    # oracle counters equal the closed-form rollout accounting for every run
    for entry in loaded["runs"]:
        assert entry["oracle_rollouts"] == entry["trajectories"]


def test_run_experiment_sweep_mode(tmp_path):
    cfg = _small_cfg(subspace={"horizon_sweep": [5, 10]},
                     evaluation={"repeats": 3, "name": "sweepy"})
    summary, out_dir = run_experiment(cfg, out_root=str(tmp_path))
    assert summary["mode"] == "subspace_sweep"
    assert len(summary["sweep"]) == 2
    assert os.path.exists(os.path.join(out_dir, "subspace_sweep.csv"))
    assert os.path.exists(os.path.join(out_dir, "summary.json"))


def test_run_experiment_reproducible_byte_identical(tmp_path):
    cfg = _small_cfg()
    _, d1 = run_experiment(cfg, out_root=str(tmp_path / "a"))
    _, d2 = run_experiment(cfg, out_root=str(tmp_path / "b"))
    for rel in ("run_0/trace.csv", "run_1/trace.csv", "aggregate.csv"):
        with open(os.path.join(d1, rel), "rb") as f1, open(os.path.join(d2, rel), "rb") as f2:
            assert f1.read() == f2.read(), rel


def test_summarize_trace_csv_matches_live_run(tmp_path):
    cfg = _small_cfg()
    system = build_system(cfg.system)
    res = run_single(system, cfg, 3, with_baseline=False)
    path = tmp_path / "trace.csv"
    res["result"].trace.write_csv(path)
    est = cfg.estimation
    rec = summarize_trace_csv(path, est.n_cost_rollouts, est.n_grad_rollouts,
                              cfg.anneal.inner_steps, adjoint_horizon=40, state_dim=5)
    live = summarize_run(res["result"], est.n_cost_rollouts, est.n_grad_rollouts,
                         cfg.anneal.inner_steps, 45)
    assert rec["outer_iterations"] == live["outer_iterations"]
    assert rec["iterations_to_gamma_one"] == live["iterations_to_gamma_one"]
    assert rec["sc_rollouts"] == live["sc_rollouts"]
    assert rec["adjoint_samples"] == 45


def test_summarize_trace_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("j,gamma,alpha,cost_estimate,spectral_radius,rollouts_cum,steps_cum\n")
    with pytest.raises(ConfigError):
        summarize_trace_csv(path, 1, 1, 1)
