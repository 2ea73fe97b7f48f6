"""Experiment orchestration: seed fan-out, per-run traces, aggregates, summaries.

Quantities that require the true matrices (closed-loop spectral radius,
subspace distance) are computed by evaluation hooks here; the learner path
only ever touches the oracle.
"""
import csv
import json
import math
import os
from dataclasses import replace

import numpy as np

from .adjoint import adjoint_trajectory, probe_columns
from .anneal import STATUS_REACHED, run_anneal, run_baseline_fullstate
from .config import ExperimentConfig
from .errors import ConfigError
from .lti import (
    InitialStateSpec,
    LtiSystem,
    augment_system,
    build_cartpole,
    build_pendulum,
    build_random_system,
    build_spiked_system,
    count_unstable,
    sample_initial_state,
    spectral_radius,
)
from .oracle import SystemOracle
from .subspace import estimate_subspace, subspace_distance, true_left_unstable_basis


def build_system(spec):
    """Construct the LTI system described by a :class:`SystemSpec`."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "cartpole":
        nominal = build_cartpole()
    elif spec.kind == "pendulum":
        nominal = build_pendulum()
    elif spec.kind == "random":
        return build_random_system(spec.target_dim, spec.inputs, rng)
    elif spec.kind == "spiked":
        return build_spiked_system(
            rng,
            dim=spec.target_dim if spec.target_dim >= 3 else 3,
            unstable_count=spec.unstable_count,
            unstable_modulus=spec.unstable_modulus,
            stable_modulus=spec.stable_modulus,
            jordan=spec.jordan,
        )
    else:
        raise ConfigError(f"unknown system kind '{spec.kind}'")
    if spec.target_dim > nominal.state_dim:
        return augment_system(nominal, spec.target_dim, rng)
    return nominal


def resolve_ell(cfg, system, estimate=None):
    if cfg.subspace.ell is not None:
        return int(cfg.subspace.ell)
    if cfg.subspace.ell_auto and estimate is not None:
        return estimate.suggested_ell()
    return count_unstable(system).unstable_count


def learn_subspace(system, horizon, ell, rng):
    """Probe + adjoint rollout + SVD on a fresh oracle; returns (estimate, oracle)."""
    oracle = SystemOracle(system)
    probes = probe_columns(oracle)
    x0 = sample_initial_state(InitialStateSpec(dim=system.state_dim), rng)
    data = adjoint_trajectory(probes, x0, horizon)
    return estimate_subspace(data, ell), oracle


def run_single(system, cfg, run_seed, with_baseline=True):
    """One seeded pipeline: subspace learning, anneal, optional baseline.

    Returns a dict of results including evaluation-only diagnostics.
    """
    seed = tuple(run_seed) if isinstance(run_seed, (tuple, list)) else (int(run_seed),)
    rng = np.random.default_rng(seed)
    ell = resolve_ell(cfg, system)
    estimate, oracle = learn_subspace(system, cfg.subspace.horizon, ell, rng)

    rho_a = spectral_radius(system.a_matrix)
    rho_bar = cfg.anneal.rho_bar if cfg.anneal.rho_bar is not None else rho_a
    anneal_cfg = cfg.anneal_config(system.state_dim, system.input_dim, rho_bar)

    result = run_anneal(oracle, estimate, anneal_cfg, rng)

    out = {
        "seed": run_seed,
        "ell": ell,
        "rho_bar": rho_bar,
        "rho_bar_from_true_system": cfg.anneal.rho_bar is None,
        "estimate": estimate,
        "result": result,
        "final_rho": oracle.eval_closed_loop_radius(result.k),
        "adjoint_samples": cfg.subspace.horizon + system.state_dim,
    }
    try:
        phi_true = true_left_unstable_basis(system.a_matrix)
        if phi_true.shape[1] == ell:
            out["subspace_distance"] = subspace_distance(estimate.phi_hat, phi_true)
    except Exception:
        pass  # ground truth not computable (ambiguous spectrum); omit

    if with_baseline:
        b_cfg = anneal_cfg
        if cfg.anneal.baseline_step_size is not None:
            # the full-state problem typically needs a smaller step than the
            # ell-dimensional one; expose it rather than reusing step_size
            b_cfg = replace(anneal_cfg, step_size=cfg.anneal.baseline_step_size)
        b_oracle = SystemOracle(system)
        b_rng = np.random.default_rng(seed + (1,))
        out["baseline"] = run_baseline_fullstate(b_oracle, b_cfg, b_rng)
        out["baseline_final_rho"] = b_oracle.eval_closed_loop_radius(out["baseline"].k)
    return out


def iterations_to_one(result):
    """Outer iterations until gamma first reached 1, or None if it never did.

    Excludes the gamma = 1 polishing iterations at the end of the run.
    """
    if result.status != STATUS_REACHED:
        return None
    for rec in result.trace.records:
        if rec.gamma >= 1.0:
            return rec.j
    return None


def _pad_series(series_list, length):
    """Carry each run's terminal value so all runs align to ``length`` rows."""
    out = []
    for s in series_list:
        if len(s) == 0:
            s = [math.nan]
        out.append(list(s) + [s[-1]] * (length - len(s)))
    return np.array(out)


def write_aggregate_csv(path, results, key="result"):
    """Per-iteration mean/std of gamma and rho across runs (padded to align)."""
    traces = [r[key].trace.records for r in results]
    length = max(len(t) for t in traces)
    gamma = _pad_series([[rec.gamma for rec in t] for t in traces], length)
    rho = _pad_series([[rec.spectral_radius for rec in t] for t in traces], length)
    with open(path, "w", newline="") as fh:
        fh.write(
            "# per-iteration mean/std over %d runs; shorter runs padded by "
            "carrying their terminal values\n" % len(traces)
        )
        writer = csv.writer(fh)
        writer.writerow(["j", "gamma_mean", "gamma_std", "rho_mean", "rho_std"])
        for j in range(length):
            writer.writerow(
                [
                    j,
                    f"{gamma[:, j].mean():.12g}",
                    f"{gamma[:, j].std():.12g}",
                    f"{rho[:, j].mean():.12g}",
                    f"{rho[:, j].std():.12g}",
                ]
            )


def summarize_run(result, n_c, n_s, inner_steps, adjoint_samples):
    """Closed-form sample accounting for one anneal run.

    ``sc_rollouts`` counts one sample per antithetic pair (the convention of
    the j(n_c + n_s N) formula); ``trajectories`` counts every simulated
    rollout (two per pair), which is what the oracle counters record.
    """
    j = len(result.trace)
    return {
        "status": result.status,
        "outer_iterations": j,
        "iterations_to_gamma_one": iterations_to_one(result),
        "final_gamma": result.gamma,
        "sc_rollouts": j * (n_c + n_s * inner_steps),
        "trajectories": j * (n_c + 2 * n_s * inner_steps),
        "oracle_rollouts": result.rollouts_used,
        "adjoint_samples": adjoint_samples,
    }


def run_subspace_sweep(system, cfg, out_dir=None):
    """Median subspace distance vs adjoint horizon T over ``repeats`` seeds."""
    phi_true = true_left_unstable_basis(system.a_matrix)
    ell = phi_true.shape[1]
    horizons = cfg.subspace.horizon_sweep
    rows = []
    for t in horizons:
        dists = []
        for k in range(cfg.evaluation.repeats):
            rng = np.random.default_rng((cfg.evaluation.master_seed, k))
            estimate, _ = learn_subspace(system, t, ell, rng)
            dists.append(subspace_distance(estimate.phi_hat, phi_true))
        rows.append(
            {
                "T": t,
                "median_distance": float(np.median(dists)),
                "mean_distance": float(np.mean(dists)),
                "max_distance": float(np.max(dists)),
            }
        )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "subspace_sweep.csv"), "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return rows


def run_experiment(cfg, out_root=None):
    """Config-driven multi-seed pipeline; emits traces, aggregate, summary.

    Returns (summary dict, output directory or None).
    """
    system = build_system(cfg.system)
    name = cfg.evaluation.name or system.name
    out_dir = None
    if out_root is not None or cfg.evaluation.out_dir:
        out_dir = os.path.join(out_root or cfg.evaluation.out_dir, name)
        os.makedirs(out_dir, exist_ok=True)

    if cfg.subspace.horizon_sweep:
        rows = run_subspace_sweep(system, cfg, out_dir)
        summary = {"mode": "subspace_sweep", "system": system.name, "sweep": rows}
        if out_dir is not None:
            with open(os.path.join(out_dir, "summary.json"), "w") as fh:
                json.dump(summary, fh, indent=2)
        return summary, out_dir

    results = []
    for k in range(cfg.evaluation.repeats):
        res = run_single(system, cfg, (cfg.evaluation.master_seed, k), cfg.evaluation.baseline)
        res["run_index"] = k
        results.append(res)
        if out_dir is not None:
            run_dir = os.path.join(out_dir, f"run_{k}")
            os.makedirs(run_dir, exist_ok=True)
            res["result"].trace.write_csv(os.path.join(run_dir, "trace.csv"))
            if "baseline" in res:
                res["baseline"].trace.write_csv(os.path.join(run_dir, "baseline_trace.csv"))

    est, n = cfg.estimation, cfg.anneal.inner_steps
    per_run = []
    for res in results:
        entry = {
            "run_index": res["run_index"],
            "final_rho": res["final_rho"],
            "subspace_distance": res.get("subspace_distance"),
            **summarize_run(res["result"], est.n_cost_rollouts, est.n_grad_rollouts, n,
                            res["adjoint_samples"]),
        }
        if "baseline" in res:
            entry["baseline"] = {
                "final_rho": res["baseline_final_rho"],
                **summarize_run(res["baseline"], est.n_cost_rollouts, est.n_grad_rollouts,
                                n, 0),
            }
            if entry["iterations_to_gamma_one"] and entry["baseline"]["iterations_to_gamma_one"]:
                entry["iteration_ratio"] = (
                    entry["baseline"]["iterations_to_gamma_one"]
                    / entry["iterations_to_gamma_one"]
                )
        per_run.append(entry)

    stabilized = [e for e in per_run if e["status"] == STATUS_REACHED and e["final_rho"] < 1]
    iters = [e["iterations_to_gamma_one"] for e in per_run if e["iterations_to_gamma_one"]]
    summary = {
        "mode": "stabilize",
        "system": system.name,
        "state_dim": system.state_dim,
        "input_dim": system.input_dim,
        "repeats": cfg.evaluation.repeats,
        "stabilized_runs": len(stabilized),
        "mean_iterations_to_gamma_one": float(np.mean(iters)) if iters else None,
        "runs": per_run,
    }
    if cfg.evaluation.baseline:
        b_iters = [
            e["baseline"]["iterations_to_gamma_one"]
            for e in per_run
            if e.get("baseline", {}).get("iterations_to_gamma_one")
        ]
        summary["baseline_mean_iterations_to_gamma_one"] = (
            float(np.mean(b_iters)) if b_iters else None
        )
        if iters and b_iters:
            summary["iteration_ratio"] = float(np.mean(b_iters) / np.mean(iters))

    if out_dir is not None:
        write_aggregate_csv(os.path.join(out_dir, "aggregate.csv"), results)
        if cfg.evaluation.baseline:
            write_aggregate_csv(
                os.path.join(out_dir, "baseline_aggregate.csv"), results, key="baseline"
            )
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, default=float)
    return summary, out_dir


def summarize_trace_csv(path, n_c, n_s, inner_steps, adjoint_horizon=0, state_dim=0):
    """Summary record from an emitted trace CSV (no rerun needed)."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.DictReader(fh) if row["j"] != ""]
    if not rows:
        raise ConfigError(f"trace {path} is empty")
    j = len(rows)
    last = rows[-1]
    gammas = [float(r["gamma"]) for r in rows]
    first_one = next((i for i, g in enumerate(gammas) if g >= 1.0), None)
    return {
        "trace": path,
        "outer_iterations": j,
        "iterations_to_gamma_one": first_one,
        "final_gamma": gammas[-1],
        "final_spectral_radius": float(last["spectral_radius"])
        if last["spectral_radius"]
        else None,
        "sc_rollouts": j * (n_c + n_s * inner_steps),
        "trajectories": j * (n_c + 2 * n_s * inner_steps),
        "adjoint_samples": adjoint_horizon + state_dim,
    }
