"""Command-line entry points.

Subcommands: gen-system, learn-subspace, stabilize, baseline, experiment,
summarize. Exit codes: 0 success, 2 config error, 3 divergence in all
repeats, 4 I/O error.
"""
import argparse
import json
import os
import sys

import numpy as np

from .anneal import STATUS_REACHED, run_baseline_fullstate
from .config import ExperimentConfig, parse_config
from .errors import ConfigError, SubstabError
from .experiment import (
    build_system,
    learn_subspace,
    resolve_ell,
    run_experiment,
    run_single,
    summarize_trace_csv,
)
from .lti import count_unstable, spectral_radius
from .oracle import SystemOracle
from .subspace import subspace_distance, true_left_unstable_basis

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def _load_config(args):
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = ExperimentConfig(
            system=cfg.system,
            subspace=cfg.subspace,
            anneal=cfg.anneal,
            estimation=cfg.estimation,
            evaluation=type(cfg.evaluation)(
                **{**cfg.evaluation.__dict__, "master_seed": args.seed}
            ),
        )
    return cfg


def _planned_budget(cfg):
    est = cfg.estimation
    per_iter = est.n_cost_rollouts + 2 * est.n_grad_rollouts * cfg.anneal.inner_steps
    return {
        "rollouts_per_outer_iteration": per_iter,
        "steps_per_outer_iteration": per_iter * est.horizon,
        "max_outer_iterations": cfg.anneal.max_outer_iters,
        "adjoint_horizon": cfg.subspace.horizon,
    }


def _dump(obj):
    print(json.dumps(obj, indent=2, default=float))


def cmd_gen_system(args):
    cfg = _load_config(args)
    system = build_system(cfg.system)
    report = count_unstable(system)
    _dump(
        {
            "name": system.name,
            "state_dim": system.state_dim,
            "input_dim": system.input_dim,
            "spectral_radius": spectral_radius(system.a_matrix),
            "unstable_count": report.unstable_count,
            "eigenvalue_moduli": report.eigenvalue_moduli.tolist(),
        }
    )
    return EXIT_OK


def cmd_learn_subspace(args):
    cfg = _load_config(args)
    system = build_system(cfg.system)
    ell = resolve_ell(cfg, system)
    rng = np.random.default_rng(cfg.evaluation.master_seed)
    estimate, oracle = learn_subspace(system, cfg.subspace.horizon, ell, rng)
    out = {
        "ell": estimate.ell,
        "horizon": estimate.horizon_used,
        "suggested_ell": estimate.suggested_ell(),
        "singular_values": estimate.singular_values.tolist(),
        "probes_used": oracle.probes_used,
        "phi_hat": estimate.phi_hat.tolist(),
    }
    try:
        phi_true = true_left_unstable_basis(system.a_matrix)
        if phi_true.shape[1] == estimate.ell:
            out["subspace_distance"] = subspace_distance(estimate.phi_hat, phi_true)
    except SubstabError:
        pass
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        np.savetxt(os.path.join(args.out, "phi_hat.csv"), estimate.phi_hat, delimiter=",")
        np.savetxt(
            os.path.join(args.out, "singular_values.csv"),
            np.column_stack([np.arange(1, len(estimate.singular_values) + 1),
                             estimate.singular_values]),
            delimiter=",",
            header="index,value",
            comments="",
        )
    _dump(out)
    return EXIT_OK


def _single_run_command(args, baseline_only):
    cfg = _load_config(args)
    system = build_system(cfg.system)
    if args.dry_run:
        _dump({"system": system.name, "planned_budget": _planned_budget(cfg)})
        return EXIT_OK
    seed = (cfg.evaluation.master_seed, 0)
    if baseline_only:
        rng = np.random.default_rng(seed)
        oracle = SystemOracle(system)
        rho_bar = cfg.anneal.rho_bar or spectral_radius(system.a_matrix)
        anneal_cfg = cfg.anneal_config(system.state_dim, system.input_dim, rho_bar)
        result = run_baseline_fullstate(oracle, anneal_cfg, rng)
        final_rho = oracle.eval_closed_loop_radius(result.k)
        summary = {
            "status": result.status,
            "outer_iterations": result.outer_iterations,
            "final_gamma": result.gamma,
            "final_rho": final_rho,
        }
    else:
        res = run_single(system, cfg, seed, with_baseline=False)
        result = res["result"]
        summary = {
            "status": result.status,
            "outer_iterations": result.outer_iterations,
            "final_gamma": result.gamma,
            "final_rho": res["final_rho"],
            "subspace_distance": res.get("subspace_distance"),
            "ell": res["ell"],
        }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        result.trace.write_csv(os.path.join(args.out, "trace.csv"))
        with open(os.path.join(args.out, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, default=float)
    _dump(summary)
    return EXIT_OK if result.status == STATUS_REACHED else EXIT_DIVERGED


def cmd_stabilize(args):
    return _single_run_command(args, baseline_only=False)


def cmd_baseline(args):
    return _single_run_command(args, baseline_only=True)


def cmd_experiment(args):
    cfg = _load_config(args)
    if args.dry_run:
        _dump(
            {
                "config": {
                    "system": cfg.system.__dict__,
                    "subspace": {**cfg.subspace.__dict__,
                                 "horizon_sweep": list(cfg.subspace.horizon_sweep)},
                    "anneal": cfg.anneal.__dict__,
                    "estimation": cfg.estimation.__dict__,
                    "evaluation": cfg.evaluation.__dict__,
                },
                "planned_budget": _planned_budget(cfg),
            }
        )
        return EXIT_OK
    summary, out_dir = run_experiment(cfg, out_root=args.out)
    _dump({**summary, "out_dir": out_dir})
    if summary.get("mode") == "stabilize" and summary["stabilized_runs"] == 0:
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_summarize(args):
    cfg = _load_config(args)
    est = cfg.estimation
    records = [
        summarize_trace_csv(
            path,
            est.n_cost_rollouts,
            est.n_grad_rollouts,
            cfg.anneal.inner_steps,
            adjoint_horizon=cfg.subspace.horizon,
            state_dim=args.state_dim or 0,
        )
        for path in args.traces
    ]
    out = {"traces": records}
    if len(records) == 2:
        a, b = records
        if a["iterations_to_gamma_one"] and b["iterations_to_gamma_one"]:
            out["ratio"] = b["iterations_to_gamma_one"] / a["iterations_to_gamma_one"]
    _dump(out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="substab", description="Model-free stabilization on the unstable subspace"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--dry-run", action="store_true",
                       help="print the resolved plan, touch nothing")
        p.set_defaults(func=func)
        return p

    add("gen-system", cmd_gen_system, help="build a system and print its spectrum report")
    add("learn-subspace", cmd_learn_subspace,
        help="estimate the left unstable subspace and report diagnostics")
    add("stabilize", cmd_stabilize, help="full subspace stabilization run")
    add("baseline", cmd_baseline, help="full-state annealed PG baseline run")
    add("experiment", cmd_experiment, help="config-driven multi-seed pipeline")
    p = add("summarize", cmd_summarize, help="summarize emitted trace CSVs")
    p.add_argument("traces", nargs="+", help="trace CSV files")
    p.add_argument("--state-dim", type=int, help="state dimension for adjoint accounting")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
