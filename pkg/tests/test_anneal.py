"""Discount-annealed policy gradient loop and its trace bookkeeping."""
import csv
import math

import numpy as np
import pytest

import substab as ss
from substab.anneal import (
    STATUS_DIVERGED,
    STATUS_MAX_ITERS,
    STATUS_REACHED,
    TRACE_COLUMNS,
)
from substab.errors import ValidationError


def _spiked_setup(seed=0, dim=5):
    # well-actuated test system: fast, robust annealing in unit tests
    system = ss.build_spiked_system(
        np.random.default_rng(seed), dim=dim, unstable_count=2, unstable_modulus=1.5
    )
    oracle = ss.SystemOracle(system)
    phi = ss.true_left_unstable_basis(system.a_matrix)
    return system, oracle, phi


def _fast_params():
    return ss.EstimationParams(n_grad_rollouts=10, n_cost_rollouts=30, horizon=40)


def test_alpha_update_formula():
    # s = 1, J = 3: alpha = 3 / (4 - 3) = 3
    q = np.eye(2)
    theta = np.zeros((1, 2))
    r = np.eye(1)
    assert ss.alpha_update(3.0, q, theta, r) == pytest.approx(3.0)
    # large cost: alpha = 3 / ((4/3) * 103 - 3)
    assert ss.alpha_update(103.0, q, theta, r) == pytest.approx(
        3.0 / ((4.0 / 3.0) * 103.0 - 3.0)
    )


def test_alpha_update_floor_maps_to_cap():
    q = np.eye(2)
    theta = np.zeros((1, 2))
    r = np.eye(1)
    # denominator <= 0 (cost below the stage floor) -> alpha_max
    assert ss.alpha_update(1.0, q, theta, r, alpha_max=7.0) == 7.0
    # cap also applies to positive denominators
    assert ss.alpha_update(2.3, q, theta, r, alpha_max=0.5) == 0.5


def test_alpha_update_uses_theta_in_stage_cost():
    q = np.eye(1)
    r = np.eye(1)
    theta = np.array([[2.0]])  # s = 1 + 4 = 5
    got = ss.alpha_update(100.0, q, theta, r, alpha_max=100.0)
    assert got == pytest.approx(15.0 / ((4.0 / 3.0) * 100.0 - 15.0))


def test_anneal_config_validation():
    with pytest.raises(ValidationError):
        ss.AnnealConfig(gamma0=1.5, rho_bar=2.0)
    with pytest.raises(ValidationError):
        ss.AnnealConfig(xi=0.0, rho_bar=2.0)
    with pytest.raises(ValidationError):
        ss.AnnealConfig(step_size=-1.0, rho_bar=2.0)


def test_run_anneal_requires_rho_bar_and_gamma0_bound():
    _, oracle, phi = _spiked_setup()
    with pytest.raises(ValidationError):
        ss.run_anneal(oracle, phi, ss.AnnealConfig(), np.random.default_rng(0))
    # gamma0 must be < 1 / rho_bar^2
    bad = ss.AnnealConfig(gamma0=0.5, rho_bar=2.0)
    with pytest.raises(ValidationError):
        ss.run_anneal(oracle, phi, bad, np.random.default_rng(0))


def test_anneal_stabilizes_spiked_system():
    system, oracle, phi = _spiked_setup(seed=1)
    cfg = ss.AnnealConfig(
        rho_bar=ss.spectral_radius(system.a_matrix) * 1.01,
        alpha_max=1.0,
        est=_fast_params(),
    )
    res = ss.run_anneal(oracle, phi, cfg, np.random.default_rng(2))
    assert res.status == STATUS_REACHED
    assert res.gamma == 1.0
    assert oracle.eval_closed_loop_radius(res.k) < 1.0
    # theta starts at zero and K = theta phi^T has rank <= ell
    assert res.k.shape == (1, system.state_dim)
    assert np.linalg.matrix_rank(res.k) <= phi.shape[1]


def test_anneal_gamma_monotone_and_trace_consistent():
    system, oracle, phi = _spiked_setup(seed=3)
    cfg = ss.AnnealConfig(
        rho_bar=ss.spectral_radius(system.a_matrix) * 1.01,
        alpha_max=1.0,
        est=_fast_params(),
    )
    res = ss.run_anneal(oracle, phi, cfg, np.random.default_rng(4))
    gammas = [rec.gamma for rec in res.trace.records]
    assert all(g2 >= g1 for g1, g2 in zip(gammas, gammas[1:]))
    assert gammas[0] == pytest.approx(cfg.gamma0)
    assert gammas[-1] == 1.0
    # gamma growth obeys the recorded alpha
    for prev, nxt in zip(res.trace.records, res.trace.records[1:]):
        expected = min(1.0, (1.0 + cfg.xi * prev.alpha) * prev.gamma)
        assert nxt.gamma == pytest.approx(expected, rel=1e-12)
    # final row has no alpha
    assert math.isnan(res.trace.records[-1].alpha)


def test_anneal_budget_per_iteration():
    system, oracle, phi = _spiked_setup(seed=5)
    est = _fast_params()
    cfg = ss.AnnealConfig(
        rho_bar=ss.spectral_radius(system.a_matrix) * 1.01,
        alpha_max=1.0,
        inner_steps=4,
        est=est,
    )
    res = ss.run_anneal(oracle, phi, cfg, np.random.default_rng(6))
    per_iter = est.n_cost_rollouts + 2 * est.n_grad_rollouts * cfg.inner_steps
    assert res.rollouts_used == len(res.trace) * per_iter
    assert res.steps_used == res.rollouts_used * est.horizon
    rolls = [rec.rollouts_cum for rec in res.trace.records]
    assert rolls == [per_iter * (j + 1) for j in range(len(res.trace))]


def test_anneal_max_iters_status():
    system, oracle, phi = _spiked_setup(seed=7)
    cfg = ss.AnnealConfig(
        rho_bar=ss.spectral_radius(system.a_matrix) * 1.01,
        alpha_max=1.0,
        max_outer_iters=2,
        est=_fast_params(),
    )
    res = ss.run_anneal(oracle, phi, cfg, np.random.default_rng(8))
    assert res.status == STATUS_MAX_ITERS
    assert len(res.trace) == 2


def test_anneal_divergence_status():
    # enormous step size forces theta to blow up and rollouts to diverge
    system, oracle, phi = _spiked_setup(seed=9)
    cfg = ss.AnnealConfig(
        rho_bar=ss.spectral_radius(system.a_matrix) * 1.01,
        alpha_max=1.0,
        step_size=1e6,
        est=_fast_params(),
    )
    res = ss.run_anneal(oracle, phi, cfg, np.random.default_rng(10))
    assert res.status == STATUS_DIVERGED
    assert res.gamma < 1.0


def test_baseline_fullstate_identity_representation():
    system, oracle, phi = _spiked_setup(seed=11)
    cfg = ss.AnnealConfig(
        rho_bar=ss.spectral_radius(system.a_matrix) * 1.01,
        alpha_max=1.0,
        max_outer_iters=3,
        est=_fast_params(),
    )
    res = ss.run_baseline_fullstate(oracle, cfg, np.random.default_rng(12))
    assert res.theta.shape == (1, system.state_dim)
    np.testing.assert_array_equal(res.phi, np.eye(system.state_dim))
    np.testing.assert_array_equal(res.k, res.theta)


def test_lift_controller():
    theta = np.array([[2.0, 0.0]])
    phi = np.eye(3)[:, :2]
    np.testing.assert_array_equal(
        ss.lift_controller(theta, phi), np.array([[2.0, 0.0, 0.0]])
    )


def test_trace_csv_round_trip(tmp_path):
    system, oracle, phi = _spiked_setup(seed=13)
    cfg = ss.AnnealConfig(
        rho_bar=ss.spectral_radius(system.a_matrix) * 1.01,
        alpha_max=1.0,
        max_outer_iters=3,
        est=_fast_params(),
    )
    res = ss.run_anneal(oracle, phi, cfg, np.random.default_rng(14))
    path = tmp_path / "trace.csv"
    res.trace.write_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == TRACE_COLUMNS
    assert len(rows) == len(res.trace)
    for row, rec in zip(rows, res.trace.records):
        assert int(row["j"]) == rec.j
        assert float(row["gamma"]) == pytest.approx(rec.gamma)
        assert int(row["rollouts_cum"]) == rec.rollouts_cum
