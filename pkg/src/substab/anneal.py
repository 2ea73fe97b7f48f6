"""Discount-annealed policy gradient on the learned subspace.

The outer loop grows the discount factor by gamma <- (1 + xi * alpha) gamma,
where alpha comes from the estimated cost and the smallest projected
stage-cost eigenvalue; each outer iteration runs N zeroth-order policy
gradient steps at the current discount. The full-state baseline is the same
loop with the identity representation.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, ValidationError
from .lqr import CostMatrices
from .zo import EstimationParams, LowDimController, estimate_cost, estimate_gradient

STATUS_REACHED = "reached_gamma_one"
STATUS_MAX_ITERS = "max_iters"
STATUS_DIVERGED = "diverged"

TRACE_COLUMNS = [
    "j",
    "gamma",
    "alpha",
    "cost_estimate",
    "spectral_radius",
    "rollouts_cum",
    "steps_cum",
]


@dataclass(frozen=True)
class AnnealConfig:
    gamma0: float = 0.1
    xi: float = 0.9
    inner_steps: int = 10  # N policy-gradient updates per outer iteration
    step_size: float = 1e-3  # eta
    max_outer_iters: int = 3000
    alpha_max: float = 1.0
    final_phase_iters: int = 1  # outer iterations run at gamma = 1 before stopping
    rho_bar: float = None  # user-supplied upper bound on rho(A)
    est: EstimationParams = field(default_factory=EstimationParams)
    costs: CostMatrices = None

    def __post_init__(self):
        if not 0 < self.gamma0 < 1:
            raise ValidationError("gamma0 must lie in (0, 1)")
        if not 0 < self.xi < 1:
            raise ValidationError("xi must lie in (0, 1)")
        if self.inner_steps < 1 or self.max_outer_iters < 1:
            raise ValidationError("inner_steps and max_outer_iters must be >= 1")
        if self.step_size <= 0 or self.alpha_max <= 0:
            raise ValidationError("step_size and alpha_max must be positive")
        if self.final_phase_iters < 1:
            raise ValidationError("final_phase_iters must be >= 1")


@dataclass
class TraceRecord:
    j: int
    gamma: float
    alpha: float  # nan on the final gamma = 1 iteration
    cost_estimate: float
    spectral_radius: float  # nan when evaluation is disabled
    rollouts_cum: int
    steps_cum: int


@dataclass
class AnnealTrace:
    records: list = field(default_factory=list)
    status: str = STATUS_MAX_ITERS

    def append(self, record):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for rec in self.records:
                writer.writerow(
                    [
                        rec.j,
                        f"{rec.gamma:.12g}",
                        "" if math.isnan(rec.alpha) else f"{rec.alpha:.12g}",
                        f"{rec.cost_estimate:.12g}",
                        "" if math.isnan(rec.spectral_radius) else f"{rec.spectral_radius:.12g}",
                        rec.rollouts_cum,
                        rec.steps_cum,
                    ]
                )


@dataclass
class AnnealResult:
    k: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    gamma: float
    trace: AnnealTrace
    rollouts_used: int
    steps_used: int
    probes_used: int

    @property
    def status(self):
        return self.trace.status

    @property
    def outer_iterations(self):
        return len(self.trace)


def lift_controller(theta, phi_hat):
    """Lift the low-dimensional gain: K = theta phi_hat^T."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    phi_hat = np.atleast_2d(np.asarray(phi_hat, dtype=float))
    return theta @ phi_hat.T


def alpha_update(cost_estimate, q_proj, theta, r_cost, alpha_max=10.0):
    """Discount update rate from the estimated cost and the stage-cost floor.

    alpha = 3 s / ((4/3) J_hat - 3 s) with s the smallest eigenvalue of the
    projected stage cost. A non-positive denominator (cost estimate below
    the floor) maps to alpha_max, as does any value above it.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    stage = q_proj + theta.T @ r_cost @ theta
    s = float(np.min(np.linalg.eigvalsh(0.5 * (stage + stage.T))))
    if s <= 0:
        raise ValidationError(f"projected stage cost is not positive definite (s={s:g})")
    denom = (4.0 / 3.0) * cost_estimate - 3.0 * s
    if denom <= 0:
        return float(alpha_max)
    return float(min(3.0 * s / denom, alpha_max))


def run_anneal(oracle, phi_hat, cfg, rng, record_spectral_radius=True):
    """Annealed policy gradient on the representation ``phi_hat``.

    Starts from theta = 0 at gamma0 < 1 / rho_bar^2, runs N inner
    zeroth-order PG steps per outer iteration, estimates the cost, grows
    gamma, and finishes with one inner phase at gamma = 1. Returns the
    lifted gain K = theta phi_hat^T with the full per-iteration trace.
    """
    phi = getattr(phi_hat, "phi_hat", phi_hat)
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    if cfg.rho_bar is None:
        raise ValidationError("cfg.rho_bar (upper bound on rho(A)) is required")
    if cfg.gamma0 >= 1.0 / cfg.rho_bar**2:
        raise ValidationError(
            f"gamma0={cfg.gamma0:g} must be < 1/rho_bar^2 = {1.0 / cfg.rho_bar**2:g}"
        )
    costs = cfg.costs if cfg.costs is not None else CostMatrices.identity(
        oracle.state_dim, oracle.input_dim
    )
    q_proj = phi.T @ costs.q @ phi

    ctrl = LowDimController(theta=np.zeros((oracle.input_dim, phi.shape[1])), phi_hat=phi)
    trace = AnnealTrace()
    gamma = cfg.gamma0
    final_left = cfg.final_phase_iters
    start_rollouts, start_steps = oracle.rollouts_used, oracle.steps_used

    for j in range(cfg.max_outer_iters):
        try:
            theta = ctrl.theta
            for _ in range(cfg.inner_steps):
                grad = estimate_gradient(oracle, ctrl.with_theta(theta), gamma, cfg.est, costs, rng)
                theta = theta - cfg.step_size * grad
            ctrl = ctrl.with_theta(theta)
            cost_est = estimate_cost(oracle, ctrl, gamma, cfg.est, costs, rng)
        except DivergenceError:
            trace.status = STATUS_DIVERGED
            break

        at_one = gamma >= 1.0
        alpha = (
            math.nan
            if at_one
            else alpha_update(cost_est, q_proj, ctrl.theta, costs.r, cfg.alpha_max)
        )
        rho = (
            oracle.eval_closed_loop_radius(ctrl.lift())
            if record_spectral_radius
            else math.nan
        )
        trace.append(
            TraceRecord(
                j=j,
                gamma=gamma,
                alpha=alpha,
                cost_estimate=cost_est,
                spectral_radius=rho,
                rollouts_cum=oracle.rollouts_used - start_rollouts,
                steps_cum=oracle.steps_used - start_steps,
            )
        )
        if at_one:
            final_left -= 1
            if final_left == 0:
                trace.status = STATUS_REACHED
                break
            continue
        gamma = min(1.0, (1.0 + cfg.xi * alpha) * gamma)

    return AnnealResult(
        k=ctrl.lift(),
        theta=ctrl.theta,
        phi=phi,
        gamma=gamma,
        trace=trace,
        rollouts_used=oracle.rollouts_used - start_rollouts,
        steps_used=oracle.steps_used - start_steps,
        probes_used=oracle.probes_used,
    )


def run_baseline_fullstate(oracle, cfg, rng, record_spectral_radius=True):
    """Full-state annealed PG: the same loop with the identity representation."""
    return run_anneal(
        oracle,
        np.eye(oracle.state_dim),
        cfg,
        rng,
        record_spectral_radius=record_spectral_radius,
    )
