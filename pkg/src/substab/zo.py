"""Model-free cost and gradient estimation on the learned subspace.

Rollouts run on the true system through the oracle (u = theta phi_hat^T x);
the learner only sees the projected states z_t = phi_hat^T x_t. The gradient
estimator is the two-point antithetic form: paired rollouts at theta +/- r U
share the same initial state.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DivergenceError
from .lti import InitialStateSpec, sample_initial_state


@dataclass(frozen=True)
class LowDimController:
    theta: np.ndarray  # n_u x ell
    phi_hat: np.ndarray  # n_x x ell, orthonormal columns

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        phi = np.atleast_2d(np.asarray(self.phi_hat, dtype=float))
        if theta.shape[1] != phi.shape[1]:
            raise DimensionError(
                f"theta has {theta.shape[1]} columns but phi_hat has {phi.shape[1]}"
            )
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi_hat", phi)

    @property
    def ell(self):
        return self.theta.shape[1]

    def lift(self):
        """Full-state gain K = theta phi_hat^T."""
        return self.theta @ self.phi_hat.T

    def with_theta(self, theta):
        return LowDimController(theta=theta, phi_hat=self.phi_hat)


@dataclass(frozen=True)
class EstimationParams:
    smoothing_radius: float = 1e-3  # r
    n_grad_rollouts: int = 20  # n_s
    n_cost_rollouts: int = 100  # n_c
    horizon: int = 50  # tau
    x0_radius: float = None  # mu_0; None -> sqrt(n_x) (unit initial covariance)

    def __post_init__(self):
        if self.smoothing_radius <= 0:
            raise DimensionError("smoothing radius must be positive")
        if min(self.n_grad_rollouts, self.n_cost_rollouts, self.horizon) < 1:
            raise DimensionError("rollout counts and horizon must be >= 1")
        if self.x0_radius is not None and self.x0_radius <= 0:
            raise DimensionError("x0_radius must be positive")


def _stage_cost_matrix(ctrl, costs):
    phi = ctrl.phi_hat
    return phi.T @ costs.q @ phi + ctrl.theta.T @ costs.r @ ctrl.theta


def rollout_value(oracle, ctrl, gamma, tau, x0, costs, stage_matrix=None):
    """Finite-horizon discounted value sum_t gamma^t z_t^T (Q_proj + theta^T R theta) z_t.

    Simulates the true system for ``tau`` recorded states (one rollout,
    ``tau`` budget steps). The discount weights are folded into the states
    via the damped rollout gamma^{t/2} x_t, so the divergence guard watches
    the damped trajectory (the quantity that is bounded for a controller
    stabilizing the damped system).
    """
    if stage_matrix is None:
        stage_matrix = _stage_cost_matrix(ctrl, costs)
    traj = oracle.rollout(x0, ctrl.lift(), tau, damping=np.sqrt(gamma))
    z = traj @ ctrl.phi_hat  # tau x ell, damped projected states
    return float(np.einsum("ti,ij,tj->", z, stage_matrix, z))


def sample_sphere_perturbation(rows, cols, rng):
    """Uniform direction with Frobenius norm exactly sqrt(rows * cols)."""
    while True:
        u = rng.standard_normal((rows, cols))
        nrm = np.linalg.norm(u)
        if nrm > 1e-12:
            return np.sqrt(rows * cols) * u / nrm


def _default_x0_sampler(oracle, radius=None):
    spec = InitialStateSpec(dim=oracle.state_dim, radius=radius)
    return lambda rng: sample_initial_state(spec, rng)


def estimate_gradient(oracle, ctrl, gamma, params, costs, rng, x0_sampler=None):
    """Two-point zeroth-order gradient estimate (2 n_s rollouts).

    Each antithetic pair theta +/- r U_i shares one sampled initial state.
    A diverged rollout aborts the whole estimate (partial averaging would
    bias it).
    """
    if x0_sampler is None:
        x0_sampler = _default_x0_sampler(oracle, params.x0_radius)
    r = params.smoothing_radius
    n_u, ell = ctrl.theta.shape
    total = np.zeros((n_u, ell))
    for i in range(params.n_grad_rollouts):
        x0 = x0_sampler(rng)
        u = sample_sphere_perturbation(n_u, ell, rng)
        try:
            plus = rollout_value(
                oracle, ctrl.with_theta(ctrl.theta + r * u), gamma, params.horizon, x0, costs
            )
            minus = rollout_value(
                oracle, ctrl.with_theta(ctrl.theta - r * u), gamma, params.horizon, x0, costs
            )
        except DivergenceError as exc:
            raise DivergenceError(
                f"perturbation {i} diverged: {exc}", step=exc.step, perturbation_index=i
            ) from exc
        total += (plus - minus) * u
    return total / (2.0 * r * params.n_grad_rollouts)


def estimate_cost(oracle, ctrl, gamma, params, costs, rng, x0_sampler=None):
    """Monte-Carlo cost estimate: mean of n_c rollout values at fresh x0."""
    if x0_sampler is None:
        x0_sampler = _default_x0_sampler(oracle, params.x0_radius)
    stage = _stage_cost_matrix(ctrl, costs)
    values = [
        rollout_value(
            oracle, ctrl, gamma, params.horizon, x0_sampler(rng), costs, stage_matrix=stage
        )
        for _ in range(params.n_cost_rollouts)
    ]
    return float(np.mean(values))
