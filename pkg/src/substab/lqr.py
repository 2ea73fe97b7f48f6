"""Model-based LQR oracle layer: Lyapunov solves, exact discounted cost and
gradient, and Riccati-optimal controllers.

Used only by tests and evaluation hooks; the learner never calls into this
module. Discounting is handled throughout by damping: the gamma-discounted
problem on (A, B) equals the undiscounted problem on (sqrt(gamma) A,
sqrt(gamma) B).
"""
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    FeasibilityError,
    InstabilityError,
    NumericalError,
    ValidationError,
)
from .lti import spectral_radius


@dataclass(frozen=True)
class CostMatrices:
    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        r = np.atleast_2d(np.asarray(self.r, dtype=float))
        for name, m in (("q", q), ("r", r)):
            if np.linalg.norm(m - m.T) > 1e-12 * (1 + np.linalg.norm(m)):
                raise ValidationError(f"{name} must be symmetric")
            if np.min(np.linalg.eigvalsh(m)) <= 0:
                raise ValidationError(f"{name} must be positive definite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)

    @classmethod
    def identity(cls, state_dim, input_dim):
        return cls(np.eye(state_dim), np.eye(input_dim))


@dataclass(frozen=True)
class LyapunovSolution:
    p: np.ndarray
    residual: float


def solve_lyapunov(m_closed, w, max_doublings=200):
    """P = sum_t (M^T)^t W M^t by doubling: P <- P + M^T P M, M <- M^2."""
    m = np.atleast_2d(np.asarray(m_closed, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if m.shape != w.shape or m.shape[0] != m.shape[1]:
        raise DimensionError(f"incompatible shapes {m.shape}, {w.shape}")
    rho = spectral_radius(m)
    if rho >= 1.0:
        raise InstabilityError(f"closed loop has spectral radius {rho:.6g} >= 1")
    p = w.copy()
    mk = m.copy()
    for _ in range(max_doublings):
        update = mk.T @ p @ mk
        p = p + update
        if np.linalg.norm(update, "fro") < 1e-12 * np.linalg.norm(p, "fro"):
            break
        mk = mk @ mk
    else:
        raise NumericalError("Lyapunov doubling did not converge")
    p = 0.5 * (p + p.T)
    residual = float(np.linalg.norm(p - w - m.T @ p @ m, "fro"))
    return LyapunovSolution(p=p, residual=residual)


def _low_dim_pair(sys, phi):
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    a_u = phi.T @ sys.a_matrix @ phi
    b_u = phi.T @ sys.b_matrix
    return a_u, b_u, phi


def _closed_loop_value(a, b, k, gamma, q_eff, r):
    """P for the damped closed loop with stage cost q_eff + K^T R K."""
    m = np.sqrt(gamma) * (a + b @ k)
    w = q_eff + k.T @ r @ k
    return solve_lyapunov(m, w).p, m


def exact_cost(sys, controller, gamma, costs):
    """Discounted LQR cost tr(P) of a full gain K or a low-dim pair (theta, phi).

    The low-dimensional route uses the projected dynamics (phi^T A phi,
    phi^T B) and stage cost phi^T Q phi + theta^T R theta.
    """
    if isinstance(controller, tuple):
        theta, phi = controller
        a, b, phi = _low_dim_pair(sys, phi)
        q_eff = phi.T @ costs.q @ phi
    else:
        a, b = sys.a_matrix, sys.b_matrix
        theta = np.atleast_2d(np.asarray(controller, dtype=float))
        q_eff = costs.q
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    p, _ = _closed_loop_value(a, b, theta, gamma, q_eff, costs.r)
    return float(np.trace(p))


def exact_gradient(sys, theta, phi, gamma, costs):
    """Exact gradient 2 E Sigma of the low-dimensional discounted cost.

    E = (R + B_g^T P B_g) theta + B_g^T P A_g with damped (A_g, B_g) and the
    value matrix P; Sigma is the closed-loop state covariance with unit
    initial covariance (isotropic initial state).
    """
    a_u, b_u, phi = _low_dim_pair(sys, phi)
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    sg = np.sqrt(gamma)
    a_g, b_g = sg * a_u, sg * b_u
    q_eff = phi.T @ costs.q @ phi
    m = a_g + b_g @ theta
    p = solve_lyapunov(m, q_eff + theta.T @ costs.r @ theta).p
    sigma = solve_lyapunov(m.T, np.eye(m.shape[0])).p  # sum_t M^t I M^t^T
    e = (costs.r + b_g.T @ p @ b_g) @ theta + b_g.T @ p @ a_g
    return 2.0 * e @ sigma


def solve_dare(a, b, gamma, costs, rel_tol=1e-12, max_iters=100000):
    """Riccati fixed point for the damped pair; returns (P*, K*).

    Value-iteration on P with stopping rule ||P_{k+1} - P_k||_F <=
    rel_tol * ||P_k||_F. Divergence means the damped pair is not
    stabilizable at this discount.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    sg = np.sqrt(gamma)
    a_g, b_g = sg * a, sg * b
    q, r = costs.q, costs.r
    p = q.copy()
    for _ in range(max_iters):
        btp = b_g.T @ p
        gain = np.linalg.solve(r + btp @ b_g, btp @ a_g)
        p_next = q + a_g.T @ p @ a_g - a_g.T @ p @ b_g @ gain
        p_next = 0.5 * (p_next + p_next.T)
        if not np.isfinite(p_next).all() or np.linalg.norm(p_next, "fro") > 1e100:
            raise FeasibilityError("Riccati iteration diverged: pair not stabilizable")
        if np.linalg.norm(p_next - p, "fro") <= rel_tol * np.linalg.norm(p, "fro"):
            p = p_next
            break
        p = p_next
    else:
        raise FeasibilityError("Riccati iteration did not converge")
    btp = b_g.T @ p
    k_star = -np.linalg.solve(r + btp @ b_g, btp @ a_g)
    if spectral_radius(a_g + b_g @ k_star) >= 1.0:
        raise FeasibilityError("converged Riccati gain does not stabilize the damped pair")
    return p, k_star
