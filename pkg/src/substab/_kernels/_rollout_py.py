"""Pure-numpy fallback for the hot rollout kernels."""
import numpy as np


def closed_loop_trajectory(a_cl, x0, tau, guard):
    """Iterate x <- A_cl x for ``tau`` recorded states starting at x0.

    Returns (traj, bad_step): traj has shape (tau, n) with rows
    x_0 ... x_{tau-1}; bad_step is the first index whose state norm exceeds
    ``guard`` (rows past it are zero), or -1 if the trajectory stayed bounded.
    """
    a_cl = np.ascontiguousarray(a_cl, dtype=np.float64)
    x = np.asarray(x0, dtype=np.float64).copy()
    n = x.shape[0]
    traj = np.zeros((tau, n))
    guard_sq = guard * guard
    for t in range(tau):
        if x @ x > guard_sq:
            return traj, t
        traj[t] = x
        if t + 1 < tau:
            x = a_cl @ x
    return traj, -1


def adjoint_iteration(probe_matrix, x0, horizon, guard):
    """Columns x_1 ... x_T of the adjoint iteration x_{t+1}[i] = <probe_i, x_t>.

    ``probe_matrix`` holds the probe vectors as columns, so one step is
    x <- probe_matrix^T x. Returns (d, bad_step) with d of shape (n, T).
    """
    p_t = np.ascontiguousarray(probe_matrix.T, dtype=np.float64)
    x = np.asarray(x0, dtype=np.float64).copy()
    n = x.shape[0]
    d = np.zeros((n, horizon))
    for t in range(horizon):
        x = p_t @ x
        if np.linalg.norm(x) > guard:
            return d, t
        d[:, t] = x
    return d, -1
