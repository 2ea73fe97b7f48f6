"""Learner-facing access boundary around a hidden LTI system.

The learner only ever sees:

* ``probe(i)``: the image A e_i of a canonical basis vector, obtained by one
  zero-input step;
* ``rollout(x0, k, horizon)``: a closed-loop state trajectory under the
  static feedback u = K x.

Budget counters record every interaction exactly. The ``eval_*`` methods
read the hidden matrices and exist only for evaluation/diagnostics; they are
never consumed by the learning path.
"""
import numpy as np

from ._kernels import closed_loop_trajectory
from .errors import BudgetError, DimensionError, DivergenceError
from .lti import spectral_radius


class SystemOracle:
    """Stateful budget holder wrapping a hidden :class:`~substab.lti.LtiSystem`."""

    def __init__(self, system, max_probes=None, divergence_guard=None):
        self._system = system
        self.max_probes = max_probes
        if divergence_guard is None:
            divergence_guard = 1e8 * np.sqrt(system.state_dim)
        self.divergence_guard = float(divergence_guard)
        self.probes_used = 0
        self.rollouts_used = 0
        self.steps_used = 0

    @property
    def state_dim(self):
        return self._system.state_dim

    @property
    def input_dim(self):
        return self._system.input_dim

    def probe(self, i):
        """Return A e_i via a single zero-input step from x0 = e_i."""
        if not 0 <= i < self.state_dim:
            raise DimensionError(f"probe index {i} out of range [0, {self.state_dim})")
        if self.max_probes is not None and self.probes_used >= self.max_probes:
            raise BudgetError(f"probe budget {self.max_probes} exhausted")
        self.probes_used += 1
        self.steps_used += 1
        return self._system.a_matrix[:, i].copy()

    def rollout(self, x0, k, horizon, damping=1.0):
        """Closed-loop trajectory [x_0, ..., x_{horizon-1}] under u = K x.

        ``damping`` < 1 returns the rescaled states damping^t x_t (a pure
        offline rescaling of the same simulated trajectory; used by
        discounted-value rollouts so the divergence guard applies to the
        damped state, which is the quantity that must stay bounded).

        Consumes one rollout and ``horizon`` steps from the budget. Raises
        :class:`DivergenceError` if any (damped) state norm exceeds the guard.
        """
        x0 = np.asarray(x0, dtype=float)
        k = np.atleast_2d(np.asarray(k, dtype=float))
        if x0.shape != (self.state_dim,):
            raise DimensionError(f"x0 has shape {x0.shape}, expected ({self.state_dim},)")
        if k.shape != (self.input_dim, self.state_dim):
            raise DimensionError(
                f"gain has shape {k.shape}, expected ({self.input_dim}, {self.state_dim})"
            )
        a_cl = self._system.a_matrix + self._system.b_matrix @ k
        if damping != 1.0:
            a_cl = damping * a_cl
        traj, bad_step = closed_loop_trajectory(a_cl, x0, int(horizon), self.divergence_guard)
        self.rollouts_used += 1
        self.steps_used += int(horizon)
        if bad_step >= 0:
            raise DivergenceError(
                f"trajectory norm exceeded guard {self.divergence_guard:g} at step {bad_step}",
                step=bad_step,
            )
        return traj

    # -- evaluation-only access (never used by the learner path) --

    def eval_closed_loop_radius(self, k):
        """rho(A + BK) from the hidden matrices. Evaluation hook only."""
        k = np.atleast_2d(np.asarray(k, dtype=float))
        return spectral_radius(self._system.a_matrix + self._system.b_matrix @ k)

    def eval_system(self):
        """The hidden system, for tests and evaluation hooks only."""
        return self._system
