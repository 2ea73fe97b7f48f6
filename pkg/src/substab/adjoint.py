"""Adjoint-system sampling through the oracle boundary.

The columns of A are recovered once via canonical-basis probes; the
autonomous adjoint iteration x_{t+1}[i] = <A e_i, x_t> (= A^T x_t) is then
rolled out offline to build the data matrix D = [x_1, ..., x_T].
"""
from dataclasses import dataclass

import numpy as np

from ._kernels import adjoint_iteration
from .errors import DivergenceError, DimensionError

OVERFLOW_GUARD = 1e200


@dataclass(frozen=True)
class AdjointDataMatrix:
    d: np.ndarray  # n_x x T, column t-1 holds the adjoint state x_t
    horizon: int
    probe_vectors: np.ndarray  # n_x x n_x, column i = A e_i

    @property
    def state_dim(self):
        return self.d.shape[0]


def probe_columns(oracle):
    """Collect the probe vectors A e_i for i = 1..n_x (n_x oracle probes)."""
    n = oracle.state_dim
    return np.column_stack([oracle.probe(i) for i in range(n)])


def adjoint_trajectory(probes, x0, horizon):
    """Roll the adjoint iteration for ``horizon`` states from x0 (offline).

    The returned matrix stores x_1 ... x_T, excluding x_0. No oracle calls
    are made: the iteration uses only the cached probe vectors.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    if probes.shape != (n, n):
        raise DimensionError(f"expected {n} probe vectors of dim {n}, got {probes.shape}")
    if horizon < 1:
        raise DimensionError("horizon must be >= 1")
    d, bad_step = adjoint_iteration(probes, x0, int(horizon), OVERFLOW_GUARD)
    if bad_step >= 0:
        raise DivergenceError(
            f"adjoint state norm exceeded {OVERFLOW_GUARD:g} at step {bad_step + 1}",
            step=bad_step + 1,
        )
    return AdjointDataMatrix(d=d, horizon=int(horizon), probe_vectors=probes)
