"""Left-unstable-subspace estimation and evaluation utilities.

The estimator is the top-l left singular block of the adjoint data matrix.
The ground-truth basis (evaluation only) comes from an ordered real Schur
decomposition of A^T, which handles non-diagonalizable matrices without
forming ill-conditioned eigenvector inverses. All comparisons go through
orthogonal projectors, so SVD sign/rotation ambiguity is irrelevant.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AmbiguousSpectrumError, DimensionError, NumericalError, ValidationError
from .lti import DEFAULT_MARGIN

ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class SubspaceEstimate:
    phi_hat: np.ndarray  # n_x x ell, orthonormal columns
    singular_values: np.ndarray  # all min(n_x, T) of them, descending
    ell: int
    horizon_used: int

    @property
    def state_dim(self):
        return self.phi_hat.shape[0]

    def suggested_ell(self):
        """Index of the largest relative singular-value gap (diagnostic only)."""
        s = self.singular_values
        if len(s) < 2:
            return len(s)
        gaps = s[:-1] / np.maximum(s[1:], 1e-300)
        return int(np.argmax(gaps)) + 1


def estimate_subspace(data, ell):
    """Top-``ell`` left singular vectors of the adjoint data matrix."""
    d = data.d
    n, t = d.shape
    if not 1 <= ell <= min(n, t):
        raise DimensionError(f"ell={ell} out of range [1, {min(n, t)}]")
    if not np.isfinite(d).all():
        raise ValidationError("data matrix must be finite")
    try:
        u, s, _ = np.linalg.svd(d, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    return SubspaceEstimate(
        phi_hat=u[:, :ell].copy(),
        singular_values=s,
        ell=int(ell),
        horizon_used=data.horizon,
    )


def true_left_unstable_basis(a, margin=DEFAULT_MARGIN):
    """Orthonormal basis of the left unstable subspace of A (evaluation oracle).

    Computed by sorting the real Schur form of A^T so the eigenvalues with
    modulus >= 1 - margin lead; the leading Schur vectors then satisfy
    A^T Phi = Phi T_u with the unstable spectrum on T_u. Raises
    :class:`AmbiguousSpectrumError` when the modulus gap between the stable
    and unstable groups is too small to separate reliably.
    """
    a = np.asarray(a, dtype=float)
    moduli = np.abs(np.linalg.eigvals(a))
    stable = moduli[moduli < 1.0 - margin]
    unstable_moduli = moduli[moduli >= 1.0 - margin]
    if len(unstable_moduli) == 0:
        raise ValidationError("no eigenvalue modulus above the threshold")
    # Sort with a threshold in the middle of the stable/unstable gap so that
    # marginal moduli (exactly 1) are classified robustly.
    lo = float(np.max(stable)) if len(stable) else 0.0
    hi = float(np.min(unstable_moduli))
    if hi - lo <= 1e-8:
        raise AmbiguousSpectrumError(
            f"stable/unstable modulus gap [{lo:g}, {hi:g}] is below 1e-8"
        )
    threshold = 0.5 * (lo + hi)

    def unstable(re, im):
        return np.hypot(re, im) >= threshold

    _, z, sdim = scipy.linalg.schur(a.T, output="real", sort=unstable)
    if sdim == 0:
        raise ValidationError("no eigenvalue modulus above the threshold")
    phi = z[:, :sdim]
    # Schur vectors are already orthonormal; QR guards against roundoff drift.
    q, _ = np.linalg.qr(phi)
    return q


def subspace_distance(phi_a, phi_b):
    """Spectral norm of the difference of the two orthogonal projectors."""
    phi_a = np.atleast_2d(np.asarray(phi_a, dtype=float))
    phi_b = np.atleast_2d(np.asarray(phi_b, dtype=float))
    if phi_a.shape != phi_b.shape:
        raise DimensionError(f"shape mismatch: {phi_a.shape} vs {phi_b.shape}")
    for phi in (phi_a, phi_b):
        gram = phi.T @ phi
        if np.linalg.norm(gram - np.eye(phi.shape[1])) > ORTHO_TOL:
            raise ValidationError("basis columns are not orthonormal")
    diff = phi_a @ phi_a.T - phi_b @ phi_b.T
    return float(np.linalg.norm(diff, 2))
