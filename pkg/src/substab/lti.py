"""Discrete-time LTI systems: benchmark builders, simulation, spectral diagnostics.

All builders return immutable :class:`LtiSystem` instances. Spectral
diagnostics (``spectral_radius``, ``count_unstable``) read eigenvalues
through a dense complex eigensolver and expose only moduli.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError, ValidationError

DEFAULT_MARGIN = 1e-9


@dataclass(frozen=True)
class LtiSystem:
    """A hidden truth (A, B). Only oracles/evaluators should read the matrices."""

    a_matrix: np.ndarray
    b_matrix: np.ndarray
    name: str = "system"

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_matrix, dtype=float))
        b = np.atleast_2d(np.asarray(self.b_matrix, dtype=float))
        if b.ndim == 2 and b.shape[0] != a.shape[0] and b.shape[1] == a.shape[0]:
            b = b.T
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"A must be square, got {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise DimensionError(f"B rows {b.shape[0]} != state dim {a.shape[0]}")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValidationError("A and B must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "b_matrix", b)

    @property
    def state_dim(self):
        return self.a_matrix.shape[0]

    @property
    def input_dim(self):
        return self.b_matrix.shape[1]


@dataclass(frozen=True)
class InitialStateSpec:
    """Uniform-on-sphere initial state distribution of a given norm."""

    dim: int
    radius: float = None  # defaults to sqrt(dim) so E[x0 x0^T] = I

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim must be positive")
        if self.radius is None:
            object.__setattr__(self, "radius", float(np.sqrt(self.dim)))
        if self.radius <= 0:
            raise ValidationError("radius must be positive")


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalue_moduli: np.ndarray  # sorted descending
    unstable_count: int
    margin: float


def build_cartpole():
    """Linearized/discretized cartpole: 4 states, 1 input, 3 unstable modes."""
    a0 = np.array(
        [
            [1.0, 0.25, 0.0, 0.0],
            [0.0, 1.0, -2.5, 0.0],
            [0.0, 0.0, 1.0, 0.25],
            [0.0, 0.0, 5.0, 1.0],
        ]
    )
    b0 = np.array([[0.0], [0.25], [0.0], [-0.25]])
    return LtiSystem(a0, b0, name="cartpole")


def build_pendulum():
    """Inverted pendulum linearized about the origin, Euler-discretized.

    g = 10, m = 1, pole length 1, dt = 0.25; single unstable mode at
    1 + sqrt(0.625) ~ 1.79.
    """
    g, m, length, dt = 10.0, 1.0, 1.0, 0.25
    a0 = np.array([[1.0, dt], [g / length * dt, 1.0]])
    b0 = np.array([[0.0], [dt / (m * length**2)]])
    return LtiSystem(a0, b0, name="pendulum")


def augment_system(nominal, target_dim, rng):
    """Pad a nominal system with a stable random symmetric block.

    A = blkdiag(A0, As) with As = (G + G^T) / (2 ||G + G^T||), so the added
    block has spectral norm 1/2 and the nominal unstable spectrum is kept
    exactly. The added input rows are B_tilde / (2 ||B_tilde||).
    """
    rng = _as_generator(rng)
    n0 = nominal.state_dim
    extra = target_dim - n0
    if extra <= 0:
        raise DimensionError(f"target_dim {target_dim} must exceed nominal dim {n0}")
    g = rng.standard_normal((extra, extra))
    sym = g + g.T
    a_s = 0.5 * sym / np.linalg.norm(sym, 2)
    a = np.block(
        [
            [nominal.a_matrix, np.zeros((n0, extra))],
            [np.zeros((extra, n0)), a_s],
        ]
    )
    b_tilde = rng.standard_normal((extra, nominal.input_dim))
    b = np.vstack([nominal.b_matrix, b_tilde / (2.0 * np.linalg.norm(b_tilde, 2))])
    return LtiSystem(a, b, name=f"{nominal.name}-aug{target_dim}")


def build_random_system(dim, inputs, rng):
    """Random symmetric unstable system: A = 2 (G+G^T)/||G+G^T||, B = B~/||B~||."""
    rng = _as_generator(rng)
    g = rng.standard_normal((dim, dim))
    sym = g + g.T
    a0 = 2.0 * sym / np.linalg.norm(sym, 2)
    b_tilde = rng.standard_normal((dim, inputs))
    b0 = b_tilde / np.linalg.norm(b_tilde, 2)
    return LtiSystem(a0, b0, name=f"random{dim}x{inputs}")


def build_spiked_system(
    rng,
    dim=3,
    unstable_count=2,
    unstable_modulus=1.5,
    stable_modulus=0.9,
    jordan=False,
):
    """Small test system with a prescribed unstable/stable eigenvalue split.

    The unstable block is diag(+m, -m, +m, ...) at modulus ``m``, or a single
    Jordan block at +m (geometric multiplicity 1) when ``jordan`` is set.
    The spectrum is hidden behind a mild random similarity so the unstable
    subspace is not axis-aligned. Single input, B random.
    """
    rng = _as_generator(rng)
    if not 1 <= unstable_count < dim:
        raise DimensionError("need 1 <= unstable_count < dim")
    m = float(unstable_modulus)
    if jordan:
        block = np.diag(np.full(unstable_count, m)) + np.diag(
            np.ones(unstable_count - 1), 1
        )
    else:
        signs = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(unstable_count)])
        block = np.diag(m * signs)
    n_s = dim - unstable_count
    stable = np.diag(np.linspace(stable_modulus, 0.5 * stable_modulus, n_s))
    lam = np.block(
        [
            [block, np.zeros((unstable_count, n_s))],
            [np.zeros((n_s, unstable_count)), stable],
        ]
    )
    while True:
        s = np.eye(dim) + 0.5 * rng.standard_normal((dim, dim))
        if np.linalg.cond(s) < 50:
            break
    a = s @ lam @ np.linalg.inv(s)
    b = rng.standard_normal((dim, 1))
    return LtiSystem(a, b, name=f"spiked{dim}-u{unstable_count}@{m:g}")


def step(sys, x, u):
    """One transition x -> Ax + Bu."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (sys.state_dim,):
        raise DimensionError(f"state has shape {x.shape}, expected ({sys.state_dim},)")
    if u.shape != (sys.input_dim,):
        raise DimensionError(f"input has shape {u.shape}, expected ({sys.input_dim},)")
    return sys.a_matrix @ x + sys.b_matrix @ u


def spectral_radius(m):
    """Largest eigenvalue modulus of a square matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got {m.shape}")
    if not np.isfinite(m).all():
        raise ValidationError("matrix must be finite")
    try:
        eig = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(np.abs(eig))) if m.size else 0.0


def count_unstable(sys, margin=DEFAULT_MARGIN):
    """Sorted eigenvalue moduli and the count with modulus >= 1 - margin.

    The default margin counts marginal |lambda| = 1 modes as unstable.
    """
    if margin < 0:
        raise ValidationError("margin must be nonnegative")
    moduli = np.sort(np.abs(np.linalg.eigvals(sys.a_matrix)))[::-1]
    ell = int(np.sum(moduli >= 1.0 - margin))
    return SpectrumReport(eigenvalue_moduli=moduli, unstable_count=ell, margin=margin)


def sample_initial_state(spec, rng):
    """Draw x0 uniform on the sphere of radius ``spec.radius``."""
    rng = _as_generator(rng)
    while True:
        v = rng.standard_normal(spec.dim)
        nrm = np.linalg.norm(v)
        if nrm > 1e-12:
            return spec.radius * v / nrm


def _as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
