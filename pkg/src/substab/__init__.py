"""Model-free stabilization of discrete-time LTI systems on the learned
left unstable subspace: adjoint-probe subspace estimation plus
discount-annealed zeroth-order policy gradient, with a model-based LQR
oracle layer for verification."""
from ._kernels import BACKEND as KERNEL_BACKEND
from .adjoint import AdjointDataMatrix, adjoint_trajectory, probe_columns
from .anneal import (
    AnnealConfig,
    AnnealResult,
    AnnealTrace,
    alpha_update,
    lift_controller,
    run_anneal,
    run_baseline_fullstate,
)
from .lqr import CostMatrices, exact_cost, exact_gradient, solve_dare, solve_lyapunov
from .lti import (
    InitialStateSpec,
    LtiSystem,
    SpectrumReport,
    augment_system,
    build_cartpole,
    build_pendulum,
    build_random_system,
    build_spiked_system,
    count_unstable,
    sample_initial_state,
    spectral_radius,
    step,
)
from .oracle import SystemOracle
from .subspace import (
    SubspaceEstimate,
    estimate_subspace,
    subspace_distance,
    true_left_unstable_basis,
)
from .zo import (
    EstimationParams,
    LowDimController,
    estimate_cost,
    estimate_gradient,
    rollout_value,
    sample_sphere_perturbation,
)

__version__ = "0.1.0"
