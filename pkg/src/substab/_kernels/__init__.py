"""Hot-loop kernels: compiled extension when available, numpy fallback otherwise.

Set ``SUBSTAB_PURE_PYTHON=1`` to force the fallback (used by the parity tests
and the benchmark).
"""
import os

from . import _rollout_py

if os.environ.get("SUBSTAB_PURE_PYTHON") == "1":
    _impl = _rollout_py
    BACKEND = "python"
else:
    try:
        from . import _rollout_c as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _rollout_py
        BACKEND = "python"

closed_loop_trajectory = _impl.closed_loop_trajectory
adjoint_iteration = _impl.adjoint_iteration
