"""Timing comparison of the compiled and pure-python rollout kernels.

Run with::

    python benchmarks/bench_rollout.py [--reps 200]

Measures closed-loop trajectory simulation and the adjoint iteration at a
few problem sizes and prints the per-call time of each backend plus the
speedup. The compiled backend must be importable for a comparison; if it is
not, only the pure-python numbers are reported.
"""
import argparse
import time

import numpy as np

from substab._kernels import BACKEND
from substab._kernels._rollout_py import adjoint_iteration, closed_loop_trajectory

try:
    from substab._kernels import _rollout_c
except ImportError:
    _rollout_c = None


def _time(fn, reps):
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        best = min(best, (time.perf_counter() - t0) / reps)
    return best


def bench(reps):
    rng = np.random.default_rng(0)
    rows = []
    for n, tau in [(10, 50), (30, 50), (30, 200), (100, 100)]:
        a = 0.9 * rng.standard_normal((n, n)) / np.sqrt(n)
        x0 = rng.standard_normal(n)
        probes = rng.standard_normal((n, n))

        cases = [
            (f"trajectory n={n} tau={tau}",
             lambda: closed_loop_trajectory(a, x0, tau, 1e8),
             (lambda: _rollout_c.closed_loop_trajectory(a, x0, tau, 1e8))
             if _rollout_c else None),
            (f"adjoint    n={n} T={tau}",
             lambda: adjoint_iteration(probes, x0, tau, 1e200),
             (lambda: _rollout_c.adjoint_iteration(probes, x0, tau, 1e200))
             if _rollout_c else None),
        ]
        for label, py_fn, c_fn in cases:
            t_py = _time(py_fn, reps)
            t_c = _time(c_fn, reps) if c_fn else None
            rows.append((label, t_py, t_c))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=200, help="calls per timing")
    args = parser.parse_args()

    print(f"active backend: {BACKEND}")
    print(f"compiled kernel available: {_rollout_c is not None}\n")
    print(f"{'case':<28} {'python':>12} {'cython':>12} {'speedup':>9}")
    for label, t_py, t_c in bench(args.reps):
        if t_c is None:
            print(f"{label:<28} {t_py * 1e6:>10.1f}us {'-':>12} {'-':>9}")
        else:
            print(
                f"{label:<28} {t_py * 1e6:>10.1f}us {t_c * 1e6:>10.1f}us "
                f"{t_py / t_c:>8.2f}x"
            )


if __name__ == "__main__":
    main()
