# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Cython implementation of the hot rollout kernels.

Semantics match ``_rollout_py`` exactly; see the docstrings there.
"""
import numpy as np

cimport cython
from libc.math cimport sqrt


def closed_loop_trajectory(a_cl, x0, int tau, double guard):
    cdef double[:, ::1] a = np.ascontiguousarray(a_cl, dtype=np.float64)
    cdef int n = a.shape[0]
    traj_arr = np.zeros((tau, n))
    cdef double[:, ::1] traj = traj_arr
    x_arr = np.asarray(x0, dtype=np.float64).copy()
    cdef double[::1] x = x_arr
    y_arr = np.zeros(n)
    cdef double[::1] y = y_arr
    cdef double guard_sq = guard * guard
    cdef double acc, norm_sq
    cdef int t, i, j
    for t in range(tau):
        norm_sq = 0.0
        for i in range(n):
            norm_sq += x[i] * x[i]
        if norm_sq > guard_sq:
            return traj_arr, t
        for i in range(n):
            traj[t, i] = x[i]
        if t + 1 < tau:
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += a[i, j] * x[j]
                y[i] = acc
            for i in range(n):
                x[i] = y[i]
    return traj_arr, -1


def adjoint_iteration(probe_matrix, x0, int horizon, double guard):
    cdef double[:, ::1] p_t = np.ascontiguousarray(
        np.asarray(probe_matrix, dtype=np.float64).T
    )
    cdef int n = p_t.shape[0]
    d_arr = np.zeros((n, horizon))
    cdef double[:, ::1] d = d_arr
    x_arr = np.asarray(x0, dtype=np.float64).copy()
    cdef double[::1] x = x_arr
    y_arr = np.zeros(n)
    cdef double[::1] y = y_arr
    cdef double acc, norm_sq
    cdef int t, i, j
    for t in range(horizon):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += p_t[i, j] * x[j]
            y[i] = acc
        norm_sq = 0.0
        for i in range(n):
            norm_sq += y[i] * y[i]
        if sqrt(norm_sq) > guard:
            return d_arr, t
        for i in range(n):
            x[i] = y[i]
            d[i, t] = y[i]
    return d_arr, -1
