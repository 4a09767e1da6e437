# cython: language_level=3
"""Compiled small-matrix kernels for the per-round posterior bookkeeping.

Every routine mirrors one in ``_pykernels`` and operates on C-contiguous
float64 arrays. In-place routines mutate their first argument.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

BACKEND = "cython"


def rank_one_update(double[:, ::1] B, const double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i, j
    cdef double xi
    for i in range(n):
        xi = x[i]
        for j in range(n):
            B[i, j] += xi * x[j]


def sherman_morrison_update(double[:, ::1] Binv, const double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i, j
    cdef double denom = 1.0, ui
    cdef double[::1] u = np.empty(n)
    for i in range(n):
        ui = 0.0
        for j in range(n):
            ui += Binv[i, j] * x[j]
        u[i] = ui
        denom += x[i] * ui
    for i in range(n):
        ui = u[i] / denom
        for j in range(n):
            Binv[i, j] -= ui * u[j]


def cholesky_factor(const double[:, ::1] A):
    """Lower factor of ``A``; raises ``ValueError`` on a non-positive pivot."""
    cdef Py_ssize_t n = A.shape[0], i, j, k
    cdef double acc
    L_arr = np.zeros((n, n))
    cdef double[:, ::1] L = L_arr
    for j in range(n):
        acc = A[j, j]
        for k in range(j):
            acc -= L[j, k] * L[j, k]
        if not acc > 0.0:
            raise ValueError(f"non-positive pivot {acc!r} at index {j}")
        L[j, j] = sqrt(acc)
        for i in range(j + 1, n):
            acc = A[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            L[i, j] = acc / L[j, j]
    return L_arr


def cholesky_rank_one_update(double[:, ::1] L, const double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i, k
    cdef double r, c, s, lkk
    cdef double[::1] w = np.array(x, dtype=np.float64)
    for k in range(n):
        lkk = L[k, k]
        r = sqrt(lkk * lkk + w[k] * w[k])
        c = r / lkk
        s = w[k] / lkk
        L[k, k] = r
        for i in range(k + 1, n):
            L[i, k] = (L[i, k] + s * w[i]) / c
            w[i] = c * w[i] - s * L[i, k]


def solve_lower(const double[:, ::1] L, const double[::1] y):
    cdef Py_ssize_t n = y.shape[0], i, k
    cdef double acc
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        acc = y[i]
        for k in range(i):
            acc -= L[i, k] * out[k]
        out[i] = acc / L[i, i]
    return out_arr


def solve_lower_t(const double[:, ::1] L, const double[::1] y):
    """Solve ``L.T @ out = y``."""
    cdef Py_ssize_t n = y.shape[0], i, k
    cdef double acc
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc -= L[k, i] * out[k]
        out[i] = acc / L[i, i]
    return out_arr


def cho_solve(const double[:, ::1] L, const double[::1] y):
    return solve_lower_t(L, solve_lower(L, y))


def mvn_draw(const double[::1] mean, double scale, const double[:, ::1] L,
             const double[::1] z):
    """``mean + scale * L^{-T} z``: a draw from N(mean, scale^2 (L L^T)^{-1})."""
    cdef Py_ssize_t n = mean.shape[0], i
    if scale == 0.0:
        return np.array(mean, dtype=np.float64)
    out_arr = solve_lower_t(L, z)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = mean[i] + scale * out[i]
    return out_arr


def quad_widths(const double[:, ::1] X, const double[:, ::1] Binv):
    """Row-wise ``sqrt(x^T Binv x)`` for the contexts in ``X``."""
    cdef Py_ssize_t m = X.shape[0], n = X.shape[1], a, i, j
    cdef double acc, row
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    for a in range(m):
        acc = 0.0
        for i in range(n):
            row = 0.0
            for j in range(n):
                row += Binv[i, j] * X[a, j]
            acc += X[a, i] * row
        out[a] = sqrt(acc) if acc > 0.0 else 0.0
    return out_arr


def inverse_residual(const double[:, ::1] B, const double[:, ::1] Binv,
                     const double[::1] x):
    """max |B (Binv x) - x|, a cheap O(d^2) drift probe."""
    cdef Py_ssize_t n = x.shape[0], i, j
    cdef double acc, worst = 0.0
    cdef double[::1] u = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += Binv[i, j] * x[j]
        u[i] = acc
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += B[i, j] * u[j]
        acc = fabs(acc - x[i])
        if acc > worst:
            worst = acc
    return worst
