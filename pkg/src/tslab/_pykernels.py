"""Numpy implementations of the small-matrix kernels.

Same signatures and in-place semantics as the compiled ``_ckernels``; used
when the extension is not built or ``TSLAB_BACKEND=python`` is set.
"""
import math

import numpy as np
from scipy.linalg import solve_triangular

BACKEND = "python"


def rank_one_update(B, x):
    B += np.outer(x, x)


def sherman_morrison_update(Binv, x):
    u = Binv @ x
    Binv -= np.outer(u, u) / (1.0 + x @ u)


def cholesky_factor(A):
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise ValueError(str(exc)) from exc


def cholesky_rank_one_update(L, x):
    w = np.array(x, dtype=np.float64)
    n = w.shape[0]
    for k in range(n):
        lkk = L[k, k]
        r = math.sqrt(lkk * lkk + w[k] * w[k])
        c = r / lkk
        s = w[k] / lkk
        L[k, k] = r
        if k + 1 < n:
            L[k + 1:, k] = (L[k + 1:, k] + s * w[k + 1:]) / c
            w[k + 1:] = c * w[k + 1:] - s * L[k + 1:, k]


def solve_lower(L, y):
    return solve_triangular(L, y, lower=True, check_finite=False)


def solve_lower_t(L, y):
    return solve_triangular(L, y, lower=True, trans="T", check_finite=False)


def cho_solve(L, y):
    return solve_lower_t(L, solve_lower(L, y))


def mvn_draw(mean, scale, L, z):
    if scale == 0.0:
        return np.array(mean, dtype=np.float64)
    return mean + scale * solve_lower_t(L, z)


def quad_widths(X, Binv):
    q = np.einsum("ij,jk,ik->i", X, Binv, X)
    return np.sqrt(np.maximum(q, 0.0))


def inverse_residual(B, Binv, x):
    return float(np.max(np.abs(B @ (Binv @ x) - x)))
