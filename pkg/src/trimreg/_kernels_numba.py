"""Numba-compiled versions of the inner-loop kernels.

Same sweep structure as the numpy reference; loops are explicit so numba can
keep everything in registers.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def cd_weighted_lasso(X, y, row_w, l1_w, beta0, tol, max_iter):
    n, p = X.shape
    beta = beta0.copy()
    r = y - X @ beta
    denom = np.zeros(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += row_w[i] * X[i, j] * X[i, j]
        denom[j] = s
    it = 0
    for it in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            if denom[j] <= 0.0:
                continue
            rho = denom[j] * beta[j]
            for i in range(n):
                rho += row_w[i] * X[i, j] * r[i]
            t = l1_w[j]
            if t > 0.0:
                a = abs(rho) - t
                bj = (a / denom[j]) * np.sign(rho) if a > 0.0 else 0.0
            else:
                bj = rho / denom[j]
            d = bj - beta[j]
            if d != 0.0:
                for i in range(n):
                    r[i] -= d * X[i, j]
                beta[j] = bj
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if max_delta < tol:
            return beta, it, True
    return beta, it, False


@njit(cache=True)
def cd_gamma(y, Q, p_diag, inv_mg, pen, free, gamma0, tol, max_iter):
    n, k = Q.shape
    gamma = gamma0.copy()
    r = y - gamma
    u = np.zeros(k)
    for j in range(k):
        s = 0.0
        for i in range(n):
            s += Q[i, j] * r[i]
        u[j] = s
    it = 0
    for it in range(1, max_iter + 1):
        max_delta = 0.0
        for i in range(n):
            if not free[i]:
                continue
            c = p_diag[i] + inv_mg[i]
            if c <= 0.0:
                continue
            qu = 0.0
            for j in range(k):
                qu += Q[i, j] * u[j]
            b = r[i] - qu + gamma[i] * p_diag[i]
            t = 0.5 * pen[i]
            a = abs(b) - t
            g_new = (a / c) * np.sign(b) if a > 0.0 else 0.0
            d = g_new - gamma[i]
            if d != 0.0:
                gamma[i] = g_new
                r[i] -= d
                for j in range(k):
                    u[j] -= d * Q[i, j]
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if max_delta < tol:
            return gamma, it, True
    return gamma, it, False
