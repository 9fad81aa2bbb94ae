"""Pure-numpy reference implementations of the inner-loop kernels.

Both backends implement the same cyclic coordinate-descent sweeps; this module
loops over coordinates in Python and vectorizes over rows.
"""

from __future__ import annotations

import numpy as np


def cd_weighted_lasso(X, y, row_w, l1_w, beta0, tol, max_iter):
    """Cyclic coordinate descent for
    ``min 0.5 * sum_i row_w[i] (y_i - x_i beta)^2 + sum_j l1_w[j] |beta_j|``.

    Returns ``(beta, iterations, converged)``.
    """
    n, p = X.shape
    beta = beta0.copy()
    r = y - X @ beta
    wx = X * row_w[:, None]
    denom = np.einsum("ij,ij->j", wx, X)
    it = 0
    for it in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            if denom[j] <= 0.0:
                continue
            rho = float(wx[:, j] @ r) + denom[j] * beta[j]
            t = l1_w[j]
            if t > 0.0:
                bj = np.sign(rho) * max(abs(rho) - t, 0.0) / denom[j]
            else:
                bj = rho / denom[j]
            d = bj - beta[j]
            if d != 0.0:
                r -= d * X[:, j]
                beta[j] = bj
                md = abs(d)
                if md > max_delta:
                    max_delta = md
        if max_delta < tol:
            return beta, it, True
    return beta, it, False


def cd_gamma(y, Q, p_diag, inv_mg, pen, free, gamma0, tol, max_iter):
    """Cyclic coordinate descent for the sparse shift vector ``gamma`` in
    ``min (y-g)^T P (y-g) + sum_i g_i^2 * inv_mg[i] + sum_i pen[i] |g_i|``
    with ``P = I - Q Q^T``. Masked (non-free) coordinates stay at zero.

    Returns ``(gamma, iterations, converged)``.
    """
    n, k = Q.shape
    gamma = gamma0.copy()
    r = y - gamma
    u = Q.T @ r
    it = 0
    for it in range(1, max_iter + 1):
        max_delta = 0.0
        for i in range(n):
            if not free[i]:
                continue
            c = p_diag[i] + inv_mg[i]
            if c <= 0.0:
                continue
            b = r[i] - float(Q[i] @ u) + gamma[i] * p_diag[i]
            t = 0.5 * pen[i]
            g_new = np.sign(b) * max(abs(b) - t, 0.0) / c
            d = g_new - gamma[i]
            if d != 0.0:
                gamma[i] = g_new
                r[i] -= d
                u -= d * Q[i]
                md = abs(d)
                if md > max_delta:
                    max_delta = md
        if max_delta < tol:
            return gamma, it, True
    return gamma, it, False
