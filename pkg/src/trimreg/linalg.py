"""Dense least-squares kernels shared by all solvers.

All fits go through a QR factorization of the (row-weighted) design; the
normal-equations path exists only in the test suite as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateLeverageError, ParameterError, RankDeficiencyError

RANK_TOL = 1e-10


@dataclass
class WlsFit:
    beta: np.ndarray
    residuals: np.ndarray
    sigma2: float
    # QR factor of sqrt(W) X restricted to positively weighted rows, kept for
    # cheap leverage / downdate computations.
    q: np.ndarray
    r: np.ndarray
    rows: np.ndarray


def _qr_solve(A: np.ndarray, b: np.ndarray):
    """Thin-QR solve of min ||A beta - b||; raises on rank deficiency."""
    q, r = np.linalg.qr(A)
    diag = np.abs(np.diag(r))
    if diag.size:
        bad = np.flatnonzero(diag < RANK_TOL * max(diag.max(), 1e-300))
        if bad.size:
            raise RankDeficiencyError(bad)
    beta = np.linalg.solve(r, q.T @ b)
    return beta, q, r


def wls_fit(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> WlsFit:
    """Weighted least squares via QR of sqrt(w) X.

    Rows with zero weight are dropped from the factorization; ``sigma2`` uses
    the weighted residual sum of squares over the number of retained rows
    minus the number of columns.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ParameterError("weights must be nonnegative")
    rows = np.flatnonzero(w > 0)
    sw = np.sqrt(w[rows])
    beta, q, r = _qr_solve(X[rows] * sw[:, None], y[rows] * sw)
    residuals = y - X @ beta
    dof = rows.size - X.shape[1]
    wrss = float(np.sum(w[rows] * residuals[rows] ** 2))
    sigma2 = wrss / dof if dof > 0 else np.nan
    return WlsFit(beta, residuals, sigma2, q, r, rows)


def ols_fit(X: np.ndarray, y: np.ndarray) -> WlsFit:
    return wls_fit(X, y, np.ones(len(y)))


def hat_diagonals(fit: WlsFit) -> np.ndarray:
    """Leverages of the rows entering the fit, from the QR factor."""
    return np.sum(fit.q**2, axis=1)


def hat_diagonals_of(X: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(np.asarray(X, dtype=float))
    diag = np.abs(np.diag(r))
    bad = np.flatnonzero(diag < RANK_TOL * max(diag.max(), 1e-300))
    if bad.size:
        raise RankDeficiencyError(bad)
    return np.sum(q**2, axis=1)


def single_weight_downdate(fit: WlsFit, X: np.ndarray, i: int, w_i: float) -> np.ndarray:
    """Coefficients after down-weighting one unit of an OLS fit.

    Uses the closed-form update
    ``beta(w_i) = beta_ols - (X^T X)^{-1} x_i e_i (1 - w_i) / {1 - (1 - w_i) H_ii}``.
    """
    if not (0 < w_i <= 1):
        raise ParameterError("w_i must lie in (0, 1]")
    X = np.asarray(X, dtype=float)
    x_i = X[i]
    e_i = fit.residuals[i]
    # (X^T X)^{-1} x_i = R^{-1} R^{-T} x_i
    u = np.linalg.solve(fit.r.T, x_i)
    h_ii = float(u @ u)
    denom = 1.0 - (1.0 - w_i) * h_ii
    if abs(denom) < 1e-12:
        raise DegenerateLeverageError(f"unit {i}: (1 - w_i) H_ii = 1")
    v = np.linalg.solve(fit.r, u)
    return fit.beta - v * e_i * (1.0 - w_i) / denom


def deletion_residuals(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Externally Studentized leave-one-out residuals, via hat identities."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < p + 2:
        raise ParameterError("need n >= p + 2 for deletion residuals")
    fit = ols_fit(X, y)
    h = hat_diagonals(fit)
    e = fit.residuals
    rss = float(e @ e)
    one_m_h = 1.0 - h
    t = np.full(n, np.nan)
    ok = one_m_h > 1e-12
    s2_del = (rss - e[ok] ** 2 / one_m_h[ok]) / (n - p - 1)
    s2_del = np.maximum(s2_del, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t[ok] = e[ok] / np.sqrt(s2_del * one_m_h[ok])
    return t


def projection_residual_quadratic(Xbar: np.ndarray, v: np.ndarray) -> float:
    """Squared norm of the component of ``v`` orthogonal to col(Xbar)."""
    Xbar = np.asarray(Xbar, dtype=float)
    v = np.asarray(v, dtype=float)
    q, r = np.linalg.qr(Xbar)
    diag = np.abs(np.diag(r))
    bad = np.flatnonzero(diag < RANK_TOL * max(diag.max(), 1e-300))
    if bad.size:
        raise RankDeficiencyError(bad)
    u = q.T @ v
    return max(float(v @ v - u @ u), 0.0)
