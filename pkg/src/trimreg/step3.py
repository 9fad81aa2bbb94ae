"""Per-unit variance-inflation weight estimation by restricted maximum
likelihood, and the weighted refit that closes the procedure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import ParameterError
from .linalg import wls_fit
from .model import Dataset, FitResult, OutlierSets

OMEGA_MAX = 1e8


@dataclass
class _RemlWorkspace:
    """Sufficient statistics reused across omega evaluations for one unit."""

    xtx: np.ndarray
    xty: np.ndarray
    yty: float
    x_i: np.ndarray
    y_i: float
    n: int
    k: int


def _workspace(Xbar: np.ndarray, y: np.ndarray, i: int) -> _RemlWorkspace:
    Xbar = np.asarray(Xbar, dtype=float)
    y = np.asarray(y, dtype=float)
    return _RemlWorkspace(
        xtx=Xbar.T @ Xbar,
        xty=Xbar.T @ y,
        yty=float(y @ y),
        x_i=Xbar[i].copy(),
        y_i=float(y[i]),
        n=Xbar.shape[0],
        k=Xbar.shape[1],
    )


def _restricted_loglik_ws(ws: _RemlWorkspace, omega: float) -> float:
    if omega < 0:
        raise ParameterError("omega must be nonnegative")
    c = omega / (1.0 + omega)
    # V^{-1} = I - c e_i e_i^T; all quantities follow by rank-one downdates
    xvx = ws.xtx - c * np.outer(ws.x_i, ws.x_i)
    xvy = ws.xty - c * ws.x_i * ws.y_i
    yvy = ws.yty - c * ws.y_i**2
    sign, logdet_xvx = np.linalg.slogdet(xvx)
    if sign <= 0:
        raise ParameterError("X^T V^{-1} X not positive definite")
    quad = yvy - float(xvy @ np.linalg.solve(xvx, xvy))
    dof = ws.n - ws.k
    if quad <= 0 or dof <= 0:
        raise ParameterError("degenerate restricted quadratic form")
    sigma2 = quad / dof
    logdet_v = np.log1p(omega)
    return -0.5 * (dof * np.log(2.0 * np.pi * sigma2) + logdet_v + logdet_xvx + dof)


def restricted_loglik(Xbar: np.ndarray, y: np.ndarray, i: int, omega: float) -> float:
    """Profile restricted log-likelihood of a single inflated-variance unit.

    The error covariance is ``sigma2 * (I + omega e_i e_i^T)`` with sigma2
    profiled out; the rank-one structure keeps every evaluation at O(k^2).
    """
    return _restricted_loglik_ws(_workspace(Xbar, y, i), omega)


def estimate_single_weight(Xbar: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """Maximize the restricted log-likelihood over omega in [0, 1e8].

    Returns ``(omega_hat, w_i)`` with ``w_i = 1 / (1 + omega_hat)``. The
    optimization runs on the log(1 + omega) scale. An optimum at the upper
    bound means the unit behaves like a mean-shift outlier (weight ~ 0).
    """
    ws = _workspace(Xbar, y, i)

    def neg(s):  # s = log1p(omega)
        return -_restricted_loglik_ws(ws, np.expm1(s))

    res = minimize_scalar(neg, bounds=(0.0, np.log1p(OMEGA_MAX)), method="bounded",
                          options={"xatol": 1e-10})
    omega = float(np.expm1(res.x))
    # boundary checks: prefer omega = 0 when it is at least as good
    if _restricted_loglik_ws(ws, 0.0) >= -res.fun - 1e-12:
        omega = 0.0
    if omega > 0.99 * OMEGA_MAX:
        omega = OMEGA_MAX
    return omega, 1.0 / (1.0 + omega)


def plugin_weight(gamma_i: float, sigma2: float, c1: float) -> float:
    """Closed-form weight ``(1 + gamma_i^2 c1 / sigma2)^{-1}``; the suggested
    normalizing constant is c1 = 1/n."""
    if sigma2 <= 0:
        raise ParameterError("sigma2 must be positive")
    return 1.0 / (1.0 + gamma_i**2 * c1 / sigma2)


def refit_with_weights(data: Dataset, s_beta, s_phi, weights: np.ndarray) -> FitResult:
    """Weighted least squares on the selected features with mean-shift rows
    excluded (zero weight) and variance-inflation rows down-weighted."""
    s_beta = np.asarray(s_beta, dtype=int)
    s_phi = np.asarray(s_phi, dtype=int)
    w = np.asarray(weights, dtype=float)
    if np.any(w[s_phi] != 0):
        raise ParameterError("excluded units must have zero weight")
    if np.any((w < 0) | (w > 1)):
        raise ParameterError("weights must lie in [0, 1]")
    fit = wls_fit(data.X[:, s_beta], data.y, w)
    beta_full = np.zeros(data.p)
    beta_full[s_beta] = fit.beta
    e = data.y - data.X @ beta_full
    n, k = data.n, s_beta.size
    # weighted variance estimate; self-normalizing in the weights
    sigma2 = float(np.sum(w * e**2) / (np.sum(w) / n)) / (n - k)
    viom = np.flatnonzero((w > 0) & (w < 1))
    gamma_hat = np.zeros(n)
    gamma_hat[viom] = e[viom]
    phi_hat = np.zeros(n)
    phi_hat[s_phi] = e[s_phi]
    outliers = OutlierSets(msom=s_phi, viom=viom, phi_hat=phi_hat, gamma_hat=gamma_hat)
    return FitResult(
        beta_hat=beta_full,
        support=np.flatnonzero(beta_full != 0.0),
        outliers=outliers,
        weights=w,
        sigma2_hat=sigma2,
        k_n=int(s_phi.size),
    )
