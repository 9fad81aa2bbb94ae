"""Trimmed sparse selection: simultaneous feature selection and mean-shift
outlier detection.

The search follows the standard fast trimmed-least-squares pattern: many
elemental starts, two warm concentration steps each, best candidates iterated
to a concentration fixed point. The folded-concave penalty is handled by a
weighted-L1 linearization whose first iteration is a plain lasso, so the
elemental search runs on the lasso problem and the linearization is refined on
the winning subset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backends import cd_weighted_lasso
from .exceptions import ConvergenceError, ParameterError
from .model import Dataset, PenaltySpec, ProxyMatrices
from .penalty import lla_weights, penalty_value

DEFAULT_STARTS = 500
DEFAULT_KEEP = 10


@dataclass
class Step1Config:
    k_n: int
    penalty: PenaltySpec
    n_starts: int = DEFAULT_STARTS
    n_keep: int = DEFAULT_KEEP
    max_csteps: int = 50
    cd_tol: float = 1e-8
    cd_max_iter: int = 5000
    lla_iters: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_keep > self.n_starts:
            raise ParameterError("n_keep must not exceed n_starts")
        if self.cd_tol <= 0:
            raise ParameterError("cd_tol must be positive")


@dataclass
class CdResult:
    beta: np.ndarray
    iterations: int
    converged: bool


@dataclass
class Step1Result:
    beta_hat: np.ndarray
    support: np.ndarray
    msom: np.ndarray
    phi_hat: np.ndarray
    objective: float
    objective_trace: list = field(default_factory=list)
    retained: np.ndarray | None = None
    converged: bool = True


def transform_by_proxy(data: Dataset, proxy: ProxyMatrices) -> Dataset:
    """Scale each row by the square root of its proxy weight, so weighted
    least squares on the original data becomes ordinary least squares here.

    The returned dataset carries ``intercept=False`` because scaling destroys
    the all-ones column.
    """
    m_r = proxy.m_r
    if m_r.shape[0] != data.n:
        raise ParameterError("proxy length does not match n")
    s = np.sqrt(m_r)
    return Dataset(data.y * s, data.X * s[:, None], intercept=False)


def penalized_wls_cd(X, y, row_weights, l1_weights, tol=1e-8, max_iter=5000, beta0=None) -> CdResult:
    """Weighted lasso by cyclic coordinate descent with soft-thresholding.

    Solves ``min 0.5 sum_i w_i (y_i - x_i b)^2 + sum_j l1_j |b_j|``. A run
    hitting ``max_iter`` returns its last iterate with ``converged=False``.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    w = np.ascontiguousarray(row_weights, dtype=float)
    l1 = np.ascontiguousarray(l1_weights, dtype=float)
    if np.any(l1 < 0):
        raise ParameterError("l1 weights must be nonnegative")
    if beta0 is None:
        beta0 = np.zeros(X.shape[1])
    beta, iters, ok = cd_weighted_lasso(X, y, w, l1, np.ascontiguousarray(beta0, dtype=float), tol, max_iter)
    return CdResult(beta, iters, bool(ok))


def cstep(data_star: Dataset, beta: np.ndarray, k_n: int) -> np.ndarray:
    """Indices of the n - k_n smallest squared residuals (ties to low index)."""
    r2 = (data_star.y - data_star.X @ beta) ** 2
    h = data_star.n - k_n
    order = np.argsort(r2, kind="stable")
    return np.sort(order[:h])


def _objective(ys, Xs, beta, H, spec: PenaltySpec, lam_scale: float, pen_cols: np.ndarray) -> float:
    r = ys[H] - Xs[H] @ beta
    return 0.5 * float(r @ r) + lam_scale * penalty_value(beta[pen_cols], spec)


def solve_step1(data: Dataset, proxy: ProxyMatrices, cfg: Step1Config) -> Step1Result:
    n, p = data.n, data.p
    k_n = int(cfg.k_n)
    if k_n < 0 or k_n >= n:
        raise ParameterError("k_n must lie in [0, n-1]")
    if n - k_n < 3:
        raise ParameterError("need n - k_n >= 3")
    h = n - k_n

    star = transform_by_proxy(data, proxy)
    ys, Xs = star.y, star.X
    pen_cols = np.arange(1 if data.intercept else 0, p)
    lam_scale = float(n - k_n)
    spec = cfg.penalty

    def l1_for(beta):
        w = np.zeros(p)
        w[pen_cols] = lam_scale * lla_weights(beta[pen_cols], spec)
        return w

    # first linearization pass = (adaptive) lasso, regardless of family
    l1_first = l1_for(np.zeros(p))

    any_converged = False
    diagnostics = []

    def cd_on(rows, l1w, beta0):
        nonlocal any_converged
        res = penalized_wls_cd(Xs[rows], ys[rows], np.ones(len(rows)), l1w, cfg.cd_tol, cfg.cd_max_iter, beta0)
        any_converged = any_converged or res.converged
        if not res.converged:
            diagnostics.append(f"coordinate descent hit max_iter={cfg.cd_max_iter} on {len(rows)} rows")
        return res.beta

    trace = []

    def concentrate(beta, H, l1w, record=False):
        """Alternate concentration and refit until the subset is stable."""
        for _ in range(cfg.max_csteps):
            H_new = cstep(star, beta, k_n)
            beta = cd_on(H_new, l1w, beta)
            if record:
                trace.append(_objective(ys, Xs, beta, H_new, spec, lam_scale, pen_cols))
            if np.array_equal(H_new, H):
                return beta, H_new
            H = H_new
        return beta, H

    zeros = np.zeros(p)
    if k_n == 0:
        beta = cd_on(np.arange(n), l1_first, zeros)
        H = np.arange(n)
    else:
        rng = np.random.default_rng(cfg.seed)
        candidates = []
        for s_idx in range(cfg.n_starts):
            sub = np.sort(rng.choice(n, size=3, replace=False))
            beta = cd_on(sub, l1_first, zeros)
            H = sub
            for _ in range(2):  # warm concentration steps
                H = cstep(star, beta, k_n)
                beta = cd_on(H, l1_first, beta)
            # rank candidates on the lasso objective of the first pass
            r = ys[H] - Xs[H] @ beta
            obj_l1 = 0.5 * float(r @ r) + float(np.sum(l1_first * np.abs(beta)))
            candidates.append((obj_l1, s_idx, beta, H))
        candidates.sort(key=lambda c: (c[0], c[1]))
        best = None
        for obj_l1, s_idx, beta, H in candidates[: cfg.n_keep]:
            beta, H = concentrate(beta, H, l1_first)
            r = ys[H] - Xs[H] @ beta
            obj_l1 = 0.5 * float(r @ r) + float(np.sum(l1_first * np.abs(beta)))
            if best is None or (obj_l1, s_idx) < (best[0], best[1]):
                best = (obj_l1, s_idx, beta, H)
        _, _, beta, H = best

    if not any_converged:
        raise ConvergenceError("no candidate converged; " + "; ".join(diagnostics[:3]))

    # refine the linearization on the winning subset
    trace.append(_objective(ys, Xs, beta, H, spec, lam_scale, pen_cols))
    for _ in range(cfg.lla_iters):
        l1w = l1_for(beta)
        beta = cd_on(H, l1w, beta)
        if k_n > 0:
            beta, H = concentrate(beta, H, l1w)
        trace.append(_objective(ys, Xs, beta, H, spec, lam_scale, pen_cols))

    objective = _objective(ys, Xs, beta, H, spec, lam_scale, pen_cols)
    msom = np.setdiff1d(np.arange(n), H)
    phi_hat = np.zeros(n)
    phi_hat[msom] = data.y[msom] - data.X[msom] @ beta
    support = np.flatnonzero(beta != 0.0)
    return Step1Result(
        beta_hat=beta,
        support=support,
        msom=msom,
        phi_hat=phi_hat,
        objective=objective,
        objective_trace=trace,
        retained=H,
        converged=any_converged,
    )
