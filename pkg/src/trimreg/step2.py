"""Variance-inflation outlier detection via sparse estimation of the random
shift vector on the augmented design.

The quadratic form uses the projector onto the orthogonal complement of the
augmented design's column space, applied implicitly through its QR factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends import cd_gamma
from .exceptions import ParameterError, RankDeficiencyError
from .linalg import RANK_TOL
from .model import Dataset, PenaltySpec, ProxyMatrices
from .penalty import lla_weights, penalty_value


def build_augmented_design(data: Dataset, s_beta, s_phi) -> np.ndarray:
    """Selected feature columns followed by one unit dummy per mean-shift
    outlier index."""
    s_beta = np.asarray(s_beta, dtype=int)
    s_phi = np.asarray(s_phi, dtype=int)
    n = data.n
    D = np.zeros((n, s_phi.size))
    D[s_phi, np.arange(s_phi.size)] = 1.0
    Xbar = np.hstack([data.X[:, s_beta], D])
    if n - s_phi.size < s_beta.size:
        raise ParameterError("too few retained rows for the selected features")
    q, r = np.linalg.qr(Xbar)
    diag = np.abs(np.diag(r))
    bad = np.flatnonzero(diag < RANK_TOL * max(diag.max(), 1e-300)) if diag.size else np.array([])
    if bad.size:
        raise RankDeficiencyError(bad, "augmented design is rank deficient; consider reducing the feature set")
    return Xbar


@dataclass
class Step2Result:
    gamma_hat: np.ndarray
    viom: np.ndarray
    objective_trace: list
    converged: bool


def _objective(y, gamma, Q, inv_mg, spec, lam_scale, free):
    r = y - gamma
    pr = r - Q @ (Q.T @ r)
    quad = float(r @ pr)
    ridge = float(np.sum(gamma**2 * inv_mg))
    return quad + ridge + lam_scale * penalty_value(gamma[free], spec)


def solve_step2(
    data: Dataset,
    Xbar: np.ndarray,
    proxy: ProxyMatrices,
    penalty: PenaltySpec,
    s_phi=(),
    k_n: int | None = None,
    tol: float = 1e-9,
    max_iter: int = 10000,
    lla_iters: int = 2,
    use_ridge_term: bool = True,
) -> Step2Result:
    """Minimize the penalized restricted posterior criterion in gamma.

    Units listed in ``s_phi`` (already excluded as mean-shift outliers) are
    forced to gamma = 0 and receive no penalty. ``use_ridge_term=False`` drops
    the proxy-covariance quadratic term (used by the heuristic variant).
    """
    y = data.y
    n = data.n
    s_phi = np.asarray(s_phi, dtype=int)
    if k_n is None:
        k_n = s_phi.size
    lam_scale = float(n - k_n)

    q, r = np.linalg.qr(Xbar)
    p_diag = np.clip(1.0 - np.sum(q**2, axis=1), 0.0, 1.0)
    inv_mg = 1.0 / proxy.m_gamma if use_ridge_term else np.zeros(n)
    free = np.ones(n, dtype=bool)
    free[s_phi] = False
    if np.any((p_diag[free] + inv_mg[free]) <= 0):
        raise ParameterError("nonpositive curvature for a free coordinate")

    Q = np.ascontiguousarray(q)
    gamma = np.zeros(n)
    trace = []
    converged = True
    # first linearization pass is an (adaptive) lasso in gamma
    for it in range(1 + lla_iters):
        w = lla_weights(gamma, penalty)
        pen = np.where(free, lam_scale * w, 0.0)
        gamma, iters, ok = cd_gamma(
            np.ascontiguousarray(y), Q, np.ascontiguousarray(p_diag),
            np.ascontiguousarray(inv_mg), np.ascontiguousarray(pen),
            np.ascontiguousarray(free), np.ascontiguousarray(gamma), tol, max_iter,
        )
        converged = converged and bool(ok)
        trace.append(_objective(y, gamma, Q, inv_mg, penalty, lam_scale, free))
        if penalty.family == "l1":
            break
    viom = np.flatnonzero(gamma != 0.0)
    return Step2Result(gamma_hat=gamma, viom=viom, objective_trace=trace, converged=converged)
