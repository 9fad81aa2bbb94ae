"""Full estimators: the 3-step weighted procedure, its two-iteration variant
with proxy updates, and the lean heuristic."""

from __future__ import annotations

import numpy as np

from .exceptions import ParameterError, TrimregError
from .linalg import ols_fit
from .model import ADAPTIVE_L1, L1, Dataset, FitResult, OutlierSets, PenaltySpec, ProxyMatrices
from .step1 import Step1Config, solve_step1
from .step2 import build_augmented_design, solve_step2
from .step3 import estimate_single_weight, refit_with_weights
from .tuning import bicr, consistency_factor

# floor for proxy diagonals built from estimated weights (excluded rows keep a
# strictly positive but negligible weight so the proxy stays valid)
_PROXY_EPS = 1e-6

# light per-unit charge in the gamma-stage tuning score; the truncated-normal
# factor already prices the absorption of clean order statistics, so this only
# breaks near-ties toward parsimony
_STEP2_PEN_PER_UNIT = 0.5


class StageError(TrimregError):
    def __init__(self, stage, original):
        self.stage = stage
        self.original = original
        super().__init__(f"{stage}: {original}")


def _step2_lambda_grid(data: Dataset, Xbar: np.ndarray, k_n: int, n_points: int = 20) -> np.ndarray:
    q, _ = np.linalg.qr(Xbar)
    py = data.y - q @ (q.T @ data.y)
    lam_max = 2.0 * float(np.max(np.abs(py))) / max(data.n - k_n, 1)
    if lam_max <= 0:
        lam_max = 1.0
    return np.geomspace(lam_max * 1.001, lam_max * 1e-3, n_points)


def _tune_step2(data, Xbar, proxy, penalty_base, s_phi, k_n, lambdas=None, use_ridge_term=True):
    """Pick the shrinkage level for the gamma stage by an information score on
    the restricted residual quadratic.

    The remaining quadratic is rescaled by the truncated-normal consistency
    factor (absorbing the m largest residuals biases the scale down exactly as
    hard trimming does) and loses one degree of freedom per nonzero gamma; a
    heavy per-unit charge such as log n would put the detection threshold near
    2.5 residual standard deviations, leaving moderate variance inflations
    systematically undetected.
    """
    if lambdas is None:
        lambdas = _step2_lambda_grid(data, Xbar, k_n)
    q, _ = np.linalg.qr(Xbar)
    n_free = data.n - len(s_phi)
    k_cols = Xbar.shape[1]
    best = None
    for lam in lambdas:
        res = solve_step2(data, Xbar, proxy, penalty_base.with_lambda(float(lam)),
                          s_phi=s_phi, k_n=k_n, use_ridge_term=use_ridge_term)
        m = res.viom.size
        if m > max(n_free - k_cols - 2, 0):
            continue  # saturated fit
        r = data.y - res.gamma_hat
        pr = r - q @ (q.T @ r)
        quad = float(r @ pr)
        # each nonzero gamma spends a degree of freedom, and absorbing the m
        # largest residuals biases the remaining scale down exactly as hard
        # trimming does, so the truncated-normal factor rescales it; without
        # both corrections the score rewards absorbing clean residuals at tiny
        # shrinkage levels
        dof = max(n_free - k_cols - m, 1)
        corr = consistency_factor(max(n_free - m, 1), n_free)
        score = n_free * np.log(max(quad, 1e-300) / (corr * dof)) + m * _STEP2_PEN_PER_UNIT
        if best is None or score < best[0]:
            best = (score, float(lam), res)
    if best is None:
        raise ParameterError("no admissible shrinkage level for the gamma stage")
    return best[2], best[1]


def _weights_from_viom(data, Xbar, viom, msom):
    """Independent per-unit restricted-likelihood weights, with de-flagging of
    units whose estimated inflation is zero."""
    n = data.n
    weights = np.ones(n)
    weights[np.asarray(msom, dtype=int)] = 0.0
    omega = np.zeros(n)
    kept = []
    for i in viom:
        om, w_i = estimate_single_weight(Xbar, data.y, int(i))
        if om <= 0.0:
            continue  # de-flagged: back to the clean set with full weight
        omega[i] = om
        weights[i] = w_i
        kept.append(int(i))
    return weights, omega, np.asarray(kept, dtype=int)


def fit_scadws(
    data: Dataset,
    cfg1: Step1Config,
    step2_penalty: PenaltySpec | None = None,
    proxies: ProxyMatrices | None = None,
    step2_lambdas=None,
) -> FitResult:
    """Three stages: trimmed sparse selection, gamma detection on the
    augmented design, per-unit weight estimation and weighted refit."""
    n = data.n
    if proxies is None:
        proxies = ProxyMatrices.default(n)
    if step2_penalty is None:
        step2_penalty = PenaltySpec(cfg1.penalty.family if cfg1.penalty.family != ADAPTIVE_L1 else L1,
                                    cfg1.penalty.lam, cfg1.penalty.a)

    try:
        s1 = solve_step1(data, proxies, cfg1)
    except TrimregError as exc:
        raise StageError("step1", exc) from exc
    try:
        Xbar = build_augmented_design(data, s1.support, s1.msom)
        s2, lam2 = _tune_step2(data, Xbar, proxies, step2_penalty, s1.msom, cfg1.k_n,
                               lambdas=step2_lambdas)
    except TrimregError as exc:
        raise StageError("step2", exc) from exc
    try:
        weights, omega, viom = _weights_from_viom(data, Xbar, s2.viom, s1.msom)
        refit = refit_with_weights(data, s1.support, s1.msom, weights)
    except TrimregError as exc:
        raise StageError("step3", exc) from exc

    gamma_hat = np.zeros(n)
    gamma_hat[viom] = s2.gamma_hat[viom]
    refit.outliers = OutlierSets(msom=s1.msom, viom=viom, phi_hat=s1.phi_hat, gamma_hat=gamma_hat)
    refit.k_n = cfg1.k_n
    refit.omega_hat = omega
    refit.objective_trace = list(s1.objective_trace) + list(s2.objective_trace)
    refit.tuning = {
        "lambda_step1": cfg1.penalty.lam,
        "lambda_step2": lam2,
        "penalty_family": cfg1.penalty.family,
        "a": cfg1.penalty.a,
        "n_starts": cfg1.n_starts,
        "seed": cfg1.seed,
        "step1_objective": s1.objective,
    }
    return refit


def updated_proxies(n: int, weights: np.ndarray, omega: np.ndarray, viom) -> ProxyMatrices:
    """Proxy refresh from estimated weights: row weights become the precision
    weights; inflation proxies take the estimated per-unit inflations.

    Zero-weight (excluded) rows keep full weight: exclusion is the trimming
    stage's job, and a near-zero row weight would hide those rows from it.
    The log(n) factor of the initial proxy is retained so that a shrinkage
    level tuned under the initial proxy keeps its meaning on the next pass.
    """
    s = max(np.log(n), 1.0)
    m_r = s * np.where(weights > 0, np.maximum(weights, _PROXY_EPS), 1.0)
    m_gamma = np.full(n, max(np.log(n), 1.0))
    viom = np.asarray(viom, dtype=int)
    for i in viom:
        if omega[i] > 0:
            m_gamma[i] = omega[i]
    return ProxyMatrices(m_r, m_gamma)


def fit_scad2s(data: Dataset, cfg1: Step1Config, step2_penalty: PenaltySpec | None = None,
               proxies: ProxyMatrices | None = None) -> FitResult:
    """Two passes of the 3-step procedure; the second pass runs with proxy
    matrices rebuilt from the first pass's estimated weights."""
    first = fit_scadws(data, cfg1, step2_penalty, proxies)
    prox2 = updated_proxies(data.n, first.weights, first.omega_hat, first.outliers.viom)
    second = fit_scadws(data, cfg1, step2_penalty, prox2)
    second.proxy_update = {
        "rule": ("m_r <- log(n) * w_hat on down-weighted units (floored at 1e-6),"
                 " log(n) on excluded and clean units;"
                 " m_gamma <- omega_hat on detected units, log(n) elsewhere"),
        "m_r": prox2.m_r.tolist(),
        "m_gamma": prox2.m_gamma.tolist(),
        "first_iteration": first.to_dict(),
    }
    second.objective_trace = list(first.objective_trace) + list(second.objective_trace)
    return second


def fit_heur(data: Dataset, cfg1: Step1Config, step2_lambdas=None) -> FitResult:
    """Two-stage shortcut: trimmed selection with identity proxy, then an
    adaptive-lasso gamma fit on the retained rows with unpenalized
    coefficients, then weights and a weighted refit."""
    n = data.n
    proxies = ProxyMatrices.identity(n)
    try:
        s1 = solve_step1(data, proxies, cfg1)
    except TrimregError as exc:
        raise StageError("step1", exc) from exc

    keep = s1.retained
    sub = Dataset(data.y[keep], data.X[np.ix_(keep, s1.support)], intercept=False)
    try:
        ols = ols_fit(sub.X, sub.y)
        aw = 1.0 / (np.abs(ols.residuals) + 1e-6)
        pen = PenaltySpec(ADAPTIVE_L1, 1.0, adaptive_weights=aw)
        prox_sub = ProxyMatrices.identity(sub.n)
        s2, lam2 = _tune_step2(sub, sub.X, prox_sub, pen, s_phi=np.array([], dtype=int),
                               k_n=0, lambdas=step2_lambdas, use_ridge_term=False)
    except TrimregError as exc:
        raise StageError("step2", exc) from exc

    viom_local = s2.viom
    try:
        weights = np.ones(n)
        weights[s1.msom] = 0.0
        omega = np.zeros(n)
        kept = []
        for i_local in viom_local:
            i = int(keep[i_local])
            om, w_i = estimate_single_weight(sub.X, sub.y, int(i_local))
            if om <= 0.0:
                continue
            omega[i] = om
            weights[i] = w_i
            kept.append(i)
        viom = np.asarray(sorted(kept), dtype=int)
        refit = refit_with_weights(data, s1.support, s1.msom, weights)
    except TrimregError as exc:
        raise StageError("step3", exc) from exc

    gamma_hat = np.zeros(n)
    gamma_hat[keep] = s2.gamma_hat
    mask = np.zeros(n, dtype=bool)
    mask[viom] = True
    gamma_hat[~mask] = 0.0
    refit.outliers = OutlierSets(msom=s1.msom, viom=viom, phi_hat=s1.phi_hat, gamma_hat=gamma_hat)
    refit.k_n = cfg1.k_n
    refit.omega_hat = omega
    refit.objective_trace = list(s1.objective_trace) + list(s2.objective_trace)
    refit.tuning = {
        "method": "heur",
        "lambda_step1": cfg1.penalty.lam,
        "lambda_step2": lam2,
        "seed": cfg1.seed,
    }
    return refit


def fit_lasso(data: Dataset, lam: float, seed: int = 0, family: str = L1) -> FitResult:
    """Plain penalized fit: no trimming, identity proxy."""
    cfg = Step1Config(k_n=0, penalty=PenaltySpec(family, lam), seed=seed)
    s1 = solve_step1(data, ProxyMatrices.identity(data.n), cfg)
    return _result_from_step1(data, s1)


def fit_sparselts(data: Dataset, k_n: int, lam: float, seed: int = 0,
                  n_starts: int = 500) -> FitResult:
    """Trimmed L1 fit (binary weights), a special case of the stage-1 solver."""
    cfg = Step1Config(k_n=k_n, penalty=PenaltySpec(L1, lam), seed=seed, n_starts=n_starts)
    s1 = solve_step1(data, ProxyMatrices.identity(data.n), cfg)
    return _result_from_step1(data, s1)


def _result_from_step1(data: Dataset, s1) -> FitResult:
    n = data.n
    weights = np.ones(n)
    weights[s1.msom] = 0.0
    e = data.y - data.X @ s1.beta_hat
    h = n - s1.msom.size
    dof = max(h - s1.support.size, 1)
    sigma2 = float(np.sum(e[s1.retained] ** 2)) / dof
    outliers = OutlierSets(msom=s1.msom, viom=np.array([], dtype=int),
                           phi_hat=s1.phi_hat, gamma_hat=np.zeros(n))
    return FitResult(
        beta_hat=s1.beta_hat,
        support=s1.support,
        outliers=outliers,
        weights=weights,
        sigma2_hat=sigma2,
        objective_trace=list(s1.objective_trace),
        k_n=int(s1.msom.size),
        tuning={"lambda_step1": None},
        omega_hat=np.zeros(n),
    )


def default_lambda_grid(data: Dataset, k_n: int, n_points: int = 10,
                        decades: float = 2.0) -> np.ndarray:
    """Log-spaced shrinkage grid below the null threshold of the lasso pass."""
    y_c = data.y - data.y.mean() if data.intercept else data.y
    cols = np.arange(1 if data.intercept else 0, data.p)
    lam_max = float(np.max(np.abs(data.X[:, cols].T @ y_c))) / max(data.n - k_n, 1)
    if lam_max <= 0:
        lam_max = 1.0
    return np.geomspace(lam_max, lam_max * 10.0**-decades, n_points)


def tune_lambda_step1(data: Dataset, cfg_base: Step1Config, proxies: ProxyMatrices | None = None,
                      lambdas=None) -> tuple[float, list]:
    """Select the stage-1 shrinkage by the robust criterion, running only the
    trimmed-selection stage per grid point."""
    from dataclasses import replace

    if proxies is None:
        proxies = ProxyMatrices.default(data.n)
    if lambdas is None:
        lambdas = default_lambda_grid(data, cfg_base.k_n)
    table = []
    best = None
    for lam in lambdas:
        cfg = replace(cfg_base, penalty=cfg_base.penalty.with_lambda(float(lam)))
        try:
            s1 = solve_step1(data, proxies, cfg)
        except TrimregError as exc:
            table.append({"lambda": float(lam), "error": str(exc)})
            continue
        e = data.y - data.X @ s1.beta_hat
        rss = float(np.sum(e[s1.retained] ** 2))
        k_p = int(s1.support.size)
        h = data.n - cfg.k_n
        crit = bicr(rss, h, data.n, k_p, cfg.k_n) if rss > 0 else -np.inf
        table.append({"lambda": float(lam), "k_p": k_p, "bicr": crit})
        if best is None or crit > best[0] or (crit == best[0] and k_p < best[2]):
            best = (crit, float(lam), k_p)
    if best is None:
        raise ParameterError("stage-1 tuning failed at every grid point")
    return best[1], table


def fit_opt(data: Dataset, true_weights: np.ndarray, true_support=None) -> FitResult:
    """Oracle benchmark: weighted least squares with the true population
    weights (and, when given, the true active set)."""
    w = np.asarray(true_weights, dtype=float)
    s_beta = np.arange(data.p) if true_support is None else np.asarray(true_support, dtype=int)
    s_phi = np.flatnonzero(w == 0)
    return refit_with_weights(data, s_beta, s_phi, w)


def fit_scadopt(data: Dataset, cfg1: Step1Config, true_weights: np.ndarray,
                step2_penalty: PenaltySpec | None = None) -> FitResult:
    """Same 3-step procedure but with proxies built from the true weights."""
    w = np.asarray(true_weights, dtype=float)
    n = data.n
    s = max(np.log(n), 1.0)
    m_r = s * np.where(w > 0, np.maximum(w, _PROXY_EPS), 1.0)
    m_gamma = np.full(n, s)
    inflate = (w > 0) & (w < 1)
    m_gamma[inflate] = 1.0 / w[inflate] - 1.0
    return fit_scadws(data, cfg1, step2_penalty, ProxyMatrices(m_r, m_gamma))
