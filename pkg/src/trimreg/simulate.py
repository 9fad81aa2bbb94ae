"""Synthetic data generation, performance metrics, and the Monte Carlo
benchmark harness."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .exceptions import ParameterError
from .linalg import ols_fit
from .model import SCAD, Dataset, FitResult, OutlierSets, PenaltySpec
from .pipeline import (
    fit_heur,
    fit_lasso,
    fit_opt,
    fit_scad2s,
    fit_scadopt,
    fit_scadws,
    fit_sparselts,
    default_lambda_grid,
    tune_lambda_step1,
)
from .step1 import Step1Config
from .model import ProxyMatrices

KNOWN_ESTIMATORS = ("ols", "lasso", "sparselts", "heur", "scadws", "scad2s", "scadopt", "opt")


@dataclass(frozen=True)
class Scenario:
    """Full parameterization of one Monte Carlo experiment."""

    n: int
    p: int
    p0: int
    snr: float = 3.0
    beta_active: float = 2.0
    mv_frac: float = 0.0
    mm_frac: float = 0.0
    v: float = 10.0
    mu_eps: float = 0.0
    mu_x: float = 0.0
    replications: int = 100
    seed: int = 0
    scenario_id: int = 0
    name: str = "scenario"

    def __post_init__(self):
        if self.mv_frac + self.mm_frac >= 1:
            raise ParameterError("contamination fractions must sum below 1")
        if self.p0 > self.p:
            raise ParameterError("p0 must not exceed p")
        if self.mv_frac > 0 and self.v <= 1:
            raise ParameterError("inflation factor v must exceed 1")

    @property
    def beta(self) -> np.ndarray:
        b = np.zeros(self.p)
        b[: self.p0] = self.beta_active
        return b

    @property
    def sigma2(self) -> float:
        # population variance of the signal over unit-variance independent
        # features; the intercept carries no variance
        return float(np.sum(self.beta[1:] ** 2)) / self.snr

    @classmethod
    def from_file(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls(**json.load(fh))


@dataclass
class Truth:
    beta: np.ndarray
    sigma2: float
    outliers: OutlierSets
    weights: np.ndarray
    support: np.ndarray


def generate(sc: Scenario, replicate: int, n: int | None = None) -> tuple[Dataset, Truth]:
    """One replicate; the stream is a pure function of (seed, scenario, n,
    replicate)."""
    if n is None:
        n = sc.n
    rng = np.random.default_rng(np.random.SeedSequence([sc.seed, sc.scenario_id, n, replicate]))
    p = sc.p
    X = np.hstack([np.ones((n, 1)), rng.standard_normal((n, p - 1))])
    beta = sc.beta
    sigma2 = sc.sigma2
    eps = rng.normal(0.0, np.sqrt(sigma2), n)
    m_v = int(np.floor(sc.mv_frac * n))
    m_m = int(np.floor(sc.mm_frac * n))
    both = rng.choice(n, size=m_v + m_m, replace=False)
    viom = np.sort(both[:m_v])
    msom = np.sort(both[m_v:])
    if m_v:
        eps[viom] = rng.normal(0.0, np.sqrt(sigma2 * sc.v), m_v)
    active_slopes = np.arange(1, sc.p0)
    if m_m:
        eps[msom] += sc.mu_eps
    y = X @ beta + eps
    # the observed design is corrupted after the response is formed, so the
    # shifted rows are bad leverage points (inconsistent with the true slopes)
    if m_m and active_slopes.size:
        X[np.ix_(msom, active_slopes)] += sc.mu_x
    weights = np.ones(n)
    weights[viom] = 1.0 / sc.v
    weights[msom] = 0.0
    phi = np.zeros(n)
    phi[msom] = sc.mu_eps
    gamma = np.zeros(n)
    gamma[viom] = eps[viom]
    truth = Truth(
        beta=beta,
        sigma2=sigma2,
        outliers=OutlierSets(msom=msom, viom=viom, phi_hat=phi, gamma_hat=gamma),
        weights=weights,
        support=np.flatnonzero(beta != 0.0),
    )
    return Dataset(y, X, intercept=True), truth


def mse_decomposition(estimates: np.ndarray, truth: np.ndarray) -> dict:
    """Per-coefficient mean squared error split into variance and squared
    bias, plus across-coefficient averages."""
    est = np.asarray(estimates, dtype=float)
    tr = np.asarray(truth, dtype=float)
    if est.ndim == 1:
        est = est[:, None]
    if est.shape[0] < 2:
        raise ParameterError("need at least two replicates")
    mean = est.mean(axis=0)
    mse = np.mean((est - tr) ** 2, axis=0)
    var = np.mean((est - mean) ** 2, axis=0)
    bias2 = (mean - tr) ** 2
    return {
        "mse": mse,
        "variance": var,
        "bias2": bias2,
        "mse_avg": float(mse.mean()),
        "variance_avg": float(var.mean()),
        "bias2_avg": float(bias2.mean()),
    }


def _rates(detected, true_set, total: int):
    detected = set(int(i) for i in detected)
    true_set = set(int(i) for i in true_set)
    clean = total - len(true_set)
    fpr = len(detected - true_set) / clean if clean > 0 else None
    fnr = len(true_set - detected) / len(true_set) if true_set else None
    return fpr, fnr


def outlier_rates(detected, true_outliers, n: int):
    """FPR/FNR over units; ``None`` when a denominator is empty."""
    return _rates(detected, true_outliers, n)


def selection_rates(s_beta_hat, s_beta_true, p: int):
    """FPR/FNR over coefficients."""
    return _rates(s_beta_hat, s_beta_true, p)


def prediction_errors(y_test, y_pred, trim_frac: float = 0.10):
    """Mean absolute error and trimmed mean squared error (largest squared
    errors discarded)."""
    err = np.asarray(y_test, dtype=float) - np.asarray(y_pred, dtype=float)
    if not (0 <= trim_frac < 1):
        raise ParameterError("trim_frac must lie in [0, 1)")
    mape = float(np.mean(np.abs(err)))
    sq = np.sort(err**2)
    drop = int(np.ceil(trim_frac * sq.size))
    kept = sq[: sq.size - drop] if drop else sq
    tmspe = float(np.mean(kept)) if kept.size else 0.0
    return mape, tmspe


def _fit_estimator(name: str, data: Dataset, truth: Truth, sc: Scenario, n: int,
                   rep: int, n_starts: int, lambda_grid_size: int) -> FitResult:
    k_n = int(np.floor(sc.mm_frac * n))
    seed = int(np.random.SeedSequence([sc.seed, sc.scenario_id, n, rep, 1]).generate_state(1)[0] % 2**31)
    base = Step1Config(k_n=k_n, penalty=PenaltySpec(SCAD, 0.1), n_starts=n_starts, seed=seed)

    if name == "ols":
        fit = ols_fit(data.X, data.y)
        outliers = OutlierSets(np.array([], int), np.array([], int), np.zeros(n), np.zeros(n))
        return FitResult(fit.beta, np.arange(data.p), outliers, np.ones(n), fit.sigma2)
    if name == "opt":
        return fit_opt(data, truth.weights, truth.support if sc.p0 < sc.p else None)

    def grid(k):
        return default_lambda_grid(data, k, n_points=lambda_grid_size)

    if name == "lasso":
        cfg = replace(base, k_n=0, penalty=PenaltySpec("l1", 0.1))
        lam, _ = tune_lambda_step1(data, cfg, ProxyMatrices.identity(n), lambdas=grid(0))
        return fit_lasso(data, lam, seed=seed)
    if name == "sparselts":
        cfg = replace(base, penalty=PenaltySpec("l1", 0.1))
        lam, _ = tune_lambda_step1(data, cfg, ProxyMatrices.identity(n), lambdas=grid(k_n))
        return fit_sparselts(data, k_n, lam, seed=seed, n_starts=n_starts)
    if name == "heur":
        lam, _ = tune_lambda_step1(data, base, ProxyMatrices.identity(n), lambdas=grid(k_n))
        return fit_heur(data, replace(base, penalty=base.penalty.with_lambda(lam)))
    if name in ("scadws", "scad2s", "scadopt"):
        proxies = ProxyMatrices.default(n)
        lam, _ = tune_lambda_step1(data, base, proxies, lambdas=grid(k_n))
        cfg = replace(base, penalty=base.penalty.with_lambda(lam))
        if name == "scadws":
            return fit_scadws(data, cfg, proxies=proxies)
        if name == "scad2s":
            return fit_scad2s(data, cfg, proxies=proxies)
        return fit_scadopt(data, cfg, truth.weights)
    raise ParameterError(f"unknown estimator {name!r}")


def _one_replicate(args):
    sc_dict, n, rep, estimators, n_starts, lambda_grid_size = args
    sc = Scenario(**sc_dict)
    data, truth = generate(sc, rep, n=n)
    out = {}
    for name in estimators:
        try:
            fit = _fit_estimator(name, data, truth, sc, n, rep, n_starts, lambda_grid_size)
            tau_hat = np.union1d(fit.outliers.msom, fit.outliers.viom)
            tau_true = np.union1d(truth.outliers.msom, truth.outliers.viom)
            o_fpr, o_fnr = outlier_rates(tau_hat, tau_true, n)
            s_fpr, s_fnr = selection_rates(fit.support, truth.support, sc.p)
            out[name] = {
                "beta_hat": fit.beta_hat.tolist(),
                "sigma2_hat": fit.sigma2_hat,
                "outlier_fpr": o_fpr,
                "outlier_fnr": o_fnr,
                "selection_fpr": s_fpr,
                "selection_fnr": s_fnr,
                "msom_hat": fit.outliers.msom.tolist(),
                "viom_hat": fit.outliers.viom.tolist(),
                "msom_captured": bool(set(truth.outliers.msom.tolist())
                                      <= set(fit.outliers.msom.tolist())),
            }
        except Exception as exc:
            out[name] = {"error": f"{type(exc).__name__}: {exc}"}
    return (n, rep, out)


def run_scenario(sc: Scenario, estimators, n_grid=None, reps: int | None = None,
                 jobs: int = 1, n_starts: int = 200, lambda_grid_size: int = 10):
    """Run the replicated experiment and aggregate metrics.

    Returns ``(rows, manifest)``: one row per estimator and sample size with
    averaged MSE splits and detection/selection rates. Failed replicates are
    excluded and counted.
    """
    for name in estimators:
        if name not in KNOWN_ESTIMATORS:
            raise ParameterError(f"unknown estimator {name!r}")
    if n_grid is None:
        n_grid = [sc.n]
    reps = sc.replications if reps is None else int(reps)
    tasks = [(asdict(sc), int(n), rep, tuple(estimators), n_starts, lambda_grid_size)
             for n in n_grid for rep in range(reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_one_replicate, tasks))
    else:
        results = [_one_replicate(t) for t in tasks]
    results.sort(key=lambda r: (r[0], r[1]))

    rows = []
    for n in sorted(set(int(v) for v in n_grid)):
        per_est = {name: [] for name in estimators}
        for rn, rep, out in results:
            if rn == n:
                for name in estimators:
                    per_est[name].append(out[name])
        for name in estimators:
            recs = per_est[name]
            good = [r for r in recs if "error" not in r]
            row = {"estimator": name, "n": n, "replicates": len(recs), "failed": len(recs) - len(good)}
            if len(good) >= 2:
                betas = np.array([r["beta_hat"] for r in good])
                dec = mse_decomposition(betas, sc.beta)
                row.update(
                    mse_beta=dec["mse_avg"], var_beta=dec["variance_avg"], bias2_beta=dec["bias2_avg"],
                )
                s2 = np.array([[r["sigma2_hat"]] for r in good])
                dec2 = mse_decomposition(s2, np.array([sc.sigma2]))
                row.update(
                    mse_s2=dec2["mse_avg"], var_s2=dec2["variance_avg"], bias2_s2=dec2["bias2_avg"],
                )
                for key in ("outlier_fpr", "outlier_fnr", "selection_fpr", "selection_fnr"):
                    vals = [r[key] for r in good if r[key] is not None]
                    row[key] = float(np.mean(vals)) if vals else None
                row["msom_capture"] = float(np.mean([r["msom_captured"] for r in good]))
            rows.append(row)
    manifest = {
        "scenario": asdict(sc),
        "n_grid": [int(v) for v in n_grid],
        "reps": reps,
        "estimators": list(estimators),
        "n_starts": n_starts,
        "lambda_grid_size": lambda_grid_size,
    }
    return rows, manifest
