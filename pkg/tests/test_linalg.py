import numpy as np
import pytest

from trimreg.exceptions import ParameterError, RankDeficiencyError
from trimreg.linalg import (
    deletion_residuals,
    hat_diagonals,
    hat_diagonals_of,
    ols_fit,
    projection_residual_quadratic,
    single_weight_downdate,
    wls_fit,
)

from conftest import make_instance


def normal_equations_wls(X, y, w):
    """Oracle: weighted normal equations solved densely."""
    W = np.diag(w)
    return np.linalg.solve(X.T @ W @ X, X.T @ W @ y)


def test_wls_matches_normal_equations(rng):
    for _ in range(30):
        n = int(rng.integers(8, 40))
        p = int(rng.integers(1, min(n - 2, 8)))
        X, y, _ = make_instance(rng, n, p, intercept=False)
        w = rng.uniform(0.1, 2.0, n)
        fit = wls_fit(X, y, w)
        oracle = normal_equations_wls(X, y, w)
        assert np.allclose(fit.beta, oracle, atol=1e-10)


def test_wls_zero_weight_rows_are_dropped(rng):
    X, y, _ = make_instance(rng, 25, 3)
    w = np.ones(25)
    w[:5] = 0.0
    fit = wls_fit(X, y, w)
    sub = ols_fit(X[5:], y[5:])
    assert np.allclose(fit.beta, sub.beta, atol=1e-12)
    assert np.array_equal(fit.rows, np.arange(5, 25))


def test_wls_sigma2_unweighted_case(rng):
    X, y, _ = make_instance(rng, 30, 4)
    fit = ols_fit(X, y)
    e = y - X @ fit.beta
    assert fit.sigma2 == pytest.approx(float(e @ e) / (30 - 4), rel=1e-12)


def test_wls_negative_weight_rejected(rng):
    X, y, _ = make_instance(rng, 10, 2)
    w = np.ones(10)
    w[3] = -0.5
    with pytest.raises(ParameterError):
        wls_fit(X, y, w)


def test_rank_deficiency_names_columns(rng):
    X, y, _ = make_instance(rng, 20, 3)
    Xd = np.hstack([X, X[:, [1]]])
    with pytest.raises(RankDeficiencyError) as exc:
        ols_fit(Xd, y)
    assert len(exc.value.columns) >= 1


def test_hat_diagonals_match_dense_projector(rng):
    for _ in range(10):
        n = int(rng.integers(6, 30))
        p = int(rng.integers(1, min(n - 1, 6)))
        X = rng.standard_normal((n, p))
        H = X @ np.linalg.solve(X.T @ X, X.T)
        assert np.allclose(hat_diagonals_of(X), np.diag(H), atol=1e-10)
        fit = ols_fit(X, rng.standard_normal(n))
        assert np.allclose(hat_diagonals(fit), np.diag(H), atol=1e-10)


def test_single_weight_downdate_matches_dense_wls(rng):
    # 100 random (instance, unit, weight) triples against the full refit
    for _ in range(100):
        n = int(rng.integers(10, 40))
        p = int(rng.integers(1, 6))
        X, y, _ = make_instance(rng, n, p, intercept=False)
        i = int(rng.integers(0, n))
        w_i = float(rng.uniform(0.05, 1.0))
        fit = ols_fit(X, y)
        got = single_weight_downdate(fit, X, i, w_i)
        w = np.ones(n)
        w[i] = w_i
        oracle = normal_equations_wls(X, y, w)
        assert np.allclose(got, oracle, atol=1e-10)


def test_single_weight_downdate_full_weight_is_identity(rng):
    X, y, _ = make_instance(rng, 15, 3)
    fit = ols_fit(X, y)
    assert np.allclose(single_weight_downdate(fit, X, 4, 1.0), fit.beta, atol=1e-14)


def test_single_weight_downdate_rejects_bad_weight(rng):
    X, y, _ = make_instance(rng, 15, 3)
    fit = ols_fit(X, y)
    with pytest.raises(ParameterError):
        single_weight_downdate(fit, X, 0, 0.0)
    with pytest.raises(ParameterError):
        single_weight_downdate(fit, X, 0, 1.5)


def test_deletion_residuals_match_leave_one_out(rng):
    n, p = 25, 3
    X, y, _ = make_instance(rng, n, p, intercept=False)
    t = deletion_residuals(X, y)
    for i in range(n):
        mask = np.ones(n, dtype=bool)
        mask[i] = False
        fit = ols_fit(X[mask], y[mask])
        pred = X[i] @ fit.beta
        h = float(X[i] @ np.linalg.solve(X[mask].T @ X[mask], X[i]))
        t_oracle = (y[i] - pred) / np.sqrt(fit.sigma2 * (1.0 + h))
        assert t[i] == pytest.approx(t_oracle, abs=1e-8)


def test_projection_residual_quadratic(rng):
    X = rng.standard_normal((20, 4))
    v = rng.standard_normal(20)
    P = np.eye(20) - X @ np.linalg.solve(X.T @ X, X.T)
    assert projection_residual_quadratic(X, v) == pytest.approx(float(v @ P @ v), abs=1e-9)
