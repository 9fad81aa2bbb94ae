import math

import numpy as np
import pytest
from scipy import stats

from trimreg.exceptions import ParameterError
from trimreg.model import Dataset
from trimreg.pipeline import fit_lasso
from trimreg.tuning import bicr, consistency_factor, grid_search, normal_cdf, normal_pdf, normal_quantile

from conftest import make_instance


def test_normal_quantile_matches_scipy():
    for p in (1e-12, 1e-6, 0.01, 0.2, 0.5, 0.8, 0.975, 0.999, 1 - 1e-9):
        assert normal_quantile(p) == pytest.approx(stats.norm.ppf(p), abs=1e-10)


def test_normal_quantile_roundtrip():
    # rounding cdf(x) to a double near 1 perturbs x by about eps / pdf(x), so
    # the achievable roundtrip accuracy degrades in the upper tail
    for x in np.linspace(-6, 6, 41):
        tol = 1e-11 + np.finfo(float).eps / stats.norm.pdf(x)
        assert normal_quantile(normal_cdf(x)) == pytest.approx(x, abs=tol)


def test_normal_quantile_domain():
    for p in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ParameterError):
            normal_quantile(p)


def oracle_consistency_factor(h, n, grid=4_000_001):
    """High-precision oracle: variance of the central-mass truncated normal by
    direct numerical integration."""
    alpha = h / n
    q = stats.norm.ppf((1 + alpha) / 2)
    x = np.linspace(-q, q, grid)
    dens = stats.norm.pdf(x) / alpha
    return np.trapezoid(x**2 * dens, x)


def test_consistency_factor_reference_values():
    assert consistency_factor(100, 100) == 1.0
    # 1 - 4 q phi(q) with q the 0.75 quantile, and the 90% analogue
    assert consistency_factor(50, 100) == pytest.approx(0.1426518, abs=1e-5)
    assert consistency_factor(90, 100) == pytest.approx(0.6230155, abs=1e-5)


def test_consistency_factor_against_integration_oracle():
    for h, n in ((50, 100), (90, 100), (75, 100), (450, 500)):
        assert consistency_factor(h, n) == pytest.approx(oracle_consistency_factor(h, n), abs=1e-7)


def test_consistency_factor_domain():
    with pytest.raises(ParameterError):
        consistency_factor(0, 10)
    with pytest.raises(ParameterError):
        consistency_factor(11, 10)


def test_bicr_no_trimming_is_classic_bic_shape():
    n, k_p, rss = 80, 3, 42.0
    got = bicr(rss, n, n, k_p, 0)
    expect = -n * math.log(rss / n) - k_p * math.log(n)
    assert got == pytest.approx(expect, rel=1e-12)


def test_bicr_validates_inputs():
    with pytest.raises(ParameterError):
        bicr(-1.0, 90, 100, 2, 10)
    with pytest.raises(ParameterError):
        bicr(10.0, 80, 100, 2, 10)  # h != n - k_n


def test_bicr_rewards_fit_and_penalizes_size():
    base = bicr(50.0, 95, 100, 3, 5)
    better_fit = bicr(40.0, 95, 100, 3, 5)
    bigger_model = bicr(50.0, 95, 100, 6, 5)
    assert better_fit > base > bigger_model


def test_grid_search_brute_force_equivalence(rng):
    X, y, _ = make_instance(rng, 40, 4)
    data = Dataset(y, X)

    def estimator(d, k_n, lam):
        return fit_lasso(d, lam)

    k_grid, l_grid = [0], [0.05, 0.2, 0.8]
    rows, best = grid_search(data, k_grid, l_grid, estimator)
    assert len(rows) == 3
    scored = [(r.bicr, -(r.k_p + r.k_n)) for r in rows if r.error is None]
    assert (best.bicr, -(best.k_p + best.k_n)) == max(scored)


def test_grid_search_records_failures(rng):
    X, y, _ = make_instance(rng, 30, 3)
    data = Dataset(y, X)
    calls = []

    def estimator(d, k_n, lam):
        calls.append(lam)
        if lam > 0.5:
            raise ValueError("boom")
        return fit_lasso(d, lam)

    rows, best = grid_search(data, [0], [0.1, 0.9], estimator)
    errs = [r for r in rows if r.error is not None]
    assert len(errs) == 1 and "boom" in errs[0].error
    assert best.lam == 0.1


def test_grid_search_all_failures_raise(rng):
    X, y, _ = make_instance(rng, 30, 3)
    data = Dataset(y, X)

    def estimator(d, k_n, lam):
        raise ValueError("nope")

    with pytest.raises(ParameterError):
        grid_search(data, [0], [0.1], estimator)


def test_normal_pdf_cdf_basic():
    assert normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert normal_cdf(0.0) == pytest.approx(0.5)
    assert normal_cdf(10.0) == pytest.approx(1.0)
