"""Model selection: robust information criterion over trimming and shrinkage
grids, plus the Gaussian special functions it needs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# rational approximation coefficients (Acklam) for the inverse normal CDF
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


def normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF: rational approximation refined by one
    Halley step against the erfc-based CDF."""
    if not (0.0 < p < 1.0):
        raise ParameterError("p must lie in (0, 1)")
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    # Halley refinement; evaluate the CDF difference in whichever tail avoids
    # cancellation (1 - p is exact in floating point for p >= 0.5)
    for _ in range(2):
        if p <= 0.5:
            e = 0.5 * math.erfc(-x / _SQRT2) - p
        else:
            e = (1.0 - p) - 0.5 * math.erfc(x / _SQRT2)
        u = e * _SQRT_2PI * math.exp(0.5 * x * x)
        x -= u / (1.0 + 0.5 * x * u)
    return x


def consistency_factor(h: int, n: int) -> float:
    """Variance of the standard normal truncated to its central h/n mass.

    Rescales a trimmed residual sum of squares to a consistent variance
    estimate; equals 1 for no trimming.
    """
    if not (1 <= h <= n):
        raise ParameterError("need 1 <= h <= n")
    if h == n:
        return 1.0
    q = normal_quantile((n + h) / (2.0 * n))
    return 1.0 - (2.0 * n / h) * q * normal_pdf(q)


def bicr(rss_h: float, h: int, n: int, k_p: int, k_n: int) -> float:
    """Robust information criterion; larger is better.

    The fit term rescales the trimmed residual sum of squares by the
    truncated-normal consistency factor; the penalty counts selected features
    plus trimmed units.
    """
    if rss_h <= 0:
        raise ParameterError("rss must be positive (degenerate fit)")
    if h != n - k_n:
        raise ParameterError("h must equal n - k_n")
    return -n * math.log(rss_h / (consistency_factor(h, n) * h)) - (k_p + k_n) * math.log(n)


@dataclass
class GridRow:
    k_n: int
    lam: float
    k_p: int
    bicr: float
    sigma2_hat: float
    n_viom: int
    fit: object = None
    error: str | None = None


def grid_search(data, k_n_grid, lambda_grid, estimator) -> tuple[list[GridRow], GridRow]:
    """Evaluate ``estimator(data, k_n, lam) -> FitResult`` on a grid and rank
    by the robust criterion (ties toward fewer parameters).

    Per-point failures are recorded in the table; the search fails only if no
    point succeeds.
    """
    k_n_grid = list(k_n_grid)
    lambda_grid = list(lambda_grid)
    if not k_n_grid or not lambda_grid:
        raise ParameterError("grids must be nonempty")
    rows = []
    for k_n in sorted(set(int(k) for k in k_n_grid)):
        for lam in sorted(set(float(l) for l in lambda_grid)):
            try:
                fit = estimator(data, k_n, lam)
                h = data.n - k_n
                keep = fit.weights > 0
                e = data.y - data.X @ fit.beta_hat
                rss = float(np.sum(e[keep] ** 2))
                k_p = int(fit.support.size)
                crit = bicr(rss, h, data.n, k_p, k_n)
                rows.append(GridRow(k_n, lam, k_p, crit, fit.sigma2_hat,
                                    int(fit.outliers.viom.size), fit=fit))
            except Exception as exc:  # recorded, not fatal
                rows.append(GridRow(k_n, lam, -1, -np.inf, np.nan, -1, error=str(exc)))
    ok = [r for r in rows if r.error is None]
    if not ok:
        raise ParameterError("every grid point failed: " + "; ".join(r.error for r in rows[:3]))
    best = max(ok, key=lambda r: (r.bicr, -(r.k_p + r.k_n)))
    return rows, best
