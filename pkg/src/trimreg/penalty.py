"""Folded-concave penalty evaluation and the weighted-L1 linearization."""

from __future__ import annotations

import numpy as np

from .exceptions import ParameterError
from .model import ADAPTIVE_L1, L1, SCAD, PenaltySpec


def scad_derivative(t, lam: float, a: float = 3.7):
    """Derivative of the clipped-concave penalty at |t|.

    Equals ``lam`` on [0, lam], decays linearly to zero at ``a*lam``, and is
    zero beyond. Kink points take their left-limit value.
    """
    if a <= 2:
        raise ParameterError("nonconcavity constant a must exceed 2")
    t = np.asarray(t, dtype=float)
    out = np.where(t <= lam, lam, np.maximum((a * lam - t) / (a - 1.0), 0.0))
    return float(out) if out.ndim == 0 else out


def scad_value(t, lam: float, a: float = 3.7):
    """Penalty value obtained by integrating the derivative from zero."""
    if a <= 2:
        raise ParameterError("nonconcavity constant a must exceed 2")
    t = np.asarray(t, dtype=float)
    mid = (2.0 * a * lam * t - t**2 - lam**2) / (2.0 * (a - 1.0))
    high = lam**2 * (a + 1.0) / 2.0
    out = np.where(t <= lam, lam * t, np.where(t <= a * lam, mid, high))
    return float(out) if out.ndim == 0 else out


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0)."""
    z = np.asarray(z, dtype=float)
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return float(out) if out.ndim == 0 else out


def penalty_value(beta, spec: PenaltySpec):
    """Total penalty sum over coefficients for any supported family."""
    ab = np.abs(np.asarray(beta, dtype=float))
    if spec.family == SCAD:
        return float(np.sum(scad_value(ab, spec.lam, spec.a)))
    if spec.family == L1:
        return float(spec.lam * np.sum(ab))
    w = spec.adaptive_weights
    if w is None:
        raise ParameterError("adaptive_l1 requires adaptive_weights")
    return float(spec.lam * np.sum(w * ab))


def lla_weights(beta_current: np.ndarray, spec: PenaltySpec) -> np.ndarray:
    """Per-coefficient L1 weights of the local linear approximation.

    At beta = 0 every weight equals lambda, so the first iteration reduces to
    a plain (or adaptive) lasso.
    """
    ab = np.abs(np.asarray(beta_current, dtype=float))
    if spec.family == SCAD:
        return scad_derivative(ab, spec.lam, spec.a)
    if spec.family == L1:
        return np.full_like(ab, spec.lam)
    w = spec.adaptive_weights
    if w is None:
        raise ParameterError("adaptive_l1 requires adaptive_weights")
    return spec.lam * np.asarray(w, dtype=float)


def condition1_check(spec: PenaltySpec, grid: np.ndarray) -> dict:
    """Numerical check of the penalty regularity properties on a grid.

    Diagnostic only; returns a pass/fail flag per property.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0) or np.any(grid < 0):
        raise ParameterError("grid must be sorted and nonnegative")
    vals = np.array([penalty_value([t], spec) for t in grid])
    v0 = penalty_value([0.0], spec)
    report = {
        "zero_at_origin": bool(abs(v0) < 1e-12),
        "nondecreasing": bool(np.all(np.diff(vals) >= -1e-12)),
    }
    # secant (midpoint) concavity test
    concave = True
    if grid.size >= 3:
        lhs = vals[1:-1]
        w = (grid[2:] - grid[1:-1]) / (grid[2:] - grid[:-2])
        chord = w * vals[:-2] + (1 - w) * vals[2:]
        concave = bool(np.all(lhs >= chord - 1e-10))
    report["concave"] = concave
    if spec.lam == 0:
        report["positive_derivative_at_zero"] = bool(np.all(np.abs(vals) < 1e-12))
    else:
        eps = 1e-8
        report["positive_derivative_at_zero"] = bool(penalty_value([eps], spec) / eps > 0)
    report["all_pass"] = all(report.values())
    return report
