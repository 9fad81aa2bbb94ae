"""Core data containers: dataset, penalty specification, fit results."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError

SCAD = "scad"
L1 = "l1"
ADAPTIVE_L1 = "adaptive_l1"

_FAMILIES = (SCAD, L1, ADAPTIVE_L1)


@dataclass(frozen=True)
class Dataset:
    """Immutable regression input: response ``y`` and design ``X``.

    When ``intercept`` is True, column 0 of ``X`` must be all ones.
    """

    y: np.ndarray
    X: np.ndarray
    intercept: bool = True

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if y.ndim != 1:
            raise ParameterError("y must be a 1-d vector")
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ParameterError("X must be n x p with n matching len(y)")
        if y.shape[0] < 1 or X.shape[1] < 1:
            raise ParameterError("need n >= 1 and p >= 1")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise ParameterError("non-finite entries in y or X")
        if self.intercept and not np.all(X[:, 0] == 1.0):
            raise ParameterError("intercept flag set but column 0 is not all ones")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family and its parameters.

    ``lam`` is the shrinkage level; ``a`` is the nonconcavity constant used by
    the folded-concave family; ``adaptive_weights`` applies only to the
    adaptive L1 family.
    """

    family: str = SCAD
    lam: float = 0.1
    a: float = 3.7
    adaptive_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ParameterError(f"unknown penalty family {self.family!r}")
        if self.lam < 0:
            raise ParameterError("lambda must be nonnegative")
        if self.family == SCAD and self.a <= 2:
            raise ParameterError("nonconcavity constant a must exceed 2")
        if self.adaptive_weights is not None:
            w = np.asarray(self.adaptive_weights, dtype=float)
            if np.any(~np.isfinite(w)) or np.any(w < 0):
                raise ParameterError("adaptive weights must be finite and nonnegative")
            object.__setattr__(self, "adaptive_weights", w)

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.family, lam, self.a, self.adaptive_weights)


@dataclass
class OutlierSets:
    """Detected outliers: mean-shift set (excluded) and variance-inflation set
    (down-weighted), with the associated sparse parameter estimates."""

    msom: np.ndarray
    viom: np.ndarray
    phi_hat: np.ndarray
    gamma_hat: np.ndarray

    def __post_init__(self):
        self.msom = np.asarray(sorted(int(i) for i in self.msom), dtype=int)
        self.viom = np.asarray(sorted(int(i) for i in self.viom), dtype=int)
        if np.intersect1d(self.msom, self.viom).size:
            raise ParameterError("mean-shift and variance-inflation sets must be disjoint")
        self.phi_hat = np.asarray(self.phi_hat, dtype=float)
        self.gamma_hat = np.asarray(self.gamma_hat, dtype=float)


@dataclass
class ProxyMatrices:
    """Diagonal working surrogates for the unknown row-weighting structure
    (``m_r``) and the variance-inflation covariance (``m_gamma``)."""

    m_r: np.ndarray
    m_gamma: np.ndarray

    def __post_init__(self):
        self.m_r = np.asarray(self.m_r, dtype=float)
        self.m_gamma = np.asarray(self.m_gamma, dtype=float)
        for name, v in (("m_r", self.m_r), ("m_gamma", self.m_gamma)):
            if np.any(~np.isfinite(v)) or np.any(v <= 0):
                raise ParameterError(f"{name} entries must be strictly positive and finite")

    @classmethod
    def default(cls, n: int) -> "ProxyMatrices":
        # log(n) * I is a safe default: it is dominated by the data terms for
        # large n while avoiding extra parameters.
        s = max(np.log(n), 1.0)
        return cls(np.full(n, s), np.full(n, s))

    @classmethod
    def identity(cls, n: int) -> "ProxyMatrices":
        return cls(np.ones(n), np.ones(n))


@dataclass
class FitResult:
    """Assembled output of a full fit."""

    beta_hat: np.ndarray
    support: np.ndarray
    outliers: OutlierSets
    weights: np.ndarray
    sigma2_hat: float
    objective_trace: list = field(default_factory=list)
    k_n: int = 0
    tuning: dict = field(default_factory=dict)
    omega_hat: np.ndarray | None = None
    proxy_update: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "beta_hat": self.beta_hat.tolist(),
            "support": self.support.tolist(),
            "msom": self.outliers.msom.tolist(),
            "viom": self.outliers.viom.tolist(),
            "phi_hat": self.outliers.phi_hat.tolist(),
            "gamma_hat": self.outliers.gamma_hat.tolist(),
            "weights": self.weights.tolist(),
            "sigma2_hat": self.sigma2_hat,
            "objective_trace": list(self.objective_trace),
            "k_n": self.k_n,
            "tuning": self.tuning,
            "omega_hat": None if self.omega_hat is None else self.omega_hat.tolist(),
            "proxy_update": self.proxy_update,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        outliers = OutlierSets(
            msom=np.asarray(d["msom"], dtype=int),
            viom=np.asarray(d["viom"], dtype=int),
            phi_hat=np.asarray(d["phi_hat"], dtype=float),
            gamma_hat=np.asarray(d["gamma_hat"], dtype=float),
        )
        return cls(
            beta_hat=np.asarray(d["beta_hat"], dtype=float),
            support=np.asarray(d["support"], dtype=int),
            outliers=outliers,
            weights=np.asarray(d["weights"], dtype=float),
            sigma2_hat=float(d["sigma2_hat"]),
            objective_trace=list(d["objective_trace"]),
            k_n=int(d["k_n"]),
            tuning=dict(d["tuning"]),
            omega_hat=None if d.get("omega_hat") is None else np.asarray(d["omega_hat"], dtype=float),
            proxy_update=d.get("proxy_update"),
        )
