"""Two-class linear discriminant analysis with soft class responsibilities.

The model is a pair of Gaussians sharing one covariance matrix. Class
membership of row i is carried by a responsibility r_i in [0, 1], where
r_i = 1 means class 1 and r_i = 0 means class 2; hard labels are the
endpoints. Fitting with fractional responsibilities is the single code path
behind the supervised estimator, the EM M-step and the constrained refits,
and it reduces exactly to the classical closed-form estimators at the
endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numkit
from .errors import InvalidInput

PRIOR_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Class priors, class means and the pooled within-class covariance."""

    pi1: float
    pi2: float
    mu1: np.ndarray
    mu2: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu1 = np.asarray(self.mu1, dtype=float).reshape(-1)
        mu2 = np.asarray(self.mu2, dtype=float).reshape(-1)
        sigma = numkit.sym_matrix(self.sigma)
        if not (self.pi1 >= 0.0 and self.pi2 >= 0.0):
            raise InvalidInput("priors must be nonnegative")
        if abs(self.pi1 + self.pi2 - 1.0) > PRIOR_SUM_TOL:
            raise InvalidInput(f"priors sum to {self.pi1 + self.pi2}, expected 1")
        if mu1.shape != mu2.shape or sigma.shape[0] != mu1.shape[0]:
            raise InvalidInput("mean/covariance dimensions disagree")
        for arr in (mu1, mu2, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "mu2", mu2)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.mu1.shape[0]


def as_responsibilities(r, n_rows: int | None = None) -> np.ndarray:
    """Validate a responsibility vector: one entry per row, each in [0, 1]."""
    r = np.asarray(r, dtype=float).reshape(-1)
    if n_rows is not None and r.shape[0] != n_rows:
        raise InvalidInput(f"{r.shape[0]} responsibilities for {n_rows} rows")
    if not np.all(np.isfinite(r)) or np.any(r < 0.0) or np.any(r > 1.0):
        raise InvalidInput("responsibilities must lie in [0, 1]")
    return r


def labels_to_responsibilities(labels) -> np.ndarray:
    """Map class labels {1, 2} to hard responsibilities {1.0, 0.0}."""
    labels = np.asarray(labels)
    if not np.all(np.isin(labels, (1, 2))):
        raise InvalidInput("labels must be 1 or 2")
    return np.where(labels == 1, 1.0, 0.0)


def responsibilities_to_labels(r) -> np.ndarray:
    """Threshold responsibilities at 0.5 into labels; ties go to class 1."""
    r = np.asarray(r, dtype=float)
    return np.where(r >= 0.5, 1, 2).astype(np.int64)


def _as_matrix(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.all(np.isfinite(X)):
        raise InvalidInput("feature matrix has non-finite entries")
    return X


def fit(X, r, ridge: float = 0.0) -> ModelParams:
    """Closed-form maximum-likelihood fit from (possibly soft) responsibilities.

    pi_1 = sum(r)/N, mu_1 = weighted mean of class 1, symmetrically for
    class 2 with weights 1-r, and sigma is the pooled scatter divided by N
    (the biased 1/N estimator). ``ridge`` adds ridge * trace(sigma)/d to the
    diagonal; the reproduction presets keep it at 0.
    """
    X = _as_matrix(X)
    r = as_responsibilities(r, X.shape[0])
    n = r.shape[0]
    mu1, s1, w1 = numkit.weighted_mean_and_scatter(X, r)
    mu2, s2, w2 = numkit.weighted_mean_and_scatter(X, 1.0 - r)
    sigma = (s1 + s2) / n
    if ridge > 0.0:
        d = X.shape[1]
        sigma = sigma + (ridge * np.trace(sigma) / d) * np.eye(d)
    return ModelParams(w1 / n, w2 / n, mu1, mu2, sigma)


def _log_joint(theta: ModelParams, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """log(pi_c) + log N(x | mu_c, sigma) for both classes, one spectrum solve."""
    spectrum = numkit.floored_spectrum(theta.sigma)
    lp1 = numkit.log_density_from_spectrum(X, theta.mu1, spectrum)
    lp2 = numkit.log_density_from_spectrum(X, theta.mu2, spectrum)
    with np.errstate(divide="ignore"):
        # log(0) = -inf is the intended value for a vanished prior
        return np.log(theta.pi1) + lp1, np.log(theta.pi2) + lp2


def log_likelihood(theta: ModelParams, X, r) -> float:
    """Responsibility-weighted joint log-likelihood.

    sum_i r_i [log pi_1 + log N(x_i|mu_1,S)] + (1-r_i) [log pi_2 + log N(x_i|mu_2,S)].
    Terms with zero weight contribute exactly 0 even against a -inf log-prior.
    """
    X = _as_matrix(X)
    r = as_responsibilities(r, X.shape[0])
    a1, a2 = _log_joint(theta, X)
    with np.errstate(invalid="ignore"):
        t1 = np.where(r > 0.0, r * a1, 0.0)
        t2 = np.where(r < 1.0, (1.0 - r) * a2, 0.0)
    return float(np.sum(t1 + t2))


def posterior(theta: ModelParams, X) -> np.ndarray:
    """Class-1 posterior probabilities, computed in log space."""
    X = _as_matrix(X)
    a1, a2 = _log_joint(theta, X)
    return np.exp(a1 - np.logaddexp(a1, a2))


def predict(theta: ModelParams, X) -> np.ndarray:
    """Hard labels in {1, 2}; posterior exactly 0.5 goes to class 1."""
    return responsibilities_to_labels(posterior(theta, X))


def marginal_log_likelihood(theta: ModelParams, X, r, Xu) -> float:
    """Joint log-likelihood with the unlabeled labels summed out per object.

    Adds sum_u log[pi_1 N(x_u|mu_1,S) + pi_2 N(x_u|mu_2,S)] to the labeled
    term, each summand through log-sum-exp.
    """
    total = log_likelihood(theta, X, r)
    if Xu is None:
        return total
    Xu = np.atleast_2d(np.asarray(Xu, dtype=float))
    if Xu.shape[0] == 0:
        return total
    if not np.all(np.isfinite(Xu)):
        raise InvalidInput("unlabeled feature matrix has non-finite entries")
    a1, a2 = _log_joint(theta, Xu)
    return total + float(np.sum(np.logaddexp(a1, a2)))
