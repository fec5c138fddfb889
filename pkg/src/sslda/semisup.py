"""Semi-supervised fitters built on the closed-form discriminant estimators.

Four strategies over a labeled set (X, y) and unlabeled rows Xu:

* self-learning: impute hard labels, refit, repeat until the imputation is a
  fixed point;
* EM: alternate soft imputation (posterior responsibilities) with the
  closed-form refit, ascending the marginal log-likelihood;
* moment-constrained: correct the supervised estimates so the prior-weighted
  class means match the all-data mean and the covariance is rescaled through
  the all-data total covariance;
* implicitly constrained: maximize the labeled-data log-likelihood over the
  set of parameters reachable by refitting with some responsibility
  assignment on the unlabeled rows, by projected gradient ascent on the
  responsibilities with an exact chain-rule gradient.

Hard labels y use the responsibility convention of :mod:`sslda.lda`
(1.0 = class 1, 0.0 = class 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lda, numkit
from .errors import InvalidInput

# Below this combined class weight an iterative fitter is considered collapsed
# and falls back to the supervised solution.
COLLAPSE_EPS = 1e-10
# Line-search steps are halved down to this size before giving up.
MIN_STEP = 1e-12


@dataclass(frozen=True)
class FitConfig:
    """Shared knobs for the iterative fitters."""

    max_iter: int = 1000
    tol: float = 1e-8
    step_init: float = 1.0
    ridge: float = 0.0

    def __post_init__(self):
        if self.max_iter < 1:
            raise InvalidInput("max_iter must be >= 1")
        if not self.tol > 0.0 or not self.step_init > 0.0 or self.ridge < 0.0:
            raise InvalidInput("tol and step_init must be positive, ridge nonnegative")


@dataclass
class FitTrace:
    """Per-iteration objective values and convergence metadata."""

    objective_per_iter: np.ndarray
    iterations: int
    converged: bool
    final_responsibilities: np.ndarray | None = None
    collapsed: bool = False


@dataclass(frozen=True)
class MomentStats:
    """Label-free moments: all-data mean/covariance and labeled-only covariance."""

    mu_t: np.ndarray
    theta_cov: np.ndarray
    sigma_t_labeled: np.ndarray


DEFAULT_CONFIG = FitConfig()


def _check_inputs(X, y, Xu):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = lda.as_responsibilities(y, X.shape[0])
    if Xu is None:
        Xu = np.empty((0, X.shape[1]))
    Xu = np.atleast_2d(np.asarray(Xu, dtype=float))
    if Xu.shape[0] == 0:
        Xu = Xu.reshape(0, X.shape[1])
    if Xu.shape[1] != X.shape[1]:
        raise InvalidInput(f"labeled data has {X.shape[1]} features, unlabeled {Xu.shape[1]}")
    return X, y, Xu


def _single_iteration_trace(objective: float, yu=None) -> FitTrace:
    return FitTrace(np.array([objective]), 1, True, final_responsibilities=yu)


def _collapsed(theta0, objectives, yu=None) -> tuple[lda.ModelParams, FitTrace]:
    trace = FitTrace(np.asarray(objectives, dtype=float), len(objectives), False,
                     final_responsibilities=yu, collapsed=True)
    return theta0, trace


def fit_self_learning(X, y, Xu, cfg: FitConfig = DEFAULT_CONFIG):
    """Iterate hard-label imputation and refitting until the labels stabilize.

    Returns (params, trace); the trace objective is the joint log-likelihood
    of the labeled plus imputed data, and final_responsibilities holds the
    imputed hard labels.
    """
    X, y, Xu = _check_inputs(X, y, Xu)
    theta0 = lda.fit(X, y, cfg.ridge)
    if Xu.shape[0] == 0:
        return theta0, _single_iteration_trace(lda.log_likelihood(theta0, X, y),
                                               yu=np.empty(0))
    Xe = np.vstack([X, Xu])
    imputed = np.where(lda.posterior(theta0, Xu) >= 0.5, 1.0, 0.0)
    objectives: list[float] = []
    theta = theta0
    converged = False
    for _ in range(cfg.max_iter):
        re = np.concatenate([y, imputed])
        if min(re.sum(), (1.0 - re).sum()) < COLLAPSE_EPS:
            return _collapsed(theta0, objectives, yu=imputed)
        theta = lda.fit(Xe, re, cfg.ridge)
        objectives.append(lda.log_likelihood(theta, Xe, re))
        relabeled = np.where(lda.posterior(theta, Xu) >= 0.5, 1.0, 0.0)
        if np.array_equal(relabeled, imputed):
            converged = True
            break
        imputed = relabeled
    return theta, FitTrace(np.asarray(objectives), len(objectives), converged,
                           final_responsibilities=imputed)


def fit_em(X, y, Xu, cfg: FitConfig = DEFAULT_CONFIG):
    """Expectation maximization on the marginal likelihood of labeled + unlabeled data.

    Labeled rows keep their hard labels permanently; the E-step recomputes
    responsibilities for the unlabeled rows only. The trace records the
    marginal log-likelihood after every M-step; it is nondecreasing up to
    floating-point slack.
    """
    X, y, Xu = _check_inputs(X, y, Xu)
    theta0 = lda.fit(X, y, cfg.ridge)
    if Xu.shape[0] == 0:
        obj = lda.marginal_log_likelihood(theta0, X, y, Xu)
        return theta0, _single_iteration_trace(obj, yu=np.empty(0))
    Xe = np.vstack([X, Xu])
    theta = theta0
    previous = lda.marginal_log_likelihood(theta, X, y, Xu)
    objectives: list[float] = []
    yu = None
    converged = False
    for _ in range(cfg.max_iter):
        yu = lda.posterior(theta, Xu)
        re = np.concatenate([y, yu])
        if min(re.sum(), (1.0 - re).sum()) < COLLAPSE_EPS:
            return _collapsed(theta0, objectives, yu=yu)
        theta = lda.fit(Xe, re, cfg.ridge)
        obj = lda.marginal_log_likelihood(theta, X, y, Xu)
        objectives.append(obj)
        if obj - previous < cfg.tol:
            converged = True
            break
        previous = obj
    return theta, FitTrace(np.asarray(objectives), len(objectives), converged,
                           final_responsibilities=yu)


def moment_stats(X, Xu) -> MomentStats:
    """Overall mean/covariance on all rows and covariance on labeled rows alone.

    Covariances use the biased 1/N normalization.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if Xu is None:
        Xu = np.empty((0, X.shape[1]))
    Xu = np.atleast_2d(np.asarray(Xu, dtype=float))
    if Xu.shape[0] == 0:
        Xu = Xu.reshape(0, X.shape[1])
    everything = np.vstack([X, Xu])
    mu_t, scatter_t, n_t = numkit.weighted_mean_and_scatter(
        everything, np.ones(everything.shape[0]))
    _, scatter_l, n_l = numkit.weighted_mean_and_scatter(X, np.ones(X.shape[0]))
    return MomentStats(mu_t, scatter_t / n_t, scatter_l / n_l)


def fit_moment_constrained(X, y, Xu, ridge: float = 0.0) -> lda.ModelParams:
    """Shift the class means and rescale the covariance to match all-data moments.

    mu_c <- mu_c - (pi_1 mu_1 + pi_2 mu_2 - mu_t), which enforces the
    prior-weighted mean constraint exactly, and
    sigma <- T^(1/2) S_t^(-1/2) sigma S_t^(-1/2) T^(1/2) with T the all-data
    covariance and S_t the labeled-only total covariance, so that the labeled
    total covariance is mapped onto the all-data one. Priors are unchanged.
    """
    X, y, Xu = _check_inputs(X, y, Xu)
    theta = lda.fit(X, y, ridge)
    stats = moment_stats(X, Xu)
    shift = theta.pi1 * theta.mu1 + theta.pi2 * theta.mu2 - stats.mu_t
    half_all = numkit.sym_pow(stats.theta_cov, 0.5)
    inv_half_labeled = numkit.sym_pow(stats.sigma_t_labeled, -0.5)
    sigma = numkit.sym_matrix(
        half_all @ inv_half_labeled @ theta.sigma @ inv_half_labeled @ half_all)
    return lda.ModelParams(theta.pi1, theta.pi2,
                           theta.mu1 - shift, theta.mu2 - shift, sigma)


def _fit_extended(yu, X, y, Xu, ridge):
    yu = lda.as_responsibilities(yu, Xu.shape[0])
    re = np.concatenate([y, yu])
    theta = lda.fit(np.vstack([X, Xu]), re, ridge)
    return yu, re, theta


def icl_objective(yu, X, y, Xu, ridge: float = 0.0) -> float:
    """Labeled-data log-likelihood at the parameters refit on labeled + unlabeled."""
    X, y, Xu = _check_inputs(X, y, Xu)
    _, _, theta = _fit_extended(yu, X, y, Xu, ridge)
    return lda.log_likelihood(theta, X, y)


def icl_objective_and_gradient(yu, X, y, Xu, ridge: float = 0.0):
    """Objective of :func:`icl_objective` and its exact gradient in yu.

    The gradient chains the likelihood derivative w.r.t. the parameters with
    the derivative of the closed-form estimators w.r.t. each unlabeled
    responsibility. Because the fitted means zero the weighted deviations,
    the covariance channel reduces to a rank-two update per coordinate.
    The result is exact whenever the eigenvalue floor is inactive.
    """
    X, y, Xu = _check_inputs(X, y, Xu)
    yu, re, theta = _fit_extended(yu, X, y, Xu, ridge)
    objective = lda.log_likelihood(theta, X, y)

    n = re.shape[0]
    n_labeled = y.shape[0]
    d = X.shape[1]
    s1 = theta.pi1 * n
    s2 = theta.pi2 * n

    spectrum = numkit.floored_spectrum(theta.sigma)
    inv = (spectrum.eigenvectors / spectrum.eigenvalues) @ spectrum.eigenvectors.T

    # Labeled deviations from the fitted means drive every channel.
    d1 = X - theta.mu1
    d2 = X - theta.mu2
    n1 = float(y.sum())
    n2 = n_labeled - n1
    g1 = y @ d1
    g2 = (1.0 - y) @ d2

    # Prior channel: d pi_1 / d yu_k = 1/n, d pi_2 / d yu_k = -1/n.
    grad_pi = (n1 / theta.pi1 - n2 / theta.pi2) / n

    # Mean channel: d mu_1 / d yu_k = (x_k - mu_1) / s1 and symmetrically.
    u1 = Xu - theta.mu1
    u2 = Xu - theta.mu2
    grad_mu = (u1 @ (inv @ g1)) / s1 - (u2 @ (inv @ g2)) / s2

    # Covariance channel: dL/dSigma = -(N_l/2) inv + (1/2) inv W inv with W
    # the labeled scatter at the fitted means; d Sigma / d yu_k is the
    # difference of the two outer products of x_k deviations, over n.
    w_scatter = d1.T @ (d1 * y[:, None]) + d2.T @ (d2 * (1.0 - y)[:, None])
    a = -0.5 * n_labeled * inv + 0.5 * inv @ w_scatter @ inv
    q1 = np.einsum("ij,jk,ik->i", u1, a, u1)
    q2 = np.einsum("ij,jk,ik->i", u2, a, u2)
    grad_sigma = (q1 - q2) / n
    if ridge > 0.0:
        # fit() added (ridge * trace(sigma_mle) / d) I; chain through the trace.
        trace_d = (np.sum(u1 * u1, axis=1) - np.sum(u2 * u2, axis=1)) / n
        grad_sigma = grad_sigma + (ridge / d) * trace_d * np.trace(a)

    return objective, grad_pi + grad_mu + grad_sigma


def fit_implicitly_constrained(X, y, Xu, cfg: FitConfig = DEFAULT_CONFIG):
    """Projected gradient ascent on the responsibilities of the unlabeled rows.

    Starts from the supervised posterior responsibilities, takes steps along
    the exact gradient with coordinates clipped back into [0, 1], and accepts
    a step only if it increases the objective (backtracking by halving from
    step_init). Stops when an accepted step gains less than tol, when no step
    down to the minimum size ascends, or at max_iter. The trace objective is
    therefore strictly increasing.
    """
    X, y, Xu = _check_inputs(X, y, Xu)
    theta0 = lda.fit(X, y, cfg.ridge)
    if Xu.shape[0] == 0:
        return theta0, _single_iteration_trace(lda.log_likelihood(theta0, X, y),
                                               yu=np.empty(0))
    yu = lda.posterior(theta0, Xu)
    objective, grad = icl_objective_and_gradient(yu, X, y, Xu, cfg.ridge)
    objectives = [objective]
    converged = False
    for _ in range(cfg.max_iter - 1):
        re_sum = y.sum() + yu.sum()
        if min(re_sum, (y.shape[0] + Xu.shape[0]) - re_sum) < COLLAPSE_EPS:
            return _collapsed(theta0, objectives, yu=yu)
        step = cfg.step_init
        accepted = None
        while step >= MIN_STEP:
            candidate = np.clip(yu + step * grad, 0.0, 1.0)
            value = icl_objective(candidate, X, y, Xu, cfg.ridge)
            if value > objective:
                accepted = (candidate, value)
                break
            step *= 0.5
        if accepted is None:
            converged = True
            break
        gain = accepted[1] - objective
        yu, objective = accepted
        objectives.append(objective)
        if gain < cfg.tol:
            converged = True
            break
        _, grad = icl_objective_and_gradient(yu, X, y, Xu, cfg.ridge)
    theta = lda.fit(np.vstack([X, Xu]), np.concatenate([y, yu]), cfg.ridge)
    return theta, FitTrace(np.asarray(objectives), len(objectives), converged,
                           final_responsibilities=yu)
