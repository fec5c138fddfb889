"""Dense symmetric-matrix helpers and Gaussian log-density evaluation.

Everything downstream funnels its linear algebra through this module so that
one eigenvalue-flooring policy applies wherever a covariance is inverted,
log-determined or raised to a power. Tiny labeled samples in high dimension
routinely produce rank-deficient covariance estimates; the floor keeps them
usable without changing well-conditioned results.

All functions are pure; returned arrays are fresh copies.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import EmptyClass, InvalidInput, SingularCovariance

# Floor for eigenvalues before inversion/log: relative to the top eigenvalue,
# never below the absolute floor.
RELATIVE_EIG_FLOOR = 1e-8
ABSOLUTE_EIG_FLOOR = 1e-12

LOG_2PI = float(np.log(2.0 * np.pi))


class EigDecomp(NamedTuple):
    """Spectral decomposition; eigenvalues ascending, eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class Spectrum(NamedTuple):
    """Floored covariance spectrum plus its log-determinant."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    log_det: float


def sym_matrix(entries) -> np.ndarray:
    """Validate a square real matrix and symmetrize it as (M + M.T) / 2."""
    m = np.asarray(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    return 0.5 * (m + m.T)


def sym_eig(m) -> EigDecomp:
    """Full spectral decomposition of a symmetric matrix."""
    lam, vec = np.linalg.eigh(sym_matrix(m))
    return EigDecomp(lam, vec)


def eig_floor(eigenvalues) -> float:
    """Default eigenvalue floor: relative to the largest eigenvalue."""
    top = float(np.max(eigenvalues, initial=0.0))
    return max(RELATIVE_EIG_FLOOR * top, ABSOLUTE_EIG_FLOOR)


def sym_pow(m, p: float, floor: float | None = None) -> np.ndarray:
    """Matrix power V diag(max(lam, floor))^p V^T of a symmetric matrix.

    ``floor=None`` uses the default relative floor.
    """
    lam, vec = sym_eig(m)
    if floor is None:
        floor = eig_floor(lam)
    if not floor > 0.0:
        raise InvalidInput("floor must be positive")
    lam = np.maximum(lam, floor)
    return sym_matrix((vec * lam**p) @ vec.T)


def floored_spectrum(sigma) -> Spectrum:
    """Eigendecompose a covariance, floor its spectrum and precompute log|Sigma|.

    Raises SingularCovariance if the floored spectrum still fails to be
    positive and finite (only reachable through corrupted input).
    """
    lam, vec = sym_eig(sigma)
    lam = np.maximum(lam, eig_floor(lam))
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise SingularCovariance("covariance not positive definite after flooring")
    return Spectrum(lam, vec, float(np.sum(np.log(lam))))


def log_density_from_spectrum(X, mu, spectrum: Spectrum) -> np.ndarray:
    """Row-wise log N(x | mu, Sigma) given a precomputed floored spectrum."""
    X = np.asarray(X, dtype=float)
    mu = np.asarray(mu, dtype=float)
    d = mu.shape[0]
    z = (X - mu) @ spectrum.eigenvectors
    maha = np.sum(z * z / spectrum.eigenvalues, axis=-1)
    return -0.5 * (d * LOG_2PI + spectrum.log_det + maha)


def log_mvn_density_rows(X, mu, sigma) -> np.ndarray:
    """Row-wise multivariate normal log-density, never via exp-then-log."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mu = np.asarray(mu, dtype=float)
    if X.shape[1] != mu.shape[0]:
        raise InvalidInput(f"dimension mismatch: X has {X.shape[1]} columns, mu has {mu.shape[0]}")
    return log_density_from_spectrum(X, mu, floored_spectrum(sigma))


def log_mvn_density(x, mu, sigma) -> float:
    """log N(x | mu, sigma) for a single point."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(log_mvn_density_rows(x, mu, sigma)[0])


def weighted_mean_and_scatter(X, w) -> tuple[np.ndarray, np.ndarray, float]:
    """Weighted mean and unnormalized scatter sum_i w_i (x_i - m)(x_i - m)^T.

    Returns (mean, scatter, weight_sum). Raises EmptyClass when the weights
    sum to zero.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.shape[0] != X.shape[0]:
        raise InvalidInput(f"weight vector of length {w.shape} does not match {X.shape[0]} rows")
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise InvalidInput("weights must be finite and nonnegative")
    total = float(w.sum())
    if total == 0.0:
        raise EmptyClass("all weights are zero")
    mean = (w @ X) / total
    diff = X - mean
    scatter = (diff * w[:, None]).T @ diff
    return mean, sym_matrix(scatter), total
