"""Partial autocorrelations, Toeplitz AR correlation matrices and PD checks."""

import numpy as np
from scipy import linalg

from .exceptions import ParameterDomainError, ShapeError


def pacf_to_acf(pacf):
    """Durbin-Levinson map from partial autocorrelations to autocorrelations.

    Parameters
    ----------
    pacf : array_like, shape (k,)
        Partial autocorrelations at lags 1..k, each strictly inside (-1, 1).

    Returns
    -------
    acf : ndarray, shape (k + 1,)
        First row of the Toeplitz correlation matrix, ``acf[0] == 1``.
    """
    pacf = np.atleast_1d(np.asarray(pacf, dtype=float))
    if np.any(~np.isfinite(pacf)) or np.any(np.abs(pacf) >= 1.0):
        raise ParameterDomainError("partial autocorrelations must lie in (-1, 1)")
    k = pacf.size
    acf = np.ones(k + 1)
    phi = np.zeros(0)
    v = 1.0  # one-step prediction error variance of the order m-1 predictor
    for m in range(1, k + 1):
        alpha = pacf[m - 1]
        acf[m] = np.dot(phi, acf[m - 1:0:-1]) + alpha * v
        phi = np.concatenate([phi - alpha * phi[::-1], [alpha]])
        v *= 1.0 - alpha * alpha
    return acf


def acf_to_pacf(acf):
    """Inverse of :func:`pacf_to_acf`; raises if the Toeplitz matrix is not PD."""
    acf = np.asarray(acf, dtype=float)
    if acf.ndim == 2:
        acf = _first_row(acf)
    if acf.size == 0 or abs(acf[0] - 1.0) > 1e-12:
        raise ParameterDomainError("autocorrelation sequence must start with 1")
    k = acf.size - 1
    pacf = np.zeros(k)
    phi = np.zeros(0)
    v = 1.0
    for m in range(1, k + 1):
        num = acf[m] - np.dot(phi, acf[m - 1:0:-1])
        alpha = num / v
        if not np.isfinite(alpha) or abs(alpha) >= 1.0 or v <= 0:
            raise ParameterDomainError("Toeplitz correlation matrix is not positive definite")
        pacf[m - 1] = alpha
        phi = np.concatenate([phi - alpha * phi[::-1], [alpha]])
        v *= 1.0 - alpha * alpha
    return pacf


def _first_row(mat):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError("expected a square matrix")
    n = mat.shape[0]
    row = mat[0]
    expected = linalg.toeplitz(row)
    if not np.allclose(mat, expected, atol=1e-10):
        raise ShapeError("matrix is not symmetric Toeplitz")
    return row.copy() if n else row


def toeplitz_corr(acf):
    """Symmetric Toeplitz matrix with first row ``acf``."""
    return linalg.toeplitz(np.asarray(acf, dtype=float))


def ar_coefficients(acf):
    """Yule-Walker AR(k) coefficients (lag 1 first) and innovation variance.

    ``acf`` has length k + 1. Solves ``toeplitz(acf[:k]) phi = acf[1:]``.
    """
    acf = np.asarray(acf, dtype=float)
    k = acf.size - 1
    if k == 0:
        return np.zeros(0), 1.0
    pacf = acf_to_pacf(acf)
    phi = np.zeros(0)
    v = 1.0
    for alpha in pacf:
        phi = np.concatenate([phi - alpha * phi[::-1], [alpha]])
        v *= 1.0 - alpha * alpha
    return phi, v


def is_positive_definite(mat, tol=1e-10):
    """True when a Cholesky factorization succeeds with every pivot above ``tol``."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-8, rtol=0):
        raise ShapeError("matrix is not symmetric")
    if not np.all(np.isfinite(mat)):
        return False
    try:
        chol = linalg.cholesky(mat, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return False
    return bool(np.min(np.diag(chol)) ** 2 > tol)


def min_eigenvalue(mat):
    return float(np.linalg.eigvalsh(np.asarray(mat, dtype=float))[0])
