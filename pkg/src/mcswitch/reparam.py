"""Unconstrained coordinates for correlations used by the optimizers."""

import numpy as np
from scipy import linalg

from .exceptions import ParameterDomainError

#: Free coordinates are kept in [-BOUND, BOUND]; tanh(6) is about 0.99999.
BOUND = 6.0


def to_unit(z):
    return np.tanh(np.asarray(z, dtype=float))


def from_unit(r):
    r = np.asarray(r, dtype=float)
    return np.clip(np.arctanh(np.clip(r, -0.999999, 0.999999)), -BOUND, BOUND)


def corr_from_free(z, d):
    """Correlation matrix from d(d-1)/2 partial-correlation coordinates.

    Row ``i`` of the Cholesky factor is built on the unit sphere: each
    coordinate is the tanh of a free value scaled by the remaining length,
    so the result is always positive definite.
    """
    w = np.tanh(np.asarray(z, dtype=float))
    if w.size != d * (d - 1) // 2:
        raise ParameterDomainError(f"expected {d * (d - 1) // 2} coordinates for d={d}")
    L = np.zeros((d, d))
    L[0, 0] = 1.0
    pos = 0
    for i in range(1, d):
        rem = 1.0
        for j in range(i):
            L[i, j] = w[pos] * np.sqrt(rem)
            rem -= L[i, j] ** 2
            pos += 1
        L[i, i] = np.sqrt(max(rem, 0.0))
    R = L @ L.T
    np.fill_diagonal(R, 1.0)
    return R


def free_from_corr(R):
    """Inverse of :func:`corr_from_free` for a positive definite ``R``."""
    R = np.asarray(R, dtype=float)
    d = R.shape[0]
    L = linalg.cholesky(R, lower=True)
    z = []
    for i in range(1, d):
        rem = 1.0
        for j in range(i):
            w = L[i, j] / np.sqrt(rem)
            z.append(float(from_unit(w)))
            rem -= L[i, j] ** 2
    return np.array(z)


def nearest_corr(S, floor=1e-3):
    """Symmetric PD correlation matrix close to ``S`` via eigenvalue flooring."""
    S = 0.5 * (np.asarray(S, dtype=float) + np.asarray(S, dtype=float).T)
    vals, vecs = np.linalg.eigh(S)
    S = (vecs * np.maximum(vals, floor)) @ vecs.T
    s = np.sqrt(np.diag(S))
    R = S / np.outer(s, s)
    np.fill_diagonal(R, 1.0)
    return R
