"""Input validation helpers."""

import numpy as np

from .exceptions import InsufficientDataError, ParameterDomainError, ShapeError


def check_series(x, min_length=1):
    """Return ``x`` as a finite float array of shape (T, d)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError(f"series must be 1-d or 2-d, got {x.ndim} dimensions")
    if not np.all(np.isfinite(x)):
        raise ParameterDomainError("series contains missing or non-finite values")
    if x.shape[0] < min_length:
        raise InsufficientDataError(f"need at least {min_length} observations, got {x.shape[0]}")
    return x


def check_labels(v, n_regimes=None, length=None):
    """Return ``v`` as a 1-d int array of 0-based regime labels."""
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ShapeError("regime sequence must be one-dimensional")
    if arr.size == 0:
        raise ShapeError("regime sequence is empty")
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ParameterDomainError("regime labels must be integers")
    arr = arr.astype(int)
    if arr.min() < 0:
        raise ParameterDomainError("regime labels must be nonnegative")
    if n_regimes is not None and arr.max() >= n_regimes:
        raise ParameterDomainError(f"regime label {arr.max()} out of range for {n_regimes} regimes")
    if length is not None and arr.size != length:
        raise ShapeError(f"regime sequence has length {arr.size}, expected {length}")
    return arr


def check_probability_vector(p, size=None, atol=1e-8):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (size is not None and p.size != size):
        raise ShapeError(f"probability vector must have length {size}")
    if np.any(p < -atol) or abs(p.sum() - 1.0) > atol:
        raise ParameterDomainError("probabilities must be nonnegative and sum to 1")
    return np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()


def check_transition_matrix(M, size=None, atol=1e-8):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or (size is not None and M.shape[0] != size):
        raise ShapeError(f"transition matrix must be {size}x{size}")
    if np.any(M < -atol) or np.any(np.abs(M.sum(axis=1) - 1.0) > atol):
        raise ParameterDomainError("transition rows must be nonnegative and sum to 1")
    M = np.clip(M, 0.0, None)
    return M / M.sum(axis=1, keepdims=True)


def check_correlation_matrix(R, size=None, atol=1e-10):
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or (size is not None and R.shape[0] != size):
        raise ShapeError(f"correlation matrix must be {size}x{size}")
    if not np.allclose(R, R.T, atol=atol, rtol=0):
        raise ShapeError("correlation matrix is not symmetric")
    if not np.allclose(np.diag(R), 1.0, atol=atol, rtol=0):
        raise ParameterDomainError("correlation matrix needs a unit diagonal")
    off = R[~np.eye(R.shape[0], dtype=bool)]
    if np.any(np.abs(off) >= 1.0):
        raise ParameterDomainError("correlations must lie in (-1, 1)")
    return 0.5 * (R + R.T)


def check_open_unit(values, name):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)) or np.any(np.abs(values) >= 1.0):
        raise ParameterDomainError(f"{name} must lie strictly inside (-1, 1)")
    return values
