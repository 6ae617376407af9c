"""Block Toeplitz correlation matrices of margin-closed Gaussian VAR processes.

Within a regime, every component follows its own AR process with Toeplitz
correlation matrix ``R_i`` and the components are tied together by the
contemporaneous correlation matrix ``R_Y``. The cross-lag correlations
``corr(Z_{i,t}, Z_{j,t-m})`` are fixed by requiring each component's
backward AR residual to be uncorrelated with the other component over the
whole lag horizon, which reduces to one 2k x 2k linear system per pair.

Matrices use newest-first block ordering: block ``r`` holds ``Y_{t-r}``.
"""

import numpy as np
from scipy import linalg

from .exceptions import DegeneracyError, InfeasibleModelError, ParameterDomainError, ShapeError
from .serialcorr import ar_coefficients, is_positive_definite, min_eigenvalue


def psi_coefficients(acf):
    """AR coefficients ``(psi_1, ..., psi_k)`` of the lag-k linear projection.

    ``psi_m`` multiplies lag ``m``; they solve the k x k Toeplitz system built
    from ``acf[:k]`` with right-hand side ``acf[1:]`` (Levinson recursion).
    Raises ParameterDomainError when the Toeplitz matrix of ``acf`` is not PD.
    """
    acf = np.asarray(acf, dtype=float)
    if acf.size <= 1:
        return np.zeros(0)
    phi, _ = ar_coefficients(acf)
    return phi


def h_matrix(psi):
    """Banded k x (2k+1) matrix; row r is ``(..., -1, psi_1, ..., psi_k, ...)`` starting at column r."""
    psi = np.asarray(psi, dtype=float)
    k = psi.size
    H = np.zeros((k, 2 * k + 1))
    for r in range(k):
        H[r, r] = -1.0
        H[r, r + 1:r + k + 1] = psi
    return H


def cross_lag_correlations(H_i, H_j, rho0, pair=None):
    """Cross-lag correlations between two AR components.

    Returns ``rho`` of length 2k ordered as lags ``-k..-1, 1..k``, where
    ``rho[m] = corr(Z_{i,t}, Z_{j,t-m})``.
    """
    H_i = np.asarray(H_i, dtype=float)
    H_j = np.asarray(H_j, dtype=float)
    k = H_i.shape[0]
    if k == 0:
        return np.zeros(0)
    if H_j.shape != H_i.shape or H_i.shape[1] != 2 * k + 1:
        raise ShapeError("H matrices must both be k x (2k+1)")
    if rho0 == 0.0:
        return np.zeros(2 * k)
    H_jL = H_j[:, ::-1]  # right-multiplication by the exchange matrix
    lhs = np.vstack([np.delete(H_i, k, axis=1), np.delete(H_jL, k, axis=1)])
    rhs = np.concatenate([H_i[:, k], H_j[:, k]])
    try:
        lu = linalg.lu_factor(lhs, check_finite=False)
        if np.min(np.abs(np.diag(lu[0]))) < 1e-13:
            raise linalg.LinAlgError("singular")
        sol = linalg.lu_solve(lu, rhs, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        who = f" for pair {pair}" if pair is not None else ""
        raise DegeneracyError(f"cross-lag system is singular{who}") from exc
    return -rho0 * sol


def _pair_block(H_i, H_j, rho0, pair=None):
    """``corr(Z_{i,t-r}, Z_{j,t-c})`` for r, c in 0..k as a matrix."""
    k = H_i.shape[0]
    rho = cross_lag_correlations(H_i, H_j, rho0, pair=pair)
    # lag m sits at index m + k of the full (-k..k) vector
    full = np.concatenate([rho[:k], [rho0], rho[k:]])
    r = np.arange(k + 1)
    return full[(r[None, :] - r[:, None]) + k]


def build_regime_corr(acfs, contemp, check=True, tol=1e-10):
    """Assemble the (k+1)d block Toeplitz correlation matrix of one regime.

    Parameters
    ----------
    acfs : sequence of d arrays, each of length k + 1
        Autocorrelations (first Toeplitz rows) of the d components.
    contemp : array, shape (d, d)
        Contemporaneous correlation matrix.
    check : bool
        Raise :class:`InfeasibleModelError` if the result is not PD.
    """
    acfs = [np.asarray(a, dtype=float) for a in acfs]
    contemp = np.asarray(contemp, dtype=float)
    d = len(acfs)
    if contemp.shape != (d, d):
        raise ShapeError(f"contemporaneous matrix must be {d}x{d}")
    n = acfs[0].size
    if any(a.size != n for a in acfs):
        raise ShapeError("all autocorrelation vectors need the same length")
    R = np.empty((n * d, n * d))
    r = np.arange(n)
    lag = np.abs(r[None, :] - r[:, None])
    H = [h_matrix(psi_coefficients(a)) for a in acfs]
    for i in range(d):
        R[i::d, i::d] = acfs[i][lag]
        for j in range(i + 1, d):
            block = _pair_block(H[i], H[j], contemp[i, j], pair=(i, j))
            R[i::d, j::d] = block
            R[j::d, i::d] = block.T
    if check and not is_positive_definite(R, tol=tol):
        raise InfeasibleModelError(
            "regime correlation matrix is not positive definite",
            min_eigenvalue=min_eigenvalue(R),
        )
    return R


def extract_subprocess_corr(R, d, idx):
    """Rows/columns of ``R`` for the variables ``idx`` (0-based) in every block."""
    R = np.asarray(R, dtype=float)
    idx = np.atleast_1d(np.asarray(idx, dtype=int))
    if idx.size == 0 or np.any(idx < 0) or np.any(idx >= d) or np.unique(idx).size != idx.size:
        raise ParameterDomainError(f"invalid variable subset {idx.tolist()} for d={d}")
    n_blocks = R.shape[0] // d
    sel = (np.arange(n_blocks)[:, None] * d + idx[None, :]).ravel()
    return R[np.ix_(sel, sel)]

