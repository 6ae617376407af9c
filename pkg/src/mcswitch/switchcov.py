"""Window correlation matrices across regime switches and conditional Gaussian pieces.

A window is given by its regime labels in chronological order (oldest first,
0-based regime indices). Matrices are ordered newest-first, block ``r``
holding ``Y_{t-r}``. Inside a constant run the correlation is the leading
sub-block of that regime's block Toeplitz matrix. The first observation of a
run is linked to the preceding run through the diagonal switch matrix ``P``:
``cov(Y_s, Y_{s-1-r}) = P corr(Y_{s-1}, Y_{s-1-r})``. Blocks between runs that
are not adjacent are zero.
"""

from dataclasses import dataclass
from itertools import groupby

import numpy as np
from scipy import linalg

from .exceptions import DegeneracyError, InfeasibleModelError, ShapeError
from .serialcorr import is_positive_definite, min_eigenvalue

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class RegimeWindow:
    """Regime labels of a window, oldest first."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(int(g) for g in self.labels)
        if len(labels) == 0:
            raise ShapeError("a window needs at least one label")
        if min(labels) < 0:
            raise ShapeError("regime labels must be nonnegative")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    def runs(self):
        """Constant runs as ``(regime, length)`` pairs, newest run first."""
        return [(g, len(list(grp))) for g, grp in groupby(self.labels[::-1])]

    @property
    def n_switches(self):
        return len(self.runs()) - 1


@dataclass(frozen=True)
class StochasticRep:
    """``Y_t = sum_m coefs[m-1] Y_{t-m} + eps``, ``eps ~ N(0, innov_cov)``."""

    coefs: np.ndarray
    innov_cov: np.ndarray

    @property
    def n_lags(self):
        return self.coefs.shape[0]


def _as_window(window):
    return window if isinstance(window, RegimeWindow) else RegimeWindow(tuple(window))


def build_window_corr(window, regime_corrs, switch_rho, check=False, tol=1e-10):
    """Correlation matrix of ``(Y_t, ..., Y_{t-w+1})`` given the window labels.

    Parameters
    ----------
    window : RegimeWindow or sequence of int
        Labels, oldest first.
    regime_corrs : sequence or callable
        ``regime_corrs[g]`` (or ``regime_corrs(g, n_blocks)``) is the newest-first
        block Toeplitz matrix of regime ``g`` with enough blocks for the longest run.
    switch_rho : array, shape (d,)
        Diagonal of the switch correlation matrix ``P``.
    """
    window = _as_window(window)
    rho = np.asarray(switch_rho, dtype=float)
    d = rho.size
    runs = window.runs()

    def corr_of(g, n_blocks):
        if callable(regime_corrs):
            R = regime_corrs(g, n_blocks)
        else:
            R = np.asarray(regime_corrs[g])
        if R.shape[0] < n_blocks * d:
            raise ShapeError(f"regime {g} matrix has fewer than {n_blocks} blocks")
        return R

    w = len(window)
    W = np.zeros((w * d, w * d))
    start = 0
    prev = None  # (start block, length, regime) of the newer neighbour
    for g, e in runs:
        R = corr_of(g, e)
        sl = slice(start * d, (start + e) * d)
        W[sl, sl] = R[:e * d, :e * d]
        if prev is not None:
            p_start, p_len, _ = prev
            row = p_start + p_len - 1
            block = rho[:, None] * R[:d, :e * d]
            W[row * d:(row + 1) * d, sl] = block
            W[sl, row * d:(row + 1) * d] = block.T
        prev = (start, e, g)
        start += e
    if check and not is_positive_definite(W, tol=tol):
        raise InfeasibleModelError(
            f"window correlation is not positive definite for labels {window.labels}",
            labels=window.labels,
            min_eigenvalue=min_eigenvalue(W),
        )
    return W


def conditional_rep(W, d):
    """Regress the newest block of ``W`` on the remaining blocks."""
    W = np.asarray(W, dtype=float)
    n_blocks = W.shape[0] // d
    if W.shape != (n_blocks * d, n_blocks * d):
        raise ShapeError("window matrix size is not a multiple of d")
    if n_blocks == 1:
        return StochasticRep(np.zeros((0, d, d)), W.copy())
    s12 = W[:d, d:]
    s22 = W[d:, d:]
    try:
        cf = linalg.cho_factor(s22, lower=True)
    except linalg.LinAlgError as exc:
        raise DegeneracyError("conditioning block is not positive definite") from exc
    B = linalg.cho_solve(cf, s12.T).T
    sigma = W[:d, :d] - B @ s12.T
    sigma = 0.5 * (sigma + sigma.T)
    coefs = B.reshape(d, n_blocks - 1, d).transpose(1, 0, 2)
    return StochasticRep(coefs, sigma)


def gaussian_logpdf(z, cov):
    """Zero-mean Gaussian log-density of the rows of ``z`` (last axis = dimension)."""
    z = np.asarray(z, dtype=float)
    try:
        chol = linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise InfeasibleModelError("covariance is not positive definite") from exc
    flat = z.reshape(-1, z.shape[-1])
    sol = linalg.solve_triangular(chol, flat.T, lower=True)
    quad = np.sum(sol * sol, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    out = -0.5 * (quad + logdet + z.shape[-1] * LOG_2PI)
    return out.reshape(z.shape[:-1])


def window_logdensity(y, W):
    """Log-density of stacked newest-first normal scores ``y`` under ``N(0, W)``."""
    return gaussian_logpdf(y, W)


def conditional_logdensity(y_now, y_past, rep):
    """Log-density of ``y_now`` given ``y_past`` under a stochastic representation.

    ``y_now`` has shape (n, d); ``y_past`` has shape (n, m, d), newest lag first.
    """
    y_now = np.asarray(y_now, dtype=float)
    resid = y_now
    if rep.n_lags:
        resid = y_now - np.einsum("mij,nmj->ni", rep.coefs, y_past)
    return gaussian_logpdf(resid, rep.innov_cov)


def obs_window_logdensity(x, window, model):
    """Joint log-density of an observed window ``x`` (w x d, oldest row first)."""
    from .margins import log_pit_derivative, pit_to_normal

    window = _as_window(window)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != len(window):
        raise ShapeError("window observations must have one row per label")
    y = np.empty_like(x)
    jac = 0.0
    for r, g in enumerate(window.labels):
        for i in range(x.shape[1]):
            eta = model.margins[i, g]
            y[r, i] = pit_to_normal(x[r, i], eta)
            jac += float(log_pit_derivative(x[r, i], eta))
    W = model.window_corr(window.labels)
    return float(window_logdensity(y[::-1].ravel(), W)) + jac
