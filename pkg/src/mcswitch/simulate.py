"""Exact simulation of regime sequences and observations."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .margins import normal_to_margin
from .exceptions import ParameterDomainError


@dataclass(frozen=True)
class SimOutput:
    """Simulated observations ``x`` (T, d), normal scores ``y``, regimes ``v`` (0-based)."""

    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    seed: object
    generator: str = "PCG64"


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def sample_regimes(chain, T, seed=None):
    """Markov chain path of length ``T`` with 0-based regime labels."""
    T = int(T)
    if T < 1:
        raise ParameterDomainError("T must be positive")
    rng = _rng(seed)
    G = chain.n_regimes
    u = rng.random(T)
    cum_init = np.cumsum(chain.p_init)
    cum_M = np.cumsum(chain.transition, axis=1)
    v = np.empty(T, dtype=int)
    v[0] = min(int(np.searchsorted(cum_init, u[0], side="right")), G - 1)
    for t in range(1, T):
        v[t] = min(int(np.searchsorted(cum_M[v[t - 1]], u[t], side="right")), G - 1)
    return v


def sample_series(model, T, seed=None, regimes=None):
    """Simulate ``T`` observations; ``regimes`` fixes the label path if given.

    Normal scores are drawn one step at a time from the conditional Gaussian
    given the last ``min(t, k)`` scores and their regime labels, then mapped
    through each regime's margin quantile.
    """
    T = int(T)
    if T < 1:
        raise ParameterDomainError("T must be positive")
    rng = _rng(seed)
    model.check_feasible()
    if regimes is None:
        v = sample_regimes(model.chain, T, rng)
    else:
        v = np.asarray(regimes, dtype=int)
        if v.shape != (T,) or v.min() < 0 or v.max() >= model.G:
            raise ParameterDomainError("regime path does not match T and G")
    d, k = model.d, model.k
    z = rng.standard_normal((T, d))
    y = np.empty((T, d))
    chol = {}
    for t in range(T):
        labels = tuple(v[max(0, t - k):t + 1].tolist())
        rep = model.conditional(labels)
        if labels not in chol:
            chol[labels] = linalg.cholesky(rep.innov_cov, lower=True)
        mean = np.zeros(d)
        for m in range(1, rep.n_lags + 1):
            mean += rep.coefs[m - 1] @ y[t - m]
        y[t] = mean + chol[labels] @ z[t]
    if model.margins is None:
        x = y.copy()
    else:
        x = np.empty_like(y)
        for g in range(model.G):
            idx = np.flatnonzero(v == g)
            for i in range(d):
                x[idx, i] = normal_to_margin(y[idx, i], model.margins[i, g])
    return SimOutput(x, y, v, seed if not isinstance(seed, np.random.Generator) else None)
