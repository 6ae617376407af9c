"""Complete-data and per-segment log-likelihoods given a regime sequence."""

from dataclasses import dataclass

import numpy as np

from .margins import log_pit_derivative, pit_to_normal
from .switchcov import conditional_logdensity, conditional_rep, window_logdensity
from .validation import check_labels, check_series
from .exceptions import ShapeError


@dataclass(frozen=True)
class SegmentPartition:
    """Maximal constant runs of a regime sequence (0-based, half-open)."""

    starts: np.ndarray
    regimes: np.ndarray
    length: int

    @property
    def n_switches(self):
        return self.starts.size - 1

    @property
    def switch_times(self):
        return self.starts[1:]

    @property
    def ends(self):
        return np.append(self.starts[1:], self.length)

    def bounds(self, s):
        return int(self.starts[s]), int(self.ends[s])

    def segments_of(self, g):
        """``(start, end)`` pairs of every run in regime ``g``."""
        ends = self.ends
        return [(int(a), int(b)) for a, b, r in zip(self.starts, ends, self.regimes) if r == g]

    def to_labels(self):
        return np.repeat(self.regimes, np.diff(np.append(self.starts, self.length)))


def partition_segments(v):
    v = check_labels(v)
    change = np.flatnonzero(np.diff(v)) + 1
    starts = np.concatenate([[0], change]).astype(int)
    return SegmentPartition(starts, v[starts].copy(), int(v.size))


def window_groups(v, k):
    """Group time indices by the label window ``v[max(0, t-k) : t+1]``."""
    v = np.asarray(v, dtype=int)
    groups = {}
    for t in range(v.size):
        key = tuple(v[max(0, t - k):t + 1].tolist())
        groups.setdefault(key, []).append(t)
    return {key: np.asarray(ts) for key, ts in groups.items()}


def _lagged(y, ts, m):
    """Array (n, m, d) with ``y[t-1], ..., y[t-m]`` for each ``t`` in ``ts``."""
    return y[ts[:, None] - np.arange(1, m + 1)[None, :]]


def conditional_terms(y, logjac, groups, model):
    """Per-time log conditional densities for pre-transformed scores.

    ``y`` (T, d) and ``logjac`` (T,) are the normal scores and summed log
    Jacobians under the labelling that produced ``groups``.
    """
    out = np.empty(y.shape[0])
    for key, ts in groups.items():
        rep = model.conditional(key)
        m = len(key) - 1
        out[ts] = conditional_logdensity(y[ts], _lagged(y, ts, m), rep)
    return out + logjac


def labelled_scores(x, v, model):
    """Normal scores and summed log Jacobians under the labelling ``v``."""
    y_all, jac = model.normal_scores(x)
    t = np.arange(len(v))
    return y_all[v, t], jac[v, t].sum(axis=-1)


def conditional_logdensities(x, v, model):
    """``log f(x_t | x_{t-min(t,k)}, ..., x_{t-1}; v)`` for every t."""
    x = check_series(x)
    v = check_labels(v, model.G, x.shape[0])
    y, lj = labelled_scores(x, v, model)
    return conditional_terms(y, lj, window_groups(v, model.k), model)


def complete_loglik(x, v, model):
    """Log joint density of ``x`` given the regime sequence ``v`` (0-based labels)."""
    return float(np.sum(conditional_logdensities(x, v, model)))


def _scores_1d(x, eta):
    if eta is None:
        return np.asarray(x, dtype=float), np.zeros(np.size(x))
    return pit_to_normal(x, eta), log_pit_derivative(x, eta)


def _segment_gaussian(y, R, d, k):
    """Log-density of a constant-regime stretch of scores ``y`` (n, d).

    Short stretches (n <= k + 1) use one joint density; longer ones use the
    joint density of the first k + 1 points and then one-step conditionals.
    """
    n = y.shape[0]
    if n <= k + 1:
        return float(window_logdensity(y[::-1].ravel(), R[:n * d, :n * d]))
    head = float(window_logdensity(y[k::-1].ravel(), R[:(k + 1) * d, :(k + 1) * d]))
    rep = conditional_rep(R[:(k + 1) * d, :(k + 1) * d], d)
    ts = np.arange(k + 1, n)
    return head + float(np.sum(conditional_logdensity(y[ts], _lagged(y, ts, k), rep)))


def segment_loglik_multivariate(x, partition, s, model):
    """Log-likelihood of segment ``s`` on its own, regime held constant."""
    x = check_series(x)
    a, b = partition.bounds(s)
    g = int(partition.regimes[s])
    y_all, jac = model.normal_scores(x[a:b])
    R = model.regime_corr(g)
    return _segment_gaussian(y_all[g], R, model.d, model.k) + float(jac[g].sum())


def segment_loglik_univariate(x_i, partition, s, eta, R_i):
    """Univariate analogue of :func:`segment_loglik_multivariate`.

    ``eta`` is the skew-t margin (``None`` for scores already standard normal)
    and ``R_i`` the (k+1) x (k+1) Toeplitz correlation of the component.
    """
    x_i = np.asarray(x_i, dtype=float).ravel()
    R_i = np.asarray(R_i, dtype=float)
    if R_i.ndim != 2 or R_i.shape[0] != R_i.shape[1]:
        raise ShapeError("univariate correlation must be a square matrix")
    a, b = partition.bounds(s)
    y, lj = _scores_1d(x_i[a:b], eta)
    k = R_i.shape[0] - 1
    return _segment_gaussian(y[:, None], R_i, 1, k) + float(np.sum(lj))


def stationary_reps(R, d):
    """Conditional representations given 0..k past blocks of a regime matrix."""
    n_blocks = R.shape[0] // d
    return [conditional_rep(R[:(m + 1) * d, :(m + 1) * d], d) for m in range(n_blocks)]


def segments_loglik(y, segments, reps):
    """Sum of stationary segment Gaussian log-densities for scores ``y`` (T, d).

    ``segments`` lists half-open ``(start, end)`` ranges sharing one regime and
    ``reps`` comes from :func:`stationary_reps`. Jacobians are not included.
    """
    if not segments:
        return 0.0
    k = len(reps) - 1
    ts = np.concatenate([np.arange(a, b) for a, b in segments])
    offs = np.concatenate([np.arange(b - a) for a, b in segments])
    m = np.minimum(offs, k)
    total = 0.0
    for lag in np.unique(m):
        sel = ts[m == lag]
        total += float(np.sum(conditional_logdensity(y[sel], _lagged(y, sel, lag), reps[lag])))
    return total
