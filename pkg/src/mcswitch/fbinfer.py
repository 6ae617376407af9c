"""Forward-backward recursions over regime tuples, run probabilities and dating.

Because an observation depends on the regimes of up to ``k`` earlier time
points, the hidden state at time ``t`` is the tuple ``(v_{t-k}, ..., v_t)``
(shorter for ``t < k``). Tuples are encoded as base-G integers with the oldest
regime as the most significant digit. All tables are in log space.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import ParameterDomainError
from .switchcov import conditional_logdensity
from .validation import check_series


@dataclass(frozen=True)
class UpdateConfig:
    """Run-probability span ``tau``, confirmation length ``nu`` and threshold ``xi``."""

    tau: int = 0
    nu: int = 3
    xi: float = 0.8

    def __post_init__(self):
        if int(self.tau) != self.tau or self.tau < 0:
            raise ParameterDomainError("tau must be a nonnegative integer")
        if int(self.nu) != self.nu or self.nu < 1:
            raise ParameterDomainError("nu must be a positive integer")
        if not 0.0 < self.xi < 1.0:
            raise ParameterDomainError("xi must lie in (0, 1)")


def _digits(codes, G, length):
    """Digits (oldest first) of base-G codes, shape (n, length)."""
    powers = G ** np.arange(length - 1, -1, -1)
    return (codes[:, None] // powers[None, :]) % G


def emission_tables(model, y_all, jac):
    """Log emission terms per time and tuple.

    ``y_all`` and ``jac`` are the per-regime normal scores (G, T, d) and log
    Jacobians (G, T, d). Returns a list whose entry ``t`` has length
    ``G**(min(t, k) + 1)``.
    """
    G, T, _ = y_all.shape
    k = model.k
    lj = jac.sum(axis=-1)
    tables = []
    for t in range(min(k, T)):
        L = t + 1
        codes = np.arange(G ** L)
        e = np.empty(codes.size)
        for c, labels in zip(codes, _digits(codes, G, L)):
            rep = model.conditional(tuple(labels))
            y_now = y_all[labels[-1], t][None, :]
            past = np.stack([y_all[labels[L - 1 - m], t - m] for m in range(1, L)])[None] if L > 1 else None
            e[c] = conditional_logdensity(y_now, past, rep)[0] + lj[labels[-1], t]
        tables.append(e)
    if T > k:
        L = k + 1
        ts = np.arange(k, T)
        full = np.empty((ts.size, G ** L))
        for c, labels in enumerate(_digits(np.arange(G ** L), G, L)):
            rep = model.conditional(tuple(labels))
            y_now = y_all[labels[-1], ts]
            past = np.stack([y_all[labels[L - 1 - m], ts - m] for m in range(1, L)], axis=1)
            full[:, c] = conditional_logdensity(y_now, past, rep) + lj[labels[-1], ts]
        tables.extend(full)
    return tables


@dataclass
class ForwardBackward:
    """Log forward/backward tables and the marginal log-likelihood."""

    log_alpha: list
    log_beta: list
    loglik: float
    n_regimes: int
    k: int

    def tuple_posterior(self, t):
        """Posterior probabilities of the regime tuple ending at ``t``."""
        return np.exp(self.log_alpha[t] + self.log_beta[t] - self.loglik)

    def run_prob(self, tau):
        """``P(V_t = ... = V_{t+tau} = g | x)`` as a (T, G) array.

        Near the end of the series the run is truncated at the last time point.
        """
        if int(tau) != tau or tau < 0 or tau > self.k:
            raise ParameterDomainError(f"tau must be an integer in [0, {self.k}]")
        G = self.n_regimes
        T = len(self.log_alpha)
        out = np.empty((T, G))
        post = [None] * T
        for t in range(T):
            s = min(t + tau, T - 1)
            m = s - t + 1
            if post[s] is None:
                post[s] = self.tuple_posterior(s)
            codes = np.arange(post[s].size)
            tail = codes % G ** m
            step = (G ** m - 1) // (G - 1) if G > 1 else 0
            for g in range(G):
                out[t, g] = post[s][tail == g * step].sum()
        return np.clip(out, 0.0, 1.0)


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def forward(tables, p_init, transition, k):
    """Log forward tables; entry ``t`` is indexed by the tuple ending at ``t``."""
    G = len(p_init)
    logM = _log(np.asarray(transition, dtype=float))
    la = [_log(np.asarray(p_init, dtype=float)) + tables[0]]
    for t in range(1, len(tables)):
        codes = np.arange(tables[t].size)
        prev = codes // G
        if t <= k:
            s = la[t - 1][prev]
        else:
            # sum out the oldest regime of the previous tuple
            s = logsumexp(la[t - 1].reshape(G, -1), axis=0)[prev]
        la.append(s + logM[prev % G, codes % G] + tables[t])
    return la


def backward(tables, transition):
    """Log backward tables, zero at the last time point."""
    T = len(tables)
    G = np.asarray(transition).shape[0]
    logM = _log(np.asarray(transition, dtype=float))
    lb = [None] * T
    lb[T - 1] = np.zeros(tables[T - 1].size)
    for t in range(T - 2, -1, -1):
        n = tables[t].size
        n_next = tables[t + 1].size
        codes = np.arange(n)
        if n_next == n * G:
            base = codes
        else:
            base = codes % (n_next // G)  # drop the oldest regime
        nxt = base[:, None] * G + np.arange(G)[None, :]
        terms = logM[codes % G] + tables[t + 1][nxt] + lb[t + 1][nxt]
        lb[t] = logsumexp(terms, axis=1)
    return lb


def forward_backward(x, model, scores=None):
    """Run both recursions for ``x`` under ``model``.

    ``scores`` may carry precomputed ``model.normal_scores(x)``.
    """
    x = check_series(x)
    y_all, jac = model.normal_scores(x) if scores is None else scores
    tables = emission_tables(model, y_all, jac)
    la = forward(tables, model.p_init, model.transition, model.k)
    lb = backward(tables, model.transition)
    loglik = float(logsumexp(la[-1]))
    return ForwardBackward(la, lb, loglik, model.G, model.k)


def marginal_loglik(x, model, scores=None):
    """Log-likelihood with the regime sequence summed out."""
    x = check_series(x)
    y_all, jac = model.normal_scores(x) if scores is None else scores
    tables = emission_tables(model, y_all, jac)
    la = forward(tables, model.p_init, model.transition, model.k)
    return float(logsumexp(la[-1]))


def run_prob(x, model, tau=0):
    return forward_backward(x, model).run_prob(tau)


def date_regimes(probs, cfg=None):
    """Date a regime sequence (0-based) from run probabilities.

    The first regime is the most probable one at the first time point. A
    switch to ``g'`` is dated at ``t`` when ``probs[t:t+nu+1, g']`` all exceed
    ``xi``; scanning then resumes at ``t + 1``.
    """
    cfg = UpdateConfig() if cfg is None else cfg
    probs = np.asarray(probs, dtype=float)
    T, G = probs.shape
    nu, xi = int(cfg.nu), float(cfg.xi)
    v = np.empty(T, dtype=int)
    cur = int(np.argmax(probs[0]))
    start = 0
    for t in range(1, T - nu):
        window_min = probs[t:t + nu + 1].min(axis=0)
        window_min[cur] = -np.inf
        best = int(np.argmax(window_min))  # argmax picks the lowest index on ties
        if window_min[best] > xi:
            v[start:t] = cur
            cur, start = best, t
    v[start:] = cur
    return v


def hmm_forward_backward(log_emis, p_init, transition):
    """Ordinary HMM smoothing for a (T, G) table of log emissions.

    Returns ``(gamma, xi_sum, loglik)`` with state posteriors ``gamma`` (T, G)
    and expected transition counts ``xi_sum`` (G, G).
    """
    log_emis = np.asarray(log_emis, dtype=float)
    T, G = log_emis.shape
    logM = _log(np.asarray(transition, dtype=float))
    la = np.empty((T, G))
    lb = np.zeros((T, G))
    la[0] = _log(np.asarray(p_init, dtype=float)) + log_emis[0]
    for t in range(1, T):
        la[t] = logsumexp(la[t - 1][:, None] + logM, axis=0) + log_emis[t]
    for t in range(T - 2, -1, -1):
        lb[t] = logsumexp(logM + (log_emis[t + 1] + lb[t + 1])[None, :], axis=1)
    loglik = float(logsumexp(la[-1]))
    gamma = np.exp(la + lb - loglik)
    if T > 1:
        pair = la[:-1, :, None] + logM[None] + (log_emis[1:] + lb[1:])[:, None, :] - loglik
        xi_sum = np.exp(pair).sum(axis=0)
    else:
        xi_sum = np.zeros((G, G))
    return gamma, xi_sum, loglik
