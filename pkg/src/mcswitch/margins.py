"""Skew-t univariate margins and probability integral transforms.

The margin family is the two-tailweight skew-t of Jones and Faddy,

    f(t; a, b) = C^{-1} (1 + t/s)^{a + 1/2} (1 - t/s)^{b + 1/2},
    s = sqrt(a + b + t^2),  C = 2^{a + b - 1} B(a, b) sqrt(a + b),

extended by location and scale. ``a`` governs the left tail (density decays
like |t|^{-(2a+1)}), ``b`` the right tail. With a == b it is Student t with
2a degrees of freedom. The map t -> (1 + t/s)/2 is Beta(a, b) distributed,
which gives the cdf and quantile through the regularized incomplete beta
function.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .exceptions import ConvergenceError, InsufficientDataError, ParameterDomainError

LOG_2PI = np.log(2.0 * np.pi)

#: Tail probabilities are clamped here before the inverse normal cdf.
CDF_CLAMP = 1e-15

_MIN_TAIL = 0.05
_MAX_TAIL = 500.0


@dataclass(frozen=True)
class MarginParams:
    """Location, scale, left and right tailweight of one skew-t margin."""

    location: float
    scale: float
    left_tailweight: float
    right_tailweight: float

    def __post_init__(self):
        vals = (self.location, self.scale, self.left_tailweight, self.right_tailweight)
        if not all(np.isfinite(v) for v in vals):
            raise ParameterDomainError(f"non-finite skew-t parameters {vals}")
        if self.scale <= 0:
            raise ParameterDomainError(f"scale must be positive, got {self.scale}")
        if self.left_tailweight <= 0 or self.right_tailweight <= 0:
            raise ParameterDomainError(
                "tailweights must be positive, got "
                f"({self.left_tailweight}, {self.right_tailweight})"
            )

    def as_array(self):
        return np.array(
            [self.location, self.scale, self.left_tailweight, self.right_tailweight]
        )

    @classmethod
    def from_array(cls, values):
        loc, scale, a, b = (float(v) for v in values)
        return cls(loc, scale, a, b)


def _coerce(eta):
    if isinstance(eta, MarginParams):
        return eta
    return MarginParams.from_array(eta)


def _standardize(x, eta):
    return (np.asarray(x, dtype=float) - eta.location) / eta.scale


def _log_halves(t, a, b):
    """Return log((1 + t/s)/2) and log((1 - t/s)/2) without cancellation."""
    ab = a + b
    s = np.hypot(t, np.sqrt(ab))
    # (1 - t/s) = (a + b) / (s (s + t)) for t >= 0, and symmetrically below 0.
    pos = t >= 0
    abs_t = np.abs(t)
    log_small = np.log(ab) - np.log(s) - np.log(s + abs_t)
    log_big = np.log1p(abs_t / s)
    log_plus = np.where(pos, log_big, log_small) - np.log(2.0)
    log_minus = np.where(pos, log_small, log_big) - np.log(2.0)
    return log_plus, log_minus


def _log_norm_const(a, b):
    return (a + b - 1.0) * np.log(2.0) + special.betaln(a, b) + 0.5 * np.log(a + b)


def skewt_logpdf(x, eta):
    """Log-density of the skew-t margin at ``x`` (scalar or array)."""
    eta = _coerce(eta)
    a, b = eta.left_tailweight, eta.right_tailweight
    t = _standardize(x, eta)
    log_plus, log_minus = _log_halves(t, a, b)
    # (1 + t/s) = 2 * exp(log_plus)
    out = (
        (a + 0.5) * (log_plus + np.log(2.0))
        + (b + 0.5) * (log_minus + np.log(2.0))
        - _log_norm_const(a, b)
        - np.log(eta.scale)
    )
    return out[()] if np.ndim(out) == 0 else out


def skewt_pdf(x, eta):
    return np.exp(skewt_logpdf(x, eta))


def _tail_probs(x, eta):
    """Return (F(x), 1 - F(x)), each computed directly for accuracy."""
    a, b = eta.left_tailweight, eta.right_tailweight
    t = _standardize(x, eta)
    log_plus, log_minus = _log_halves(t, a, b)
    z = np.exp(log_plus)
    zc = np.exp(log_minus)
    lower = special.betainc(a, b, z)
    upper = special.betainc(b, a, zc)
    return lower, upper


def skewt_cdf(x, eta):
    """Distribution function of the skew-t margin."""
    eta = _coerce(eta)
    lower, _ = _tail_probs(x, eta)
    return lower[()] if np.ndim(lower) == 0 else lower


def skewt_sf(x, eta):
    """Survival function 1 - F(x), accurate in the right tail."""
    eta = _coerce(eta)
    _, upper = _tail_probs(x, eta)
    return upper[()] if np.ndim(upper) == 0 else upper


def _t_from_beta(z, zc, a, b):
    return (z - zc) * np.sqrt(a + b) / (2.0 * np.sqrt(z * zc))


def skewt_quantile(p, eta):
    """Inverse cdf; ``cdf(quantile(p)) == p`` to about 1e-12."""
    eta = _coerce(eta)
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise ParameterDomainError("quantile level must lie strictly inside (0, 1)")
    a, b = eta.left_tailweight, eta.right_tailweight
    low = p <= 0.5
    z = np.where(low, special.betaincinv(a, b, np.where(low, p, 0.5)), 0.0)
    zc = np.where(low, 0.0, special.betaincinv(b, a, np.where(low, 0.5, 1.0 - p)))
    z = np.where(low, z, 1.0 - zc)
    zc = np.where(low, 1.0 - z, zc)
    t = _t_from_beta(z, zc, a, b)
    x = eta.location + eta.scale * t

    # Newton polish on whichever tail is smaller; betaincinv is already close.
    for _ in range(3):
        lower, upper = _tail_probs(x, eta)
        resid = np.where(low, lower - p, (1.0 - p) - upper)
        dens = np.exp(skewt_logpdf(x, eta))
        step = np.where(dens > 0, resid / np.where(dens > 0, dens, 1.0), 0.0)
        ok = np.isfinite(step) & (np.abs(step) < eta.scale)
        x = np.where(ok, x - step, x)

    x = np.array(x, dtype=float)
    flat_x, flat_p = x.reshape(-1), p.reshape(-1)
    for j in np.flatnonzero(~np.isfinite(flat_x)):
        flat_x[j] = _bracketed_quantile(float(flat_p[j]), eta)
    return x[()] if x.ndim == 0 else x


def _bracketed_quantile(p, eta):
    lo, hi = eta.location - eta.scale, eta.location + eta.scale
    while skewt_cdf(lo, eta) > p:
        lo = eta.location - 2.0 * (eta.location - lo)
    while skewt_cdf(hi, eta) < p:
        hi = eta.location + 2.0 * (hi - eta.location)
    return optimize.brentq(lambda v: skewt_cdf(v, eta) - p, lo, hi, xtol=1e-14, rtol=1e-14)


def skewt_rvs(eta, size, rng):
    """Draw from the margin using the Beta representation."""
    eta = _coerce(eta)
    a, b = eta.left_tailweight, eta.right_tailweight
    z = rng.beta(a, b, size=size)
    t = _t_from_beta(z, 1.0 - z, a, b)
    return eta.location + eta.scale * t


def pit_to_normal(x, eta, return_clamped=False):
    """Normal score ``Phi^{-1}(F(x))`` of observations under margin ``eta``.

    Tail probabilities below ``CDF_CLAMP`` are clamped so the score stays
    finite. With ``return_clamped`` the number of clamped entries is returned
    as a second value.
    """
    eta = _coerce(eta)
    lower, upper = _tail_probs(x, eta)
    use_lower = lower <= upper
    tail = np.where(use_lower, lower, upper)
    clamped = tail < CDF_CLAMP
    tail = np.maximum(tail, CDF_CLAMP)
    z = special.ndtri(tail)
    y = np.where(use_lower, z, -z)
    y = y[()] if np.ndim(y) == 0 else y
    if return_clamped:
        return y, int(np.count_nonzero(clamped))
    return y


def normal_to_margin(y, eta):
    """Inverse of :func:`pit_to_normal`: ``F^{-1}(Phi(y))``.

    Positive scores go through the upper tail. Reflecting ``x -> -x`` swaps
    the tailweights, so no precision is lost near probability one.
    """
    eta = _coerce(eta)
    y = np.asarray(y, dtype=float)
    lower = special.ndtr(-np.abs(y))
    lower = np.clip(lower, CDF_CLAMP, 0.5)
    left = skewt_quantile(lower, eta)
    mirror = MarginParams(-eta.location, eta.scale, eta.right_tailweight, eta.left_tailweight)
    right = -skewt_quantile(lower, mirror)
    out = np.where(y <= 0, left, right)
    return out[()] if out.ndim == 0 else out


def log_pit_derivative(x, eta):
    """Log of the Jacobian ``f(x) / phi(Phi^{-1}(F(x)))``."""
    eta = _coerce(eta)
    y = pit_to_normal(x, eta)
    return skewt_logpdf(x, eta) + 0.5 * np.square(y) + 0.5 * LOG_2PI


def pit_derivative(x, eta):
    return np.exp(log_pit_derivative(x, eta))


def skewt_loglik(samples, eta, weights=None):
    lp = skewt_logpdf(np.asarray(samples, dtype=float), eta)
    if weights is None:
        return float(np.sum(lp))
    return float(np.dot(weights, lp))


def _weighted_quantile(x, w, q):
    order = np.argsort(x)
    cw = np.cumsum(w[order])
    cw /= cw[-1]
    return np.interp(q, cw, x[order])


def initial_margin(samples, weights=None):
    """Moment-style starting point: median, IQR-matched scale, t_6 tails."""
    x = np.asarray(samples, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    q25, q50, q75 = _weighted_quantile(x, w, [0.25, 0.5, 0.75])
    iqr = q75 - q25
    if not iqr > 0:
        mean = np.average(x, weights=w)
        iqr = 1.349 * np.sqrt(np.average((x - mean) ** 2, weights=w))
    # interquartile range of Student t with 6 df is about 1.436
    return MarginParams(float(q50), float(iqr / 1.436), 3.0, 3.0)


def _to_free(eta):
    return np.array(
        [eta.location, np.log(eta.scale), np.log(eta.left_tailweight), np.log(eta.right_tailweight)]
    )


def _from_free(z):
    return MarginParams(float(z[0]), float(np.exp(z[1])), float(np.exp(z[2])), float(np.exp(z[3])))


def fit_margin(samples, weights=None, init=None, tol=1e-8, maxiter=500):
    """Maximum-likelihood skew-t fit to i.i.d. samples (optionally weighted).

    Raises InsufficientDataError for fewer than 5 effective samples or
    constant data, and ConvergenceError (with ``best``) if no optimizer run
    produces a finite improvement.
    """
    x = np.asarray(samples, dtype=float).ravel()
    w = None if weights is None else np.asarray(weights, dtype=float).ravel()
    if w is not None:
        keep = w > 0
        x, w = x[keep], w[keep]
    if w is None or x.size == 0:
        n_eff = x.size
    else:
        n_eff = float(np.sum(w) ** 2 / np.sum(w**2))
    if x.size < 5 or n_eff < 5:
        raise InsufficientDataError(f"need at least 5 samples to fit a margin, got {x.size}")
    if np.ptp(x) <= 1e-12 * max(1.0, np.max(np.abs(x))):
        raise InsufficientDataError("samples show no variation")

    eta0 = _coerce(init) if init is not None else initial_margin(x, w)
    wn = np.ones_like(x) if w is None else w / np.mean(w)
    n = float(np.sum(wn))

    def nll(z):
        if np.any(z[2:] < np.log(_MIN_TAIL)) or np.any(z[2:] > np.log(_MAX_TAIL)):
            return np.inf
        val = -np.dot(wn, skewt_logpdf(x, _from_free(z))) / n
        return val if np.isfinite(val) else np.inf

    z0 = _to_free(eta0)
    f0 = nll(z0)
    bounds = [(None, None), (None, None), (np.log(_MIN_TAIL), np.log(_MAX_TAIL)),
              (np.log(_MIN_TAIL), np.log(_MAX_TAIL))]
    res = optimize.minimize(
        nll, z0, method="L-BFGS-B", jac="3-point", bounds=bounds,
        options={"ftol": tol, "gtol": 1e-9, "maxiter": maxiter},
    )
    best_z, best_f = (res.x, res.fun) if np.isfinite(res.fun) and res.fun <= f0 else (z0, f0)
    if not res.success:
        nm = optimize.minimize(
            nll, best_z, method="Nelder-Mead",
            options={"xatol": 1e-8, "fatol": tol, "maxiter": 20 * maxiter},
        )
        if np.isfinite(nm.fun) and nm.fun <= best_f:
            best_z, best_f = nm.x, nm.fun
        if not (res.success or nm.success) and not best_f < f0:
            raise ConvergenceError("skew-t fit did not converge", best=_from_free(best_z))
    return _from_free(best_z)
