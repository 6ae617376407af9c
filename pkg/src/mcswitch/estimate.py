"""Stage-wise estimation, chain MLE, parameter counting and AIC scans.

Three fitting routes are provided:

* ``fit_with_regimes``: the regime sequence is known. Margins, then each
  component's serial correlation, then each regime's contemporaneous
  correlation, then the switch correlations are estimated in turn.
* ``fit_multistage``: regimes are latent. An independence HMM gives margins
  and the chain; serial, contemporaneous and switch correlations then
  maximize the marginal likelihood one group at a time.
* ``fit_iterative``: alternate between dating regimes and
  ``fit_with_regimes`` until the dated sequence stops changing.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .exceptions import DegeneracyError, InsufficientDataError, MCSwitchError, ParameterDomainError
from .fbinfer import UpdateConfig, date_regimes, emission_tables, forward, forward_backward, hmm_forward_backward
from .likelihood import (
    conditional_terms,
    partition_segments,
    segments_loglik,
    stationary_reps,
    window_groups,
)
from .margins import fit_margin, log_pit_derivative, pit_to_normal, skewt_logpdf, skewt_quantile
from .mcvar import build_regime_corr
from .model import ChainParams, RegimeModel
from .reparam import BOUND, corr_from_free, free_from_corr, nearest_corr, to_unit
from .serialcorr import is_positive_definite, pacf_to_acf, toeplitz_corr
from .validation import check_labels, check_series

PENALTY = 1e6


@dataclass
class StageResult:
    start: float
    value: float
    converged: bool
    n_evals: int


@dataclass
class FitReport:
    """Outcome of a fit. ``loglik`` is the criterion that ``aic`` is built on."""

    model: RegimeModel
    loglik: float
    n_params: int
    mode: str
    stages: dict = field(default_factory=dict)
    regimes: np.ndarray = None
    n_iter: int = 1
    flags: list = field(default_factory=list)

    @property
    def aic(self):
        return 2.0 * self.n_params - 2.0 * self.loglik

    @property
    def converged(self):
        return all(s.converged for s in self.stages.values())

    def stage_logliks(self):
        return {name: s.value for name, s in self.stages.items()}


# ---------------------------------------------------------------------------
# optimizer plumbing


def _maximize(objective, z0, bounds=BOUND, maxiter=500, rtol=1e-6):
    """Maximize ``objective`` starting at ``z0``; never returns worse than ``z0``.

    Infeasible points should return ``-inf`` or a penalized value. Uses
    L-BFGS-B with central-difference gradients, then Nelder-Mead if that
    did not report convergence.
    """
    z0 = np.asarray(z0, dtype=float)
    count = [0]
    f_start = objective(z0)
    if not np.isfinite(f_start):
        raise DegeneracyError("objective is not finite at the starting point")

    def neg(z):
        count[0] += 1
        val = objective(z)
        return -val if np.isfinite(val) else -f_start + PENALTY

    if z0.size == 0:
        return z0, f_start, StageResult(f_start, f_start, True, 1)
    box = [(-bounds, bounds)] * z0.size
    best_z, best_f = z0, -f_start
    converged = False
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = optimize.minimize(
            neg, np.clip(z0, -bounds, bounds), method="L-BFGS-B", jac="3-point", bounds=box,
            options={"maxiter": maxiter, "ftol": rtol * 1e-3, "gtol": 1e-7},
        )
        if np.isfinite(res.fun) and res.fun < best_f:
            best_z, best_f = res.x, res.fun
        converged = bool(res.success)
        if not converged:
            nm = optimize.minimize(
                neg, best_z, method="Nelder-Mead",
                options={"maxiter": maxiter * max(10, z0.size), "xatol": 1e-6, "fatol": rtol * 1e-3},
            )
            if np.isfinite(nm.fun) and nm.fun < best_f:
                best_z, best_f = np.clip(nm.x, -bounds, bounds), nm.fun
            converged = bool(nm.success)
    value = objective(best_z)
    if not value >= f_start:
        best_z, value = z0, f_start
    return best_z, value, StageResult(float(f_start), float(value), converged, count[0])


def _penalized(loglik_fn, violation_fn, base):
    """Objective that returns ``base - PENALTY * violation`` for infeasible points."""

    def objective(z):
        try:
            viol = violation_fn(z)
        except (MCSwitchError, np.linalg.LinAlgError):
            return base - PENALTY
        if viol > 0:
            return base - PENALTY * (1.0 + viol)
        try:
            val = loglik_fn(z)
        except (MCSwitchError, np.linalg.LinAlgError):
            return base - PENALTY
        return val if np.isfinite(val) else base - PENALTY

    return objective


# ---------------------------------------------------------------------------
# chain and parameter counts


def estimate_chain(v, n_regimes=None, method="likelihood"):
    """Maximum-likelihood chain parameters from a known regime path.

    ``method="likelihood"`` normalizes counts of all T-1 transitions;
    ``method="switches"`` uses only the switch times, giving the jump chain
    (zero diagonal). Rows of regimes never left are set uniform.

    Returns ``(ChainParams, flags)``.
    """
    v = check_labels(v)
    G = int(v.max()) + 1 if n_regimes is None else int(n_regimes)
    if v.max() >= G:
        raise ParameterDomainError("regime label exceeds the number of regimes")
    if v.size < 2:
        raise InsufficientDataError("need at least two time points to estimate transitions")
    counts = np.zeros((G, G))
    np.add.at(counts, (v[:-1], v[1:]), 1.0)
    if method == "switches":
        np.fill_diagonal(counts, 0.0)
    elif method != "likelihood":
        raise ParameterDomainError(f"unknown chain estimation method {method!r}")
    flags = []
    rows = counts.sum(axis=1)
    M = np.empty((G, G))
    for g in range(G):
        if rows[g] > 0:
            M[g] = counts[g] / rows[g]
        else:
            M[g] = 1.0 / G
            flags.append(f"regime {g} has no observed transitions; row set uniform")
    p = np.zeros(G)
    p[v[0]] = 1.0
    return ChainParams(p, M), flags


def chain_loglik(v, chain):
    v = np.asarray(v, dtype=int)
    with np.errstate(divide="ignore"):
        return float(np.log(chain.p_init[v[0]]) + np.sum(np.log(chain.transition[v[:-1], v[1:]])))


def param_count(d, G, k):
    """Dependence-parameter count ``G(kd + d(d+1)/2) + G(G-1)``."""
    return G * (k * d + d * (d + 1) // 2) + G * (G - 1)


def msvar_param_count(d, G, k):
    """Count for an unrestricted Markov-switching VAR of order ``k``, for comparison."""
    return G * (k * d * d + d * (d + 1) // 2) + G * (G - 1)


def param_breakdown(d, G, orders, switch=True, margins=True):
    """Free parameters of a fitted model by group."""
    orders = np.broadcast_to(np.asarray(orders, dtype=int), (d, G))
    out = {
        "margins": 4 * d * G if margins else 0,
        "serial": int(orders.sum()),
        "contemporaneous": G * d * (d - 1) // 2,
        "switch": d if (switch and G > 1) else 0,
        "initial": G - 1,
        "transition": G * (G - 1),
    }
    out["total"] = sum(out.values())
    return out


# ---------------------------------------------------------------------------
# helpers shared by the fitting routes


def _orders_array(orders, d, G):
    arr = np.asarray(orders, dtype=int)
    arr = np.broadcast_to(arr, (d, G)).copy() if arr.ndim == 0 else arr
    if arr.shape != (d, G) or np.any(arr < 0):
        raise ParameterDomainError(f"orders must be a nonnegative int or a ({d}, {G}) array")
    return arr


def _empty_pacf(orders):
    return np.zeros(orders.shape + (max(int(orders.max()), 1),))


def _build_model(margins, pacf, contemp, rho, chain, orders):
    return RegimeModel(margins, pacf, contemp, rho, chain.p_init, chain.transition, orders=orders)


def regime_order(margins):
    """Permutation sorting regimes by the first variable's fitted median.

    The skew-t location is weakly identified when tailweights are extreme,
    so the median is used as the location summary.
    """
    medians = [float(skewt_quantile(0.5, margins[0, g])) for g in range(margins.shape[1])]
    return np.argsort(medians, kind="stable")


def order_regimes(model):
    """Relabel regimes by ascending median of the first variable."""
    if model.margins is None:
        return model, np.arange(model.G)
    perm = regime_order(model.margins)
    return permute_regimes(model, perm), perm


def permute_regimes(model, perm):
    """Model whose regime ``g`` is the old regime ``perm[g]``."""
    perm = np.asarray(perm, dtype=int)
    return RegimeModel(
        None if model.margins is None else model.margins[:, perm],
        model.pacf[:, perm],
        model.contemp[perm],
        model.switch_rho,
        model.p_init[perm],
        model.transition[np.ix_(perm, perm)],
        orders=model.orders[:, perm],
    )


def _fit_margins(x, weights_by_regime, init=None):
    T, d = x.shape
    G = len(weights_by_regime)
    margins = np.empty((d, G, 4))
    for g, w in enumerate(weights_by_regime):
        for i in range(d):
            start = None if init is None else init[i, g]
            try:
                margins[i, g] = fit_margin(x[:, i], weights=w, init=start).as_array()
            except InsufficientDataError:
                # too few observations in this regime: keep the previous margins
                if start is None:
                    raise
                margins[i, g] = start
    return margins


def _uni_scores(x, margins):
    """Normal scores (G, T, d) under every regime's margins."""
    T, d = x.shape
    G = margins.shape[1]
    y = np.empty((G, T, d))
    for g in range(G):
        for i in range(d):
            y[g, :, i] = pit_to_normal(x[:, i], margins[i, g])
    return y


def _fit_serial_stationary(y_col, segments, order):
    """Maximize the stationary univariate segment likelihood over ``order`` pacfs."""
    y = y_col[:, None]

    def loglik(z):
        R = toeplitz_corr(pacf_to_acf(to_unit(z)))
        return segments_loglik(y, segments, stationary_reps(R, 1))

    z, _, stage = _maximize(loglik, np.zeros(order))
    return to_unit(z), stage


def _regime_corr(pacf_g, orders_g, contemp, n_blocks):
    acfs = []
    for i in range(contemp.shape[0]):
        p = np.zeros(n_blocks - 1)
        p[:orders_g[i]] = pacf_g[i, :orders_g[i]]
        acfs.append(pacf_to_acf(p))
    return build_regime_corr(acfs, contemp, check=False)


def _sample_corr(y, segments):
    idx = np.concatenate([np.arange(a, b) for a, b in segments])
    if idx.size <= y.shape[1]:
        return np.eye(y.shape[1])
    S = np.corrcoef(y[idx], rowvar=False)
    return nearest_corr(np.nan_to_num(S))


def _fit_contemp_stationary(y, segments, pacf_g, orders_g, d):
    n_blocks = int(orders_g.max()) + 1
    C0 = _sample_corr(y, segments)

    def violation(z):
        R = _regime_corr(pacf_g, orders_g, corr_from_free(z, d), n_blocks)
        return 0.0 if is_positive_definite(R) else 1.0 - min(np.linalg.eigvalsh(R)[0], 0.0)

    def loglik(z):
        R = _regime_corr(pacf_g, orders_g, corr_from_free(z, d), n_blocks)
        return segments_loglik(y, segments, stationary_reps(R, d))

    z0 = free_from_corr(C0)
    if violation(z0) > 0:
        z0 = np.zeros(d * (d - 1) // 2)
    base = loglik(z0)
    z, _, stage = _maximize(_penalized(loglik, violation, base), z0)
    return corr_from_free(z, d), stage


# ---------------------------------------------------------------------------
# known regimes


def fit_with_regimes(x, v, orders=1, n_regimes=None, fit_switch=True, chain_method="likelihood",
                     init_margins=None):
    """Four-stage estimation given the regime sequence ``v`` (0-based).

    Returns a :class:`FitReport` whose ``loglik`` is the complete-data
    log-likelihood plus the log-probability of ``v`` under the fitted chain.
    """
    x = check_series(x)
    T, d = x.shape
    v = check_labels(v, length=T)
    G = int(v.max()) + 1 if n_regimes is None else int(n_regimes)
    orders = _orders_array(orders, d, G)
    if T <= int(orders.max()) + 1:
        raise InsufficientDataError("series is not longer than the window length")
    part = partition_segments(v)
    chain, flags = estimate_chain(v, G, method=chain_method)
    stages = {}

    # Step 1: margins, serial dependence ignored
    weights = [(v == g).astype(float) for g in range(G)]
    margins = _fit_margins(x, weights, init=init_margins)
    y_all = _uni_scores(x, margins)
    stages["margins"] = StageResult(np.nan, float(sum(
        np.sum(skewt_logpdf(x[v == g, i], margins[i, g])) for g in range(G) for i in range(d)
    )), True, 0)

    # Step 2: serial correlation of each component in each regime
    pacf = _empty_pacf(orders)
    serial_total, serial_ok = 0.0, True
    for g in range(G):
        segs = part.segments_of(g)
        for i in range(d):
            if orders[i, g] == 0 or not segs:
                continue
            est, st = _fit_serial_stationary(y_all[g, :, i], segs, orders[i, g])
            pacf[i, g, :orders[i, g]] = est
            serial_total += st.value
            serial_ok &= st.converged
    stages["serial"] = StageResult(np.nan, serial_total, serial_ok, 0)

    # Step 3: contemporaneous correlation per regime
    contemp = np.stack([np.eye(d)] * G)
    cont_total, cont_ok = 0.0, True
    if d > 1:
        for g in range(G):
            segs = part.segments_of(g)
            if not segs:
                continue
            contemp[g], st = _fit_contemp_stationary(y_all[g], segs, pacf[:, g], orders[:, g], d)
            cont_total += st.value
            cont_ok &= st.converged
    stages["contemporaneous"] = StageResult(np.nan, cont_total, cont_ok, 0)

    # Step 4: switch correlations from the complete likelihood
    t = np.arange(T)
    y = y_all[v, t]
    lj = np.zeros(T)
    for i in range(d):
        for g in range(G):
            sel = v == g
            lj[sel] += _log_jac(x[sel, i], margins[i, g])
    model0 = _build_model(margins, pacf, contemp, np.zeros(d), chain, orders)
    groups = window_groups(v, model0.k)

    def complete(model):
        return float(np.sum(conditional_terms(y, lj, groups, model)))

    use_switch = fit_switch and G > 1 and int(orders.max()) > 0
    if use_switch and part.n_switches > 0:
        def violation(z):
            return model0.replace(switch_rho=to_unit(z)).feasibility_violation()

        def loglik(z):
            return complete(model0.replace(switch_rho=to_unit(z)))

        base = complete(model0)
        z, val, st = _maximize(_penalized(loglik, violation, base), np.zeros(d))
        model = model0.replace(switch_rho=to_unit(z))
        stages["switch"] = st
    else:
        model = model0
        val = complete(model0)
        stages["switch"] = StageResult(val, val, True, 1)
    ll = val + chain_loglik(v, chain)
    n_params = param_breakdown(d, G, orders, switch=use_switch)["total"]
    return FitReport(model, ll, n_params, "external", stages, regimes=v, flags=flags)


def _log_jac(x, eta):
    return log_pit_derivative(x, eta) if x.size else np.zeros(0)


# ---------------------------------------------------------------------------
# latent regimes


def fit_independence_hmm(x, G, seed=0, max_iter=200, tol=1e-7):
    """EM for an HMM whose emissions are independent skew-t margins.

    Returns ``(margins (d, G, 4), ChainParams, loglik, n_iter)`` with regimes
    ordered by the first variable's median.
    """
    from sklearn.cluster import KMeans

    x = check_series(x)
    T, d = x.shape
    if G == 1:
        margins = _fit_margins(x, [np.ones(T)])
        ll = float(sum(np.sum(skewt_logpdf(x[:, i], margins[i, 0])) for i in range(d)))
        return margins, ChainParams(np.ones(1), np.ones((1, 1))), ll, 0
    z = (x - x.mean(axis=0)) / x.std(axis=0)
    labels = KMeans(n_clusters=G, n_init=10, random_state=seed).fit_predict(z)
    resp = np.stack([(labels == g).astype(float) for g in range(G)])
    margins = _fit_margins(x, list(resp))
    p = resp[:, 0] * 0.0 + 1.0 / G
    M = np.full((G, G), 0.1 / (G - 1))
    np.fill_diagonal(M, 0.9)
    prev = -np.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        log_emis = np.zeros((T, G))
        for g in range(G):
            for i in range(d):
                log_emis[:, g] += skewt_logpdf(x[:, i], margins[i, g])
        gamma, xi_sum, ll = hmm_forward_backward(log_emis, p, M)
        if ll - prev < tol * max(1.0, abs(ll)):
            break
        prev = ll
        p = np.clip(gamma[0], 1e-12, None)
        p /= p.sum()
        M = xi_sum + 1e-12
        M /= M.sum(axis=1, keepdims=True)
        margins = _fit_margins(x, list(gamma.T), init=margins)
    perm = regime_order(margins)
    margins = margins[:, perm]
    chain = ChainParams(p[perm] / p[perm].sum(), M[np.ix_(perm, perm)])
    return margins, chain, float(ll), n_iter


def fit_multistage(x, G, orders=1, fit_switch=True, seed=0, hmm=None):
    """Latent-regime estimation by stage-wise marginal likelihood maximization.

    ``hmm`` may carry a precomputed :func:`fit_independence_hmm` result.
    """
    x = check_series(x)
    T, d = x.shape
    orders = _orders_array(orders, d, G)
    margins, chain, hmm_ll, n_iter = fit_independence_hmm(x, G, seed=seed) if hmm is None else hmm
    stages = {"hmm": StageResult(np.nan, hmm_ll, True, n_iter)}
    pacf = _empty_pacf(orders)
    contemp = np.stack([np.eye(d)] * G)
    base_model = _build_model(margins, pacf, contemp, np.zeros(d), chain, orders)
    scores = base_model.normal_scores(x)

    def marginal(model):
        tables = emission_tables(model, *scores)
        la = forward(tables, model.p_init, model.transition, model.k)
        from scipy.special import logsumexp
        return float(logsumexp(la[-1]))

    def run_stage(name, make, z0):
        nonlocal base_model
        if z0.size == 0:
            val = marginal(base_model)
            stages[name] = StageResult(val, val, True, 1)
            return

        def violation(z):
            return make(z).feasibility_violation()

        base = marginal(base_model)
        z, _, st = _maximize(_penalized(lambda z: marginal(make(z)), violation, base), z0)
        base_model = make(z)
        stages[name] = st

    mask = np.zeros(pacf.shape, dtype=bool)
    for i in range(d):
        for g in range(G):
            mask[i, g, :orders[i, g]] = True

    def with_pacf(z):
        p = np.zeros(pacf.shape)
        p[mask] = to_unit(z)
        return base_model.replace(pacf=p)

    run_stage("serial", with_pacf, np.zeros(int(mask.sum())))

    n_c = d * (d - 1) // 2

    def with_contemp(z):
        C = np.stack([corr_from_free(z[g * n_c:(g + 1) * n_c], d) for g in range(G)])
        return base_model.replace(contemp=C)

    y_all = scores[0]
    z0 = []
    for g in range(G):
        S = nearest_corr(np.nan_to_num(np.corrcoef(y_all[g], rowvar=False))) if d > 1 else np.eye(1)
        z0.append(free_from_corr(S))
    z0 = np.concatenate(z0) if n_c else np.zeros(0)
    if n_c and with_contemp(z0).feasibility_violation() > 0:
        z0 = np.zeros(G * n_c)
    run_stage("contemporaneous", with_contemp, z0)

    use_switch = fit_switch and G > 1 and int(orders.max()) > 0
    run_stage("switch", lambda z: base_model.replace(switch_rho=to_unit(z)),
              np.zeros(d) if use_switch else np.zeros(0))
    model = base_model
    ll = stages["switch"].value
    n_params = param_breakdown(d, G, orders, switch=use_switch)["total"]
    return FitReport(model, ll, n_params, "multistage", stages, n_iter=1)


def fit_iterative(x, G, orders=1, cfg=None, max_iter=20, seed=0, fit_switch=True):
    """Alternate regime dating and :func:`fit_with_regimes` until stable."""
    x = check_series(x)
    T, d = x.shape
    cfg = UpdateConfig() if cfg is None else cfg
    orders = _orders_array(orders, d, G)
    margins, chain, _, _ = fit_independence_hmm(x, G, seed=seed)
    model = _build_model(margins, _empty_pacf(np.zeros((d, G), dtype=int)), np.stack([np.eye(d)] * G),
                         np.zeros(d), chain, np.zeros((d, G), dtype=int))
    history = []
    best = None
    flags = []
    report = None
    for it in range(1, max_iter + 1):
        probs = forward_backward(x, model).run_prob(min(cfg.tau, model.k))
        v = date_regimes(probs, cfg)
        if history and np.array_equal(v, history[-1]):
            report.n_iter = it - 1
            report.flags = flags + report.flags
            return report
        if len(history) >= 2 and np.array_equal(v, history[-2]):
            flags.append("dated sequence oscillates between two states")
            best.n_iter = it - 1
            best.flags = flags + best.flags
            return best
        history.append(v)
        n_used = np.unique(v).size
        if n_used < G:
            flags.append(f"dated sequence uses {n_used} of {G} regimes")
        report = fit_with_regimes(x, v, orders, n_regimes=G, fit_switch=fit_switch,
                                  init_margins=model.margins)
        report.mode = "iterative"
        model = report.model
        if best is None or report.loglik > best.loglik:
            best = report
    flags.append("iteration limit reached before the dated sequence stabilized")
    report.n_iter = max_iter
    report.flags = flags + report.flags
    return report


def aic_scan(x, orders, n_regimes, v=None, seed=0, fit_switch=True):
    """AIC of fits over a grid of (G, order).

    With ``v`` the complete likelihood is used (G must cover the labels in
    ``v``; a single-regime cell uses the all-zero sequence); otherwise the multistage marginal likelihood. Failed cells are reported
    with their error message instead of stopping the scan.
    """
    x = check_series(x)
    rows = []
    hmm_cache = {}
    for G in n_regimes:
        for order in orders:
            row = {"G": int(G), "order": int(order), "aic": np.nan, "loglik": np.nan,
                   "n_params": 0, "status": "ok"}
            try:
                if v is not None:
                    vv = check_labels(v, length=x.shape[0])
                    if G == 1:
                        vv = np.zeros_like(vv)
                    if int(vv.max()) + 1 > G:
                        raise ParameterDomainError("regime labels exceed G")
                    rep = fit_with_regimes(x, vv, order, n_regimes=G, fit_switch=fit_switch)
                else:
                    if G not in hmm_cache:
                        hmm_cache[G] = fit_independence_hmm(x, G, seed=seed)
                    rep = fit_multistage(x, G, order, fit_switch=fit_switch, seed=seed, hmm=hmm_cache[G])
                row.update(aic=rep.aic, loglik=rep.loglik, n_params=rep.n_params)
                if not rep.converged:
                    row["status"] = "not converged"
            except (MCSwitchError, np.linalg.LinAlgError, ValueError) as exc:
                row["status"] = f"failed: {exc}"
            rows.append(row)
    return rows
