import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import optimize, stats

from helpers import bivariate_model, four_variable_model
from mcswitch.estimate import (
    aic_scan,
    chain_loglik,
    estimate_chain,
    fit_independence_hmm,
    fit_iterative,
    fit_multistage,
    fit_with_regimes,
    msvar_param_count,
    param_breakdown,
    param_count,
    permute_regimes,
    regime_order,
)
from mcswitch.exceptions import InsufficientDataError, ParameterDomainError
from mcswitch.fbinfer import UpdateConfig, date_regimes, forward_backward
from mcswitch.margins import skewt_quantile
from mcswitch.model import ChainParams, RegimeModel
from mcswitch.simulate import sample_regimes, sample_series


def test_chain_from_short_path():
    chain, flags = estimate_chain([0, 0, 1, 1, 1])
    assert_allclose(chain.p_init, [1, 0])
    assert_allclose(chain.transition, [[0.5, 0.5], [0.0, 1.0]])
    assert flags == []


def test_chain_constant_path_flags_unvisited_row():
    chain, flags = estimate_chain([1, 1, 1, 1], n_regimes=2)
    assert_allclose(chain.transition, [[0.5, 0.5], [0.0, 1.0]])
    assert len(flags) == 1 and "regime 0" in flags[0]


def test_chain_switches_method_is_jump_chain():
    chain, _ = estimate_chain([0, 0, 1, 1, 2, 0, 0, 2], method="switches")
    assert_allclose(np.diag(chain.transition), 0.0)
    assert_allclose(chain.transition[0], [0, 0.5, 0.5])
    with pytest.raises(ParameterDomainError):
        estimate_chain([0, 1], method="nope")
    with pytest.raises(InsufficientDataError):
        estimate_chain([0])


def test_chain_recovery():
    truth = ChainParams([0.5, 0.5], [[0.9, 0.1], [0.05, 0.95]])
    v = sample_regimes(truth, 10_000, seed=0)
    chain, _ = estimate_chain(v)
    assert_allclose(chain.transition, truth.transition, atol=0.02)
    assert_allclose(chain_loglik(v, chain), np.sum(np.log(chain.transition[v[:-1], v[1:]])))


def test_param_count_examples():
    assert param_count(4, 2, 3) == 46
    assert msvar_param_count(4, 2, 3) == 118
    assert param_count(1, 1, 0) == 1


@pytest.mark.parametrize("seed", range(10))
def test_param_count_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    d, G, k = (int(a) for a in rng.integers(1, 5, size=3))
    margins = np.tile([0.0, 1.0, 2.0, 2.0], (d, G, 1))
    model = RegimeModel(margins, np.full((d, G, k), 0.1), np.stack([np.eye(d)] * G), np.zeros(d),
                        np.full(G, 1.0 / G), np.full((G, G), 1.0 / G))
    n_pacf = sum(int(model.orders[i, g]) for i in range(d) for g in range(G))
    n_contemp = sum(np.count_nonzero(np.triu(np.ones((d, d)), 1)) for _ in model.contemp)
    n_scale = model.margins[..., 1].size
    n_trans = G * G - G  # each row sums to one
    assert param_count(d, G, k) == n_pacf + n_contemp + n_scale + n_trans


def test_param_breakdown():
    b = param_breakdown(4, 2, 1)
    assert b == {"margins": 32, "serial": 8, "contemporaneous": 12, "switch": 4, "initial": 1,
                 "transition": 2, "total": 59}
    assert param_breakdown(4, 2, 1, switch=False)["total"] == 55
    assert param_breakdown(3, 1, 2)["switch"] == 0


def ar1_exact_loglik(y, alpha):
    s = np.sqrt(1 - alpha ** 2)
    return stats.norm.logpdf(y[0]) + np.sum(stats.norm.logpdf(y[1:], loc=alpha * y[:-1], scale=s))


def test_serial_stage_matches_closed_form_ar1():
    model = RegimeModel(np.array([[[0.5, 1.5, 3.0, 5.0]]]), [[[0.6]]], [[[1.0]]], [0.0], [1.0],
                        [[1.0]])
    x = sample_series(model, 500, seed=1).x
    rep = fit_with_regimes(x, np.zeros(500, int), orders=1)
    y = rep.model.normal_scores(x)[0][0, :, 0]
    res = optimize.minimize_scalar(lambda a: -ar1_exact_loglik(y, a), bounds=(-0.99, 0.99),
                                   method="bounded", options={"xatol": 1e-10})
    assert_allclose(rep.stages["serial"].value, -res.fun, rtol=1e-6)
    assert_allclose(rep.model.pacf[0, 0, 0], res.x, atol=1e-3)
    assert abs(res.x - 0.6) < 0.1


def test_known_regime_fit():
    model = bivariate_model().replace(transition=[[0.97, 0.03], [0.03, 0.97]])
    sim = sample_series(model, 1500, seed=2)
    margins = np.tile([0.0, 1.0, 5.0, 5.0], (2, 2, 1))
    x = sim.x  # identity margins: fit skew-t to normal data
    rep = fit_with_regimes(x, sim.v, orders=model.orders)
    assert rep.mode == "external"
    assert rep.model.feasibility_violation() == 0.0
    assert_allclose(rep.model.pacf, model.pacf, atol=0.1)
    assert_allclose(rep.model.contemp, model.contemp, atol=0.1)
    for st in rep.stages.values():
        if np.isfinite(st.start):
            assert st.value >= st.start - 1e-9
    assert_allclose(rep.aic, 2 * rep.n_params - 2 * rep.loglik)
    assert margins.shape == rep.model.margins.shape


def test_fit_is_deterministic():
    model = four_variable_model().subset([0, 3])
    sim = sample_series(model, 400, seed=3)
    a = fit_with_regimes(sim.x, sim.v)
    b = fit_with_regimes(sim.x, sim.v)
    assert a.loglik == b.loglik
    assert_array_equal(a.model.pacf, b.model.pacf)
    assert_array_equal(a.model.switch_rho, b.model.switch_rho)


def test_no_switch_correlation_when_disabled_or_order_zero():
    model = four_variable_model().subset([0, 3])
    sim = sample_series(model, 300, seed=4)
    rep = fit_with_regimes(sim.x, sim.v, fit_switch=False)
    assert_allclose(rep.model.switch_rho, 0.0)
    rep0 = fit_with_regimes(sim.x, sim.v, orders=0)
    assert_allclose(rep0.model.switch_rho, 0.0)
    assert rep0.n_params == param_breakdown(2, 2, 0, switch=False)["total"]


@pytest.mark.slow
def test_serial_estimates_stable_under_shifted_switch_times():
    model = four_variable_model()
    sim = sample_series(model, 1000, seed=5)
    v = sim.v
    # replication standard deviations of the first-regime lag-1 pacf at this length
    sd = 0.05

    def pacf(vv):
        return fit_with_regimes(sim.x, vv).model.pacf[:, :, 0]

    base = pacf(v)
    for shifted in (np.r_[v[0], v[:-1]], np.r_[v[1:], v[-1]]):
        assert np.all(np.abs(pacf(shifted) - base) < 3 * sd)


def test_regime_order_and_permutation():
    model = four_variable_model()
    assert_array_equal(regime_order(model.margins), [0, 1])
    swapped = permute_regimes(model, [1, 0])
    assert_array_equal(regime_order(swapped.margins), [1, 0])
    assert_allclose(swapped.transition, [[0.98, 0.02], [0.05, 0.95]])
    assert_allclose(swapped.contemp[0], model.contemp[1])


def test_independence_hmm_separates_regimes():
    model = four_variable_model().subset([0, 1])
    sim = sample_series(model, 800, seed=6)
    margins, chain, ll, n_iter = fit_independence_hmm(sim.x, 2, seed=0)
    assert margins.shape == (2, 2, 4)
    assert np.isfinite(ll) and n_iter >= 1
    assert_allclose(chain.transition.sum(axis=1), 1.0)
    assert_array_equal(regime_order(margins), [0, 1])
    # the true regimes differ by a location shift of 4 in the first variable
    gap = skewt_quantile(0.5, margins[0, 1]) - skewt_quantile(0.5, margins[0, 0])
    assert abs(gap - 4.0) < 0.5
    assert np.all(np.diag(chain.transition) > 0.8)


def test_multistage_single_regime_matches_external():
    model = four_variable_model().subset([2, 3]).replace(
        p_init=[1.0, 0.0], transition=[[1.0, 0.0], [0.5, 0.5]])
    sim = sample_series(model, 300, seed=7)
    ms = fit_multistage(sim.x, 1, orders=1)
    ext = fit_with_regimes(sim.x, np.zeros(300, int), orders=1)
    assert ms.model.G == 1
    for st in ms.stages.values():
        if np.isfinite(st.start):
            assert st.value >= st.start - 1e-9
    assert_allclose(ms.loglik, ext.loglik, atol=0.05)
    assert ms.loglik >= ext.loglik - 0.05
    assert ms.n_params == ext.n_params


def test_iterative_single_regime_stops_after_one_pass():
    model = four_variable_model().subset([2, 3])
    x = sample_series(model, 200, seed=8).x
    rep = fit_iterative(x, 1, orders=1)
    assert rep.n_iter == 1
    assert rep.mode == "iterative"
    assert_array_equal(rep.regimes, 0)


@pytest.mark.slow
def test_iterative_fit_is_a_fixed_point():
    model = four_variable_model().subset([0, 3])
    sim = sample_series(model, 500, seed=9)
    cfg = UpdateConfig()
    rep = fit_iterative(sim.x, 2, orders=1, cfg=cfg)
    if rep.n_iter < 20 and not any("oscillates" in f for f in rep.flags):
        probs = forward_backward(sim.x, rep.model).run_prob(0)
        assert_array_equal(date_regimes(probs, cfg), rep.regimes)
    agree = max(np.mean(rep.regimes == sim.v), np.mean(rep.regimes != sim.v))
    assert agree > 0.9


def test_scan_single_regime_labels_do_not_matter():
    model = four_variable_model().subset([2, 3])
    sim = sample_series(model, 250, seed=10)
    with_v = aic_scan(sim.x, [1], [1], v=sim.v)
    zeros = aic_scan(sim.x, [1], [1], v=np.zeros(250, int))
    assert_allclose(with_v[0]["aic"], zeros[0]["aic"], rtol=1e-12)


def test_scan_rows_and_failures():
    model = four_variable_model().subset([2, 3])
    sim = sample_series(model, 200, seed=11)
    rows = aic_scan(sim.x, [0, 1], [1, 2], v=sim.v)
    assert [(r["G"], r["order"]) for r in rows] == [(1, 0), (1, 1), (2, 0), (2, 1)]
    for r in rows:
        if r["status"] == "ok":
            assert_allclose(r["aic"], 2 * r["n_params"] - 2 * r["loglik"])
    # labels with three regimes cannot be fitted with two
    bad = aic_scan(sim.x, [1], [2], v=np.r_[np.zeros(100, int), np.full(100, 2)])
    assert bad[0]["status"].startswith("failed")
    assert np.isnan(bad[0]["aic"])


@pytest.mark.slow
def test_scan_selects_true_order():
    model = four_variable_model().subset([2, 3])
    hits = 0
    for rep in range(20):
        sim = sample_series(model, 400, seed=100 + rep)
        rows = aic_scan(sim.x, [0, 1, 2], [2], v=sim.v)
        best = min(rows, key=lambda r: r["aic"])
        hits += best["order"] == 1
    assert hits >= 16
