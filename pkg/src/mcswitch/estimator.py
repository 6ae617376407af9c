"""scikit-learn style wrapper around the fitting and inference routines."""

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimate import fit_iterative, fit_multistage, fit_with_regimes
from .exceptions import ParameterDomainError
from .fbinfer import UpdateConfig, date_regimes, forward_backward, marginal_loglik
from .simulate import sample_series
from .validation import check_labels, check_series


class RegimeSwitchingCopula(BaseEstimator):
    """Regime-switching Gaussian-copula time-series model with skew-t margins.

    Parameters
    ----------
    n_regimes : int
    order : int
        Autoregressive order of every component in every regime.
    mode : {"multistage", "iterative", "external"}
        ``external`` requires ``regimes`` in :meth:`fit`.
    fit_switch : bool
        Estimate the switch correlations (otherwise fixed at zero).
    tau, nu, xi : regime dating settings used by :meth:`predict`.
    max_iter : int
        Iteration cap for ``mode="iterative"``.
    random_state : int
        Seed for the clustering start of the latent fits.
    """

    def __init__(self, n_regimes=2, order=1, mode="multistage", fit_switch=True,
                 tau=0, nu=3, xi=0.8, max_iter=20, random_state=0):
        self.n_regimes = n_regimes
        self.order = order
        self.mode = mode
        self.fit_switch = fit_switch
        self.tau = tau
        self.nu = nu
        self.xi = xi
        self.max_iter = max_iter
        self.random_state = random_state

    def _cfg(self):
        return UpdateConfig(self.tau, self.nu, self.xi)

    def fit(self, X, regimes=None):
        X = check_series(X, min_length=self.order + 3)
        cfg = self._cfg()
        if self.mode == "external":
            if regimes is None:
                raise ParameterDomainError("mode='external' needs the regime sequence")
            v = check_labels(regimes, self.n_regimes, X.shape[0])
            report = fit_with_regimes(X, v, self.order, n_regimes=self.n_regimes,
                                      fit_switch=self.fit_switch)
        elif self.mode == "multistage":
            report = fit_multistage(X, self.n_regimes, self.order, fit_switch=self.fit_switch,
                                    seed=self.random_state)
        elif self.mode == "iterative":
            report = fit_iterative(X, self.n_regimes, self.order, cfg=cfg, max_iter=self.max_iter,
                                   seed=self.random_state, fit_switch=self.fit_switch)
        else:
            raise ParameterDomainError(f"unknown mode {self.mode!r}")
        self.report_ = report
        self.model_ = report.model
        self.aic_ = report.aic
        self.n_features_in_ = X.shape[1]
        return self

    def _check_X(self, X):
        check_is_fitted(self, "model_")
        X = check_series(X)
        if X.shape[1] != self.n_features_in_:
            raise ParameterDomainError(
                f"X has {X.shape[1]} features, the model was fitted with {self.n_features_in_}"
            )
        return X

    def predict_proba(self, X):
        """Smoothed probabilities ``P(V_t = g | X)``, shape (T, n_regimes)."""
        X = self._check_X(X)
        return forward_backward(X, self.model_).run_prob(0)

    def predict(self, X):
        """Dated regime sequence (0-based) from run probabilities."""
        X = self._check_X(X)
        cfg = self._cfg()
        probs = forward_backward(X, self.model_).run_prob(min(cfg.tau, self.model_.k))
        return date_regimes(probs, cfg)

    def score(self, X, y=None):
        """Marginal log-likelihood of ``X``."""
        X = self._check_X(X)
        return marginal_loglik(X, self.model_)

    def sample(self, n_samples, random_state=None):
        """Simulate ``(X, regimes)`` from the fitted model."""
        check_is_fitted(self, "model_")
        sim = sample_series(self.model_, n_samples, seed=random_state)
        return sim.x, sim.v
