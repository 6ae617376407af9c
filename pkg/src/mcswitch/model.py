"""Parameter container for the regime-switching margin-closed copula model."""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .exceptions import DegeneracyError, InfeasibleModelError, ParameterDomainError, ShapeError
from .margins import log_pit_derivative, pit_to_normal
from .mcvar import build_regime_corr
from .serialcorr import is_positive_definite, pacf_to_acf
from .switchcov import build_window_corr, conditional_rep
from .validation import (
    check_correlation_matrix,
    check_open_unit,
    check_probability_vector,
    check_transition_matrix,
)


@dataclass(frozen=True)
class ChainParams:
    """Initial distribution and transition matrix of the regime chain."""

    p_init: np.ndarray
    transition: np.ndarray

    def __post_init__(self):
        M = check_transition_matrix(self.transition)
        p = check_probability_vector(self.p_init, M.shape[0])
        object.__setattr__(self, "p_init", p)
        object.__setattr__(self, "transition", M)

    @property
    def n_regimes(self):
        return self.p_init.size

    def stationary(self):
        G = self.n_regimes
        A = np.vstack([self.transition.T - np.eye(G), np.ones(G)])
        b = np.zeros(G + 1)
        b[-1] = 1.0
        return np.linalg.lstsq(A, b, rcond=None)[0]


class RegimeModel:
    """All parameters of the model, with cached correlation structures.

    Parameters
    ----------
    margins : array (d, G, 4) or None
        Skew-t ``(location, scale, left, right)`` per variable and regime.
        ``None`` means the data are already standard normal scores.
    pacf : array (d, G, m)
        Partial autocorrelations; entries past ``orders[i, g]`` must be zero.
    contemp : array (G, d, d)
        Contemporaneous correlation matrix per regime.
    switch_rho : array (d,)
        Diagonal of the switch correlation matrix.
    p_init, transition : regime chain parameters.
    orders : int array (d, G), optional
        Autoregressive order per variable and regime. Defaults to ``m``.

    The window length used by the likelihood is ``k + 1`` with
    ``k = max(orders) + 1``.
    """

    def __init__(self, margins, pacf, contemp, switch_rho, p_init, transition, orders=None):
        contemp = np.asarray(contemp, dtype=float)
        if contemp.ndim != 3 or contemp.shape[1] != contemp.shape[2]:
            raise ShapeError("contemporaneous correlations must have shape (G, d, d)")
        G, d = contemp.shape[0], contemp.shape[1]
        pacf = np.asarray(pacf, dtype=float)
        if pacf.ndim == 2:
            pacf = pacf[:, :, None]
        if pacf.shape[:2] != (d, G):
            raise ShapeError(f"pacf must have shape ({d}, {G}, m), got {pacf.shape}")
        if orders is None:
            orders = np.full((d, G), pacf.shape[2], dtype=int)
        orders = np.asarray(orders, dtype=int)
        if orders.shape != (d, G) or np.any(orders < 0) or np.any(orders > pacf.shape[2]):
            raise ShapeError("orders must be a (d, G) array within the pacf length")
        for i in range(d):
            for g in range(G):
                if np.any(pacf[i, g, orders[i, g]:] != 0.0):
                    raise ParameterDomainError(
                        f"pacf of variable {i}, regime {g} is nonzero beyond its order"
                    )
        check_open_unit(pacf, "partial autocorrelations")
        self.k = int(orders.max()) + 1
        padded = np.zeros((d, G, self.k))
        padded[:, :, :pacf.shape[2]] = pacf[:, :, :self.k]
        self.pacf = padded
        self.orders = orders
        self.contemp = np.stack([check_correlation_matrix(c, d) for c in contemp])
        self.switch_rho = check_open_unit(np.asarray(switch_rho, dtype=float).reshape(d), "switch correlations")
        self.chain = ChainParams(p_init, transition)
        if self.chain.n_regimes != G:
            raise ShapeError("chain size does not match the number of regimes")
        if margins is not None:
            margins = np.asarray(margins, dtype=float)
            if margins.shape != (d, G, 4):
                raise ShapeError(f"margins must have shape ({d}, {G}, 4)")
            if np.any(margins[..., 1:] <= 0) or not np.all(np.isfinite(margins)):
                raise ParameterDomainError("margin scales and tailweights must be positive")
        self.margins = margins
        self.d, self.G = d, G
        self._regime_cache = {}
        self._window_cache = {}
        self._rep_cache = {}

    @property
    def p_init(self):
        return self.chain.p_init

    @property
    def transition(self):
        return self.chain.transition

    def replace(self, **changes):
        """New model with some fields replaced."""
        fields = dict(
            margins=self.margins, pacf=self.pacf, contemp=self.contemp,
            switch_rho=self.switch_rho, p_init=self.p_init, transition=self.transition,
            orders=self.orders,
        )
        fields.update(changes)
        new = RegimeModel(**fields)
        # correlation caches stay valid while the dependence parameters are unchanged
        if not {"pacf", "contemp", "orders"} & changes.keys():
            new._regime_cache = self._regime_cache
            if "switch_rho" not in changes:
                new._window_cache = self._window_cache
                new._rep_cache = self._rep_cache
        return new

    def subset(self, idx):
        """Model of the sub-process made of variables ``idx`` (0-based)."""
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        if idx.size == 0 or np.any(idx < 0) or np.any(idx >= self.d) or np.unique(idx).size != idx.size:
            raise ParameterDomainError(f"invalid variable subset {idx.tolist()}")
        orders = self.orders[idx]
        m = max(int(orders.max()), 1)
        return RegimeModel(
            None if self.margins is None else self.margins[idx],
            self.pacf[idx][:, :, :m],
            self.contemp[:, idx][:, :, idx],
            self.switch_rho[idx],
            self.p_init,
            self.transition,
            orders=orders,
        )

    def acf(self, i, g, n_blocks=None):
        n_blocks = self.k + 1 if n_blocks is None else n_blocks
        pacf = np.zeros(n_blocks - 1)
        m = min(n_blocks - 1, self.k)
        pacf[:m] = self.pacf[i, g, :m]
        return pacf_to_acf(pacf)

    def regime_corr(self, g, n_blocks=None):
        """Block Toeplitz matrix of regime ``g`` with ``n_blocks`` blocks (default k+1)."""
        n_blocks = self.k + 1 if n_blocks is None else max(int(n_blocks), 1)
        key = (g, max(n_blocks, self.k + 1))
        if key not in self._regime_cache:
            acfs = [self.acf(i, g, key[1]) for i in range(self.d)]
            self._regime_cache[key] = build_regime_corr(acfs, self.contemp[g], check=False)
        R = self._regime_cache[key]
        return R[:n_blocks * self.d, :n_blocks * self.d]

    def window_corr(self, labels):
        labels = tuple(int(g) for g in labels)
        if labels not in self._window_cache:
            self._window_cache[labels] = build_window_corr(labels, self.regime_corr, self.switch_rho)
        return self._window_cache[labels]

    def conditional(self, labels):
        """Stochastic representation of the newest observation of a label window."""
        labels = tuple(int(g) for g in labels)
        if labels not in self._rep_cache:
            self._rep_cache[labels] = conditional_rep(self.window_corr(labels), self.d)
        return self._rep_cache[labels]

    def label_patterns(self, length=None):
        length = self.k + 1 if length is None else length
        return product(range(self.G), repeat=length)

    def feasibility_violation(self, tol=1e-10):
        """Zero when every regime and window matrix is PD, positive otherwise."""
        total = 0.0
        try:
            for g in range(self.G):
                R = self.regime_corr(g)
                if not is_positive_definite(R, tol=tol):
                    total += tol - np.linalg.eigvalsh(R)[0]
            if total > 0:
                return total
            if self.G > 1:
                for labels in self.label_patterns():
                    W = self.window_corr(labels)
                    if not is_positive_definite(W, tol=tol):
                        total += tol - np.linalg.eigvalsh(W)[0]
        except DegeneracyError:
            return max(total, 1.0)
        return float(total)

    def check_feasible(self, tol=1e-10):
        """Raise :class:`InfeasibleModelError` unless every window matrix is PD."""
        for g in range(self.G):
            R = self.regime_corr(g)
            if not is_positive_definite(R, tol=tol):
                raise InfeasibleModelError(
                    f"correlation matrix of regime {g} is not positive definite",
                    labels=(g,) * (self.k + 1),
                    min_eigenvalue=float(np.linalg.eigvalsh(R)[0]),
                )
        for labels in self.label_patterns():
            W = self.window_corr(labels)
            if not is_positive_definite(W, tol=tol):
                raise InfeasibleModelError(
                    f"window correlation is not positive definite for labels {labels}",
                    labels=labels,
                    min_eigenvalue=float(np.linalg.eigvalsh(W)[0]),
                )
        return self

    def normal_scores(self, x):
        """Normal scores and log Jacobians of ``x`` under each regime's margins.

        Returns ``y`` of shape (G, T, d) and ``logjac`` of shape (G, T, d).
        """
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        T = x.shape[0]
        if self.margins is None:
            y = np.broadcast_to(x, (self.G, T, self.d)).copy()
            return y, np.zeros((self.G, T, self.d))
        y = np.empty((self.G, T, self.d))
        jac = np.empty((self.G, T, self.d))
        for g in range(self.G):
            for i in range(self.d):
                y[g, :, i] = pit_to_normal(x[:, i], self.margins[i, g])
                jac[g, :, i] = log_pit_derivative(x[:, i], self.margins[i, g])
        return y, jac

    def __repr__(self):
        return f"RegimeModel(d={self.d}, G={self.G}, k={self.k})"
