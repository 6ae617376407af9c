"""Parameter sets shared across tests."""

import numpy as np

from mcswitch.model import RegimeModel


def bivariate_model(switch_rho=(0.25, 0.35)):
    """Two-regime bivariate model with AR(1) and AR(2) components (window of 4)."""
    pacf = np.zeros((2, 2, 2))
    pacf[0, 0, 0] = 0.8
    pacf[1, 0] = [0.6, 0.5]
    pacf[0, 1, 0] = 0.7
    pacf[1, 1] = [0.4, 0.8]
    contemp = np.array([[[1, 0.7], [0.7, 1]], [[1, 0.2], [0.2, 1]]])
    return RegimeModel(None, pacf, contemp, switch_rho, [0.5, 0.5], [[0.9, 0.1], [0.1, 0.9]],
                       orders=[[1, 1], [2, 2]])


def corr_from_upper(vals, d):
    R = np.eye(d)
    R[np.triu_indices(d, 1)] = vals
    return R + R.T - np.eye(d)


def four_variable_model(switch_rho=(0.1, 0.2, 0.1, 0.2)):
    """Two regimes, four skewed heavy-tailed AR(1) components."""
    margins = np.array([
        [[0, 1, 4, 8], [4, 1, 4, 8]],
        [[0, 1, 4, 8], [2, 1, 4, 8]],
        [[1, 2, 4, 8], [1, 2, 4, 8]],
        [[0, 2, 4, 8], [0, 2, 4, 8]],
    ], dtype=float)
    pacf = np.array([[[0.3], [0.1]], [[0.3], [0.1]], [[0.5], [0.1]], [[0.5], [0.1]]])
    contemp = np.stack([
        corr_from_upper([0.3, 0.2, 0.2, 0.3, 0.2, 0.8], 4),
        corr_from_upper([0.1, 0.4, 0.1, 0.2, 0.1, -0.8], 4),
    ])
    return RegimeModel(margins, pacf, contemp, switch_rho, [0.5, 0.5],
                       [[0.95, 0.05], [0.02, 0.98]])


def random_model(rng, d, G, order, switch=True, margins=True, max_tries=200):
    """Random feasible model; ``order`` is the AR order of every component."""
    from mcswitch.exceptions import MCSwitchError
    from mcswitch.reparam import corr_from_free

    m = max(order, 1)
    for _ in range(max_tries):
        pacf = np.zeros((d, G, m))
        pacf[:, :, :order] = rng.uniform(-0.7, 0.7, size=(d, G, order))
        contemp = np.stack([corr_from_free(rng.uniform(-0.8, 0.8, size=d * (d - 1) // 2), d)
                            for _ in range(G)])
        rho = rng.uniform(-0.6, 0.6, size=d) if switch else np.zeros(d)
        marg = None
        if margins:
            marg = np.stack([rng.uniform(-1, 1, size=(d, G)), rng.uniform(0.5, 2, size=(d, G)),
                             rng.uniform(1.5, 8, size=(d, G)), rng.uniform(1.5, 8, size=(d, G))], axis=-1)
        P = rng.dirichlet(np.ones(G) * 2, size=G) * 0.3 + 0.7 * np.eye(G)
        try:
            model = RegimeModel(marg, pacf, contemp, rho, rng.dirichlet(np.ones(G)), P,
                                orders=np.full((d, G), order))
            if model.feasibility_violation() == 0.0:
                return model
        except MCSwitchError:
            pass
    raise RuntimeError("no feasible model found")
