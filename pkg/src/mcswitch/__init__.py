"""Regime-switching Gaussian-copula time-series models closed under margins."""

from .estimate import (
    FitReport,
    aic_scan,
    estimate_chain,
    fit_iterative,
    fit_multistage,
    fit_with_regimes,
    param_breakdown,
    param_count,
)
from .estimator import RegimeSwitchingCopula
from .exceptions import (
    ConvergenceError,
    DegeneracyError,
    InfeasibleModelError,
    InsufficientDataError,
    MCSwitchError,
    ParameterDomainError,
    ShapeError,
)
from .fbinfer import UpdateConfig, date_regimes, forward_backward, marginal_loglik
from .likelihood import complete_loglik, partition_segments
from .margins import MarginParams, fit_margin, pit_to_normal
from .model import ChainParams, RegimeModel
from .simulate import sample_regimes, sample_series

__version__ = "0.1.0"

__all__ = [
    "FitReport",
    "aic_scan",
    "estimate_chain",
    "fit_iterative",
    "fit_multistage",
    "fit_with_regimes",
    "param_breakdown",
    "param_count",
    "ConvergenceError",
    "DegeneracyError",
    "InfeasibleModelError",
    "InsufficientDataError",
    "MCSwitchError",
    "ParameterDomainError",
    "ShapeError",
    "RegimeSwitchingCopula",
    "UpdateConfig",
    "date_regimes",
    "forward_backward",
    "marginal_loglik",
    "complete_loglik",
    "partition_segments",
    "MarginParams",
    "fit_margin",
    "pit_to_normal",
    "ChainParams",
    "RegimeModel",
    "sample_regimes",
    "sample_series",
]
