"""Exception hierarchy shared across the package."""


class MCSwitchError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(MCSwitchError, ValueError):
    """A parameter lies outside its admissible domain."""


class ShapeError(MCSwitchError, ValueError):
    """An array has the wrong shape or is not symmetric."""


class InsufficientDataError(MCSwitchError, ValueError):
    """Too few (or too uniform) observations to estimate a quantity."""


class InfeasibleModelError(MCSwitchError, ValueError):
    """A correlation matrix implied by the parameters is not positive definite."""

    def __init__(self, message, labels=None, min_eigenvalue=None):
        super().__init__(message)
        self.labels = labels
        self.min_eigenvalue = min_eigenvalue


class DegeneracyError(MCSwitchError, ValueError):
    """A linear system needed by a construction is singular."""


class ConvergenceError(MCSwitchError, RuntimeError):
    """An optimizer failed; ``best`` carries the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
