"""Exception types shared across the package."""


class ContractError(ValueError):
    """Inputs violate a documented precondition."""


class ConfigError(ValueError):
    """An experiment or solver configuration is invalid."""


class NonFiniteIterateError(ArithmeticError):
    """A solver iterate or loss became non-finite (typically a diverging fit)."""

    def __init__(self, message, lam=None):
        super().__init__(message)
        self.lam = lam


class DegenerateProblemError(ValueError):
    """The problem has no usable signal (constant response, zero lambda_max, ...)."""


class AggregationError(ValueError):
    """Too few replicate rows to aggregate."""


class CovarianceDegenerateError(ConfigError):
    """The requested feature covariance is not positive definite."""


class DataFormatError(ValueError):
    """An input file could not be parsed; the message names the row and column."""
