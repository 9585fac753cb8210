"""Pathwise coordinate-descent Lasso for GLMs with constant or iteratively rescaled penalties."""

from irlasso.errors import (
    AggregationError,
    ConfigError,
    ContractError,
    DegenerateProblemError,
    NonFiniteIterateError,
)
from irlasso.families import AugmentedCoefficients, Dataset, GlmFamily
from irlasso.cd import CdSolution, WeightedLassoProblem, kkt_residuals, lasso_cd, shrinkage
from irlasso.path import (
    PathConfig,
    PathResult,
    ScalingStrategy,
    fit_path,
    irls_fit,
    lambda_max,
    make_lambda_grid,
)

__version__ = "0.1.0"

__all__ = [
    "AggregationError",
    "AugmentedCoefficients",
    "ConfigError",
    "DegenerateProblemError",
    "CdSolution",
    "ContractError",
    "Dataset",
    "GlmFamily",
    "NonFiniteIterateError",
    "PathConfig",
    "PathResult",
    "ScalingStrategy",
    "WeightedLassoProblem",
    "fit_path",
    "irls_fit",
    "kkt_residuals",
    "lambda_max",
    "lasso_cd",
    "make_lambda_grid",
    "shrinkage",
]
