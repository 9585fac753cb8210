"""Exponential-family pieces used by the IRLS solver.

Every function here is a pure function of its arguments. Three families are
supported, all with their canonical link:

    logistic   mu = 1 / (1 + exp(-eta))     Var[y] = mu (1 - mu)
    poisson    mu = exp(eta)                Var[y] = mu
    gaussian   mu = eta                     Var[y] = 1

The loss is the negative average log-likelihood (cross-entropy), with the
``ln(y!)`` constant dropped for Poisson and the usual ``1/(2n)`` scaling for
Gaussian.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from irlasso.errors import ContractError, DegenerateProblemError, NonFiniteIterateError

WEIGHT_FLOOR = 1e-5


class GlmFamily(str, enum.Enum):
    LOGISTIC = "logistic"
    POISSON = "poisson"
    GAUSSIAN = "gaussian"

    @classmethod
    def parse(cls, value) -> "GlmFamily":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ContractError(
                f"unknown family {value!r}; expected one of {[f.value for f in cls]}"
            ) from None


@dataclass
class Dataset:
    """Design matrix, response and (for simulated data) the true mean."""

    X: np.ndarray
    y: np.ndarray
    mu_true: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2:
            raise ContractError(f"X must be 2-d, got shape {self.X.shape}")
        n, p = self.X.shape
        if n < 1 or p < 1:
            raise ContractError(f"X must have at least one row and column, got {self.X.shape}")
        if self.y.shape != (n,):
            raise ContractError(f"y has shape {self.y.shape}, expected ({n},)")
        if not np.all(np.isfinite(self.X)):
            raise ContractError("X contains non-finite entries")
        if not np.all(np.isfinite(self.y)):
            raise ContractError("y contains non-finite entries")
        if self.mu_true is not None:
            self.mu_true = np.asarray(self.mu_true, dtype=float)
            if self.mu_true.shape != (n,):
                raise ContractError(f"mu_true has shape {self.mu_true.shape}, expected ({n},)")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def validate(self, family: GlmFamily) -> "Dataset":
        family = GlmFamily.parse(family)
        if family is GlmFamily.LOGISTIC and not np.all((self.y == 0) | (self.y == 1)):
            raise ContractError("logistic responses must be 0 or 1")
        if family is GlmFamily.POISSON and (
            np.any(self.y < 0) or np.any(self.y != np.round(self.y))
        ):
            raise ContractError("poisson responses must be non-negative integers")
        return self

    def subset(self, rows) -> "Dataset":
        mu = None if self.mu_true is None else self.mu_true[rows]
        return Dataset(self.X[rows], self.y[rows], mu)


@dataclass
class AugmentedCoefficients:
    """Intercept ``b0`` and coefficient vector ``b``."""

    b0: float
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.b0 = float(self.b0)
        self.b = np.asarray(self.b, dtype=float).ravel()

    @classmethod
    def zeros(cls, p: int, b0: float = 0.0) -> "AugmentedCoefficients":
        return cls(b0, np.zeros(p))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.b0], self.b])

    @classmethod
    def from_vector(cls, v) -> "AugmentedCoefficients":
        v = np.asarray(v, dtype=float)
        return cls(v[0], v[1:])


def linear_predictor(X: np.ndarray, coef: AugmentedCoefficients) -> np.ndarray:
    if coef.b.shape[0] != X.shape[1]:
        raise ContractError(f"coefficient length {coef.b.shape[0]} != p = {X.shape[1]}")
    return coef.b0 + X @ coef.b


def mean_response(family: GlmFamily, eta) -> np.ndarray:
    family = GlmFamily.parse(family)
    eta = np.asarray(eta, dtype=float)
    if family is GlmFamily.LOGISTIC:
        # exp(-|eta|) never overflows; pick the branch by sign
        z = np.exp(-np.abs(eta))
        return np.where(eta >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    if family is GlmFamily.POISSON:
        with np.errstate(over="ignore"):
            mu = np.exp(eta)
        if not np.all(np.isfinite(mu)):
            raise NonFiniteIterateError(
                f"poisson mean overflowed (max eta = {np.max(eta):.4g})"
            )
        return mu
    return eta.copy()


def _log1p_exp_neg(eta: np.ndarray) -> np.ndarray:
    """ln(1 + exp(-eta)) without overflow."""
    return np.maximum(-eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))


def _loss_given_target(family: GlmFamily, eta: np.ndarray, target: np.ndarray) -> float:
    if family is GlmFamily.LOGISTIC:
        vals = (1.0 - target) * eta + _log1p_exp_neg(eta)
    elif family is GlmFamily.POISSON:
        with np.errstate(over="ignore"):
            vals = np.exp(eta) - target * eta
    else:
        vals = 0.5 * (target - eta) ** 2
    loss = float(np.mean(vals))
    if not np.isfinite(loss):
        raise NonFiniteIterateError(f"{family.value} loss is not finite")
    return loss


def cross_entropy_loss(family: GlmFamily, dataset: Dataset, coef: AugmentedCoefficients) -> float:
    family = GlmFamily.parse(family)
    eta = linear_predictor(dataset.X, coef)
    return _loss_given_target(family, eta, dataset.y)


def gradient(family: GlmFamily, dataset: Dataset, coef: AugmentedCoefficients) -> np.ndarray:
    """Gradient of the loss w.r.t. ``[b0, b]``: ``X̆ᵀ(mu - y) / n``."""
    family = GlmFamily.parse(family)
    mu = mean_response(family, linear_predictor(dataset.X, coef))
    resid = mu - dataset.y
    n = dataset.n
    return np.concatenate([[resid.sum() / n], dataset.X.T @ resid / n])


def irls_weights(family: GlmFamily, mu, floor: float = WEIGHT_FLOOR) -> np.ndarray:
    """Square roots of the Hessian weights, clamped below at ``floor``."""
    family = GlmFamily.parse(family)
    mu = np.asarray(mu, dtype=float)
    if not np.all(np.isfinite(mu)):
        raise NonFiniteIterateError("non-finite mean passed to irls_weights")
    if family is GlmFamily.LOGISTIC:
        w = np.sqrt(np.clip(mu * (1.0 - mu), 0.0, None))
    elif family is GlmFamily.POISSON:
        w = np.sqrt(np.clip(mu, 0.0, None))
    else:
        w = np.ones_like(mu)
    return np.maximum(w, floor)


def expected_test_loss(family: GlmFamily, dataset: Dataset, coef: AugmentedCoefficients) -> float:
    """Loss averaged over the response distribution, given the true means."""
    family = GlmFamily.parse(family)
    if dataset.mu_true is None:
        raise ContractError("expected_test_loss needs a dataset with mu_true")
    eta = linear_predictor(dataset.X, coef)
    loss = _loss_given_target(family, eta, dataset.mu_true)
    if family is GlmFamily.GAUSSIAN:
        # unit noise variance contributes E[(y - mu)^2] / 2
        loss += 0.5
    return loss


def average_signal_variance(family: GlmFamily, mu_true) -> float:
    family = GlmFamily.parse(family)
    mu = np.asarray(mu_true, dtype=float)
    if family is GlmFamily.LOGISTIC:
        return float(np.mean(mu * (1.0 - mu)))
    if family is GlmFamily.POISSON:
        return float(np.mean(mu))
    return 1.0


def null_intercept(family: GlmFamily, y) -> float:
    """Maximum-likelihood intercept of the model with no features."""
    family = GlmFamily.parse(family)
    ybar = float(np.mean(y))
    if family is GlmFamily.LOGISTIC:
        if not 0.0 < ybar < 1.0:
            raise DegenerateProblemError(
                f"logistic response is constant (mean {ybar}); no intercept MLE"
            )
        return float(-np.log(1.0 / ybar - 1.0))
    if family is GlmFamily.POISSON:
        if ybar <= 0.0:
            raise DegenerateProblemError("poisson response is identically zero; no intercept MLE")
        return float(np.log(ybar))
    return ybar
