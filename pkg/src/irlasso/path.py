"""IRLS over a decreasing lambda grid, with constant or iterative penalty scaling.

Each middle-loop pass linearises the GLM loss at the current iterate, removes
the intercept by weighted centering, and hands the resulting weighted
least-squares Lasso to the coordinate-descent solver in :mod:`irlasso.cd`.
The two strategies differ only in where the per-feature penalty multipliers
come from:

* ``constant``: square root of each raw feature's empirical variance, computed
  once (the usual "standardize first" behaviour);
* ``iterative``: square root of the diagonal of the weighted, centred Gram
  matrix ``X_t' C_t X_t / n``, recomputed every pass.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from irlasso.cd import (
    DEFAULT_CD_MAX_CYCLES,
    DEFAULT_CD_TOL,
    WeightedLassoProblem,
    lasso_cd,
    lasso_cd_gram,
)
from irlasso.errors import (
    ConfigError,
    ContractError,
    DegenerateProblemError,
    NonFiniteIterateError,
)
from irlasso.families import (
    AugmentedCoefficients,
    Dataset,
    GlmFamily,
    irls_weights,
    mean_response,
    null_intercept,
)

ETA_CLAMP = 30.0
# keeps the top grid point on the zero side of the KKT boundary despite rounding
LAMBDA_MAX_GUARD = 1e-10


class ScalingStrategy(str, enum.Enum):
    CONSTANT = "constant"
    ITERATIVE = "iterative"

    @classmethod
    def parse(cls, value) -> "ScalingStrategy":
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        if key == "irl":
            return cls.ITERATIVE
        try:
            return cls(key)
        except ValueError:
            raise ContractError(
                f"unknown scaling {value!r}; expected constant, iterative or irl"
            ) from None


@dataclass
class PathConfig:
    num_lambdas: int = 100
    lambda_min_ratio: float = 1e-4
    irls_tol: float = 1e-6
    irls_max_iters: int = 50
    cd_tol: float = DEFAULT_CD_TOL
    cd_max_cycles: int = DEFAULT_CD_MAX_CYCLES
    upsilon_floor_rel: float = 1e-6
    # "gram" or "naive"; both run the same coordinate updates
    cd_method: str = "gram"

    def __post_init__(self):
        if self.num_lambdas < 1:
            raise ConfigError("num_lambdas must be >= 1")
        if not 0.0 < self.lambda_min_ratio < 1.0:
            raise ConfigError("lambda_min_ratio must lie in (0, 1)")
        if self.irls_tol <= 0 or self.cd_tol <= 0 or self.upsilon_floor_rel <= 0:
            raise ConfigError("tolerances and floors must be positive")
        if self.irls_max_iters < 1 or self.cd_max_cycles < 1:
            raise ConfigError("iteration caps must be >= 1")
        if self.cd_method not in ("gram", "naive"):
            raise ConfigError(f"cd_method must be 'gram' or 'naive', got {self.cd_method!r}")


@dataclass
class PathResult:
    """Solutions over the grid; row ``j`` belongs to ``lambdas[j]`` (increasing)."""

    lambdas: np.ndarray
    intercepts: np.ndarray
    coefficients: np.ndarray
    irls_iters: np.ndarray
    converged: np.ndarray
    eta_clamped: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    family: GlmFamily = GlmFamily.LOGISTIC
    scaling: ScalingStrategy = ScalingStrategy.CONSTANT

    def __len__(self) -> int:
        return len(self.lambdas)

    def coef(self, j: int) -> AugmentedCoefficients:
        return AugmentedCoefficients(self.intercepts[j], self.coefficients[j])


class IrlsResult(NamedTuple):
    coef: AugmentedCoefficients
    iters: int
    converged: bool
    eta_clamped: bool
    upsilon: np.ndarray


def _floor_upsilon(ups: np.ndarray, floor_rel: float) -> np.ndarray:
    top = ups.max() if ups.size else 0.0
    if top <= 0.0:
        # every column is degenerate; the multiplier is irrelevant
        return np.ones_like(ups)
    return np.maximum(ups, floor_rel * top)


def constant_scaling(X, floor_rel: float = 1e-6) -> np.ndarray:
    """Square root of each column's empirical variance (1/n denominator), floored."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise ContractError("constant scaling needs at least two rows")
    centred = X - X.mean(axis=0)
    ups = np.sqrt(np.einsum("ij,ij->j", centred, centred) / X.shape[0])
    return _floor_upsilon(ups, floor_rel)


def _weighted_centre(X_t: np.ndarray, w: np.ndarray, c_x: np.ndarray) -> np.ndarray:
    return X_t - np.outer(w, c_x)


def iterative_scaling(X_t, w, c_x, floor_rel: float = 1e-6) -> np.ndarray:
    """Square roots of ``diag(X_t' C_t X_t) / n`` with ``C_t = I - w w'/||w||^2``.

    ``X_t`` is the row-weighted design ``diag(w) X`` and ``c_x = X_t' w / ||w||^2``.
    """
    X_t = np.asarray(X_t, dtype=float)
    Xc = _weighted_centre(X_t, np.asarray(w, dtype=float), np.asarray(c_x, dtype=float))
    return _scaling_from_centred(Xc, floor_rel)


def _scaling_from_centred(Xc: np.ndarray, floor_rel: float) -> np.ndarray:
    ups = np.sqrt(np.einsum("ij,ij->j", Xc, Xc) / Xc.shape[0])
    return _floor_upsilon(ups, floor_rel)


def _clamp_eta(family: GlmFamily, eta: np.ndarray) -> tuple[np.ndarray, bool]:
    if family is GlmFamily.LOGISTIC:
        clamped = np.clip(eta, -ETA_CLAMP, ETA_CLAMP)
    elif family is GlmFamily.POISSON:
        clamped = np.minimum(eta, ETA_CLAMP)
    else:
        return eta, False
    return clamped, bool(np.any(clamped != eta))


def lambda_max(
    dataset: Dataset,
    family: GlmFamily,
    scaling: ScalingStrategy,
    config: PathConfig | None = None,
) -> float:
    """Smallest lambda at which the penalized fit has all coefficients at zero."""
    family = GlmFamily.parse(family)
    scaling = ScalingStrategy.parse(scaling)
    config = config or PathConfig()
    X, y = dataset.X, dataset.y
    n = dataset.n
    b0 = null_intercept(family, y)
    mu0 = mean_response(family, np.full(n, b0))
    g = X.T @ (mu0 - y) / n
    if scaling is ScalingStrategy.CONSTANT:
        ups = constant_scaling(X, config.upsilon_floor_rel)
    else:
        w = irls_weights(family, mu0)
        X_t = w[:, None] * X
        c_x = X_t.T @ w / (w @ w)
        ups = iterative_scaling(X_t, w, c_x, config.upsilon_floor_rel)
    lmax = float(np.max(np.abs(g) / ups))
    if lmax == 0.0:
        warnings.warn("lambda_max is zero: no feature correlates with the response", stacklevel=2)
        return 0.0
    return lmax * (1.0 + LAMBDA_MAX_GUARD)


def make_lambda_grid(lam_max: float, config: PathConfig | None = None) -> np.ndarray:
    """Increasing log-spaced grid from ``lam_max * lambda_min_ratio`` to ``lam_max``."""
    config = config or PathConfig()
    if not lam_max > 0.0:
        raise DegenerateProblemError(f"cannot build a lambda grid from lambda_max = {lam_max}")
    m = config.num_lambdas
    if m == 1:
        return np.array([lam_max])
    grid = lam_max * config.lambda_min_ratio ** (np.arange(m - 1, -1, -1) / (m - 1))
    grid[-1] = lam_max
    return grid


def irls_fit(
    dataset: Dataset,
    family: GlmFamily,
    lam: float,
    scaling: ScalingStrategy,
    init: AugmentedCoefficients | None = None,
    config: PathConfig | None = None,
    trace: list | None = None,
) -> IrlsResult:
    """Middle loop: repeated weighted Lasso fits of the local quadratic model.

    Stops when the coefficient change (intercept excluded) has Euclidean norm
    below ``config.irls_tol``. When ``trace`` is a list, one dict per pass is
    appended with the iterates before/after and the multipliers used.
    """
    family = GlmFamily.parse(family)
    scaling = ScalingStrategy.parse(scaling)
    config = config or PathConfig()
    if lam < 0:
        raise ContractError(f"lambda must be non-negative, got {lam}")
    X = np.asfortranarray(dataset.X)
    y = dataset.y
    n, p = X.shape
    if init is None:
        init = AugmentedCoefficients.zeros(p, null_intercept(family, y))
    b0, b = init.b0, init.b.copy()
    const_ups = (
        constant_scaling(X, config.upsilon_floor_rel)
        if scaling is ScalingStrategy.CONSTANT
        else None
    )

    converged = False
    any_clamped = False
    ups = const_ups
    iters = 0
    for iters in range(1, config.irls_max_iters + 1):
        b_old = b.copy()
        b0_old = b0
        eta = b0 + X @ b
        eta_w, clamped = _clamp_eta(family, eta)
        any_clamped |= clamped
        mu = mean_response(family, eta_w)
        w = irls_weights(family, mu)
        X_t = X * w[:, None]
        y_t = w * eta + (y - mu) / w
        ww = w @ w
        c_y = (y_t @ w) / ww
        c_x = (X_t.T @ w) / ww
        Xc = _weighted_centre(X_t, w, c_x)
        if scaling is ScalingStrategy.ITERATIVE:
            ups = _scaling_from_centred(Xc, config.upsilon_floor_rel)
        problem = WeightedLassoProblem(
            y_t - w * c_y, Xc, lam, ups, config.cd_tol, config.cd_max_cycles
        )
        sol = lasso_cd_gram(problem, b) if config.cd_method == "gram" else lasso_cd(problem, b)
        b = sol.b
        b0 = float(c_y - c_x @ b)
        if not (np.isfinite(b0) and np.all(np.isfinite(b))):
            raise NonFiniteIterateError(f"non-finite iterate at lambda = {lam:.6g}", lam=lam)
        if trace is not None:
            trace.append(
                {
                    "b0_before": b0_old,
                    "b_before": b_old,
                    "b0_after": b0,
                    "b_after": b.copy(),
                    "upsilon": np.array(ups),
                    "cd_converged": sol.converged,
                }
            )
        if np.linalg.norm(b_old - b) < config.irls_tol:
            converged = sol.converged
            break
    return IrlsResult(AugmentedCoefficients(b0, b), iters, converged, any_clamped, np.array(ups))


def fit_path(
    dataset: Dataset,
    family: GlmFamily,
    scaling: ScalingStrategy,
    config: PathConfig | None = None,
    lambdas=None,
) -> PathResult:
    """Solve the whole grid from the largest lambda down, warm-starting each fit.

    ``lambdas`` overrides the default grid (must be increasing). A lambda whose
    fit diverges is recorded as not converged with NaN coefficients; the next
    fit restarts from the last finite solution.
    """
    family = GlmFamily.parse(family)
    scaling = ScalingStrategy.parse(scaling)
    config = config or PathConfig()
    dataset.validate(family)
    b0_null = null_intercept(family, dataset.y)
    if lambdas is None:
        grid = make_lambda_grid(lambda_max(dataset, family, scaling, config), config)
    else:
        grid = np.asarray(lambdas, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("lambda grid must be strictly increasing")
    m, p = len(grid), dataset.p
    intercepts = np.full(m, np.nan)
    coefs = np.full((m, p), np.nan)
    iters = np.zeros(m, dtype=int)
    conv = np.zeros(m, dtype=bool)
    clamped = np.zeros(m, dtype=bool)

    current = AugmentedCoefficients.zeros(p, b0_null)
    for j in range(m - 1, -1, -1):
        try:
            res = irls_fit(dataset, family, grid[j], scaling, current, config)
        except NonFiniteIterateError:
            continue
        current = res.coef
        intercepts[j] = res.coef.b0
        coefs[j] = res.coef.b
        iters[j] = res.iters
        conv[j] = res.converged
        clamped[j] = res.eta_clamped
    return PathResult(grid, intercepts, coefs, iters, conv, clamped, family, scaling)
