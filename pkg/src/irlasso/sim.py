"""Monte Carlo comparison of constant and iterative penalty scaling.

One replicate draws independent train / validation / test sets from

    h = tau * (beta0 + X beta),   y ~ Bernoulli(sigmoid(h)) or Poisson(exp(h)),

with Gaussian rows ``N(0, Sigma)``, ``Sigma_ij = rho ** (gamma |i-j|)``, and
optional thresholding of small entries. The path is fitted on train, lambda*
is chosen by expected loss on validation, and the chosen fit is scored on
test. Random streams are derived from ``(seed, replicate, role)`` so every
replicate is reproducible on its own and independent of execution order.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from irlasso.errors import (
    AggregationError,
    ConfigError,
    CovarianceDegenerateError,
    DegenerateProblemError,
    NonFiniteIterateError,
)
from irlasso.families import (
    AugmentedCoefficients,
    Dataset,
    GlmFamily,
    average_signal_variance,
    expected_test_loss,
    mean_response,
)
from irlasso.path import PathConfig, PathResult, ScalingStrategy, fit_path

log = logging.getLogger(__name__)

BETA_HEAD = (25.0, 4.0, -4.0, 50.0, 4.0, -4.0, 75.0, 4.0, -4.0, 100.0)
N_SIGNAL = len(BETA_HEAD)

# canonical row order for the four correlation settings
RHO_GAMMA_PAIRS = ((0.1, 0.1), (0.1, 1.0), (0.9, 0.1), (0.9, 1.0))

ROLE_TRAIN, ROLE_VALIDATION, ROLE_TEST = 0, 1, 2

METRICS = ("bias", "tp", "fp", "test_loss", "lambda_star", "nonzeros", "avg_signal_variance")


@dataclass
class SimConfig:
    n: int = 1000
    p: int = 100
    tau: float = 1.0
    xi: float | None = 0.1
    rho: float = 0.1
    gamma: float = 0.1
    family: GlmFamily = GlmFamily.LOGISTIC
    num_lambdas: int = 100
    replicates: int = 100
    seed: int = 20230101
    # "literal": zero X_ij < xi; "magnitude": zero |X_ij| < xi
    sparsify: str = "literal"
    # multiplies the linear predictor; -1 flips the sign of the true signal
    signal_sign: float = 1.0
    lambda_min_ratio: float = 1e-4

    def __post_init__(self):
        self.family = GlmFamily.parse(self.family)
        if self.n < 1 or self.p < 1 or self.replicates < 1:
            raise ConfigError("n, p and replicates must be >= 1")
        if not -1.0 < self.rho < 1.0:
            raise ConfigError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.tau < 0:
            raise ConfigError(f"tau must be non-negative, got {self.tau}")
        if self.xi is not None and self.xi <= 0:
            raise ConfigError("xi must be positive (use None for no sparsification)")
        if self.sparsify not in ("literal", "magnitude"):
            raise ConfigError(f"sparsify must be 'literal' or 'magnitude', got {self.sparsify!r}")
        if self.signal_sign not in (1.0, -1.0):
            raise ConfigError("signal_sign must be +1 or -1")

    def path_config(self) -> PathConfig:
        return PathConfig(num_lambdas=self.num_lambdas, lambda_min_ratio=self.lambda_min_ratio)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        return d


@dataclass
class TrueModel:
    beta0: float
    beta: np.ndarray


@dataclass
class MetricsRow:
    bias: float
    tp: int
    fp: int
    test_loss: float
    lambda_star: float
    nonzeros: int
    avg_signal_variance: float
    replicate: int = -1
    strategy: str = ""


@dataclass
class TableCell:
    method: str
    rho: float
    gamma: float
    mean: dict = field(default_factory=dict)
    sem: dict = field(default_factory=dict)
    replicates: int = 0
    failures: int = 0


def make_covariance(p: int, rho: float, gamma: float) -> np.ndarray:
    """``Sigma_ij = rho ** (gamma |i-j|)``; negative rho keeps the sign pattern ``sign(rho)**|i-j|``."""
    if not -1.0 < rho < 1.0 or gamma <= 0:
        raise ConfigError("need |rho| < 1 and gamma > 0")
    d = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    sigma = np.sign(rho) ** d * np.abs(rho) ** (gamma * d)
    np.fill_diagonal(sigma, 1.0)
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise CovarianceDegenerateError(
            f"covariance with rho={rho}, gamma={gamma} is not positive definite"
        ) from None
    return sigma


def _cholesky(config: SimConfig) -> np.ndarray:
    return np.linalg.cholesky(make_covariance(config.p, config.rho, config.gamma))


def gen_design(config: SimConfig, rng: np.random.Generator, chol=None) -> np.ndarray:
    L = _cholesky(config) if chol is None else chol
    X = rng.standard_normal((config.n, config.p)) @ L.T
    if config.xi is not None:
        small = X < config.xi if config.sparsify == "literal" else np.abs(X) < config.xi
        X[small] = 0.0
    return X


def true_beta(p: int) -> TrueModel:
    if p < N_SIGNAL:
        raise ConfigError(f"p must be at least {N_SIGNAL}, got {p}")
    beta = np.zeros(p)
    beta[:N_SIGNAL] = BETA_HEAD
    return TrueModel(0.0, beta)


def gen_response(
    family: GlmFamily,
    X: np.ndarray,
    model: TrueModel,
    tau: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw responses at ``mu = mean(tau * (beta0 + X beta))``; returns ``(y, mu)``."""
    family = GlmFamily.parse(family)
    h = tau * (model.beta0 + X @ model.beta)
    try:
        mu = mean_response(family, h)
    except NonFiniteIterateError:
        raise ConfigError(f"poisson mean overflows for tau = {tau}") from None
    if family is GlmFamily.LOGISTIC:
        y = rng.binomial(1, mu).astype(float)
    elif family is GlmFamily.POISSON:
        try:
            y = rng.poisson(mu).astype(float)
        except ValueError:
            raise ConfigError(
                f"poisson mean too large to sample (max {mu.max():.3g}) for tau = {tau}"
            ) from None
    else:
        y = mu + rng.standard_normal(mu.shape)
    return y, mu


def select_lambda(
    path: PathResult, validation: Dataset, family: GlmFamily
) -> tuple[float, int]:
    """Grid point with the smallest validation expected loss; ties go to the larger lambda."""
    best, best_j = np.inf, -1
    for j in range(len(path) - 1, -1, -1):
        if not np.all(np.isfinite(path.coefficients[j])):
            continue
        try:
            loss = expected_test_loss(family, validation, path.coef(j))
        except NonFiniteIterateError:
            continue
        if loss < best:
            best, best_j = loss, j
    if best_j < 0:
        raise DegenerateProblemError("no grid point produced a finite validation loss")
    return float(path.lambdas[best_j]), best_j


def score_fit(
    model: TrueModel,
    coef: AugmentedCoefficients,
    test: Dataset,
    family: GlmFamily,
    n_signal: int = N_SIGNAL,
) -> MetricsRow:
    b = coef.b
    nz = b != 0.0
    tp = int(np.count_nonzero(nz[:n_signal]))
    fp = int(np.count_nonzero(nz[n_signal:]))
    return MetricsRow(
        bias=float(np.linalg.norm(model.beta - b)),
        tp=tp,
        fp=fp,
        test_loss=expected_test_loss(family, test, coef),
        lambda_star=float("nan"),
        nonzeros=tp + fp,
        avg_signal_variance=average_signal_variance(family, test.mu_true),
    )


def replicate_rng(seed: int, replicate: int, role: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate, role)))


def simulate_datasets(config: SimConfig, replicate: int) -> tuple[TrueModel, list[Dataset]]:
    """Train, validation and test sets for one replicate (identical generating parameters)."""
    model = true_beta(config.p)
    model = TrueModel(model.beta0, config.signal_sign * model.beta)
    L = _cholesky(config)
    out = []
    for role in (ROLE_TRAIN, ROLE_VALIDATION, ROLE_TEST):
        rng = replicate_rng(config.seed, replicate, role)
        X = gen_design(config, rng, L)
        y, mu = gen_response(config.family, X, model, config.tau, rng)
        out.append(Dataset(X, y, mu))
    return model, out


def run_replicate(config: SimConfig, strategy: ScalingStrategy, replicate: int) -> MetricsRow:
    strategy = ScalingStrategy.parse(strategy)
    model, (train, val, test) = simulate_datasets(config, replicate)
    path = fit_path(train, config.family, strategy, config.path_config())
    lam_star, j = select_lambda(path, val, config.family)
    row = score_fit(model, path.coef(j), test, config.family)
    row.lambda_star = lam_star
    row.avg_signal_variance = float(
        np.mean([average_signal_variance(config.family, d.mu_true) for d in (train, val, test)])
    )
    row.replicate = replicate
    row.strategy = strategy.value
    return row


def aggregate(rows: list[MetricsRow], method: str = "", rho: float = float("nan"),
              gamma: float = float("nan")) -> TableCell:
    """Mean and standard error (sample sd / sqrt(k)) of every metric."""
    k = len(rows)
    if k < 2:
        raise AggregationError(f"need at least 2 replicate rows to aggregate, got {k}")
    cell = TableCell(method=method, rho=rho, gamma=gamma, replicates=k)
    for name in METRICS:
        vals = np.array([getattr(r, name) for r in rows], dtype=float)
        cell.mean[name] = float(vals.mean())
        cell.sem[name] = float(vals.std(ddof=1) / np.sqrt(k))
    return cell


def _replicate_job(args):
    config, strategy, rep = args
    try:
        return rep, run_replicate(config, strategy, rep), None
    except (NonFiniteIterateError, DegenerateProblemError) as exc:
        return rep, None, f"{type(exc).__name__}: {exc}"


def run_cell(
    config: SimConfig, strategy: ScalingStrategy, threads: int = 1
) -> tuple[TableCell, list[MetricsRow]]:
    """All replicates of one (strategy, rho, gamma) setting, aggregated."""
    strategy = ScalingStrategy.parse(strategy)
    jobs = [(config, strategy, r) for r in range(config.replicates)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_replicate_job, jobs))
    else:
        results = [_replicate_job(j) for j in jobs]
    results.sort(key=lambda t: t[0])
    rows, failures = [], 0
    for rep, row, err in results:
        if row is None:
            failures += 1
            log.warning("replicate %d (%s) failed: %s", rep, strategy.value, err)
        else:
            rows.append(row)
    cell = aggregate(rows, strategy.value, config.rho, config.gamma)
    cell.failures = failures
    return cell, rows


def run_table(
    base: SimConfig,
    strategies=(ScalingStrategy.ITERATIVE, ScalingStrategy.CONSTANT),
    pairs=RHO_GAMMA_PAIRS,
    threads: int = 1,
) -> list[TableCell]:
    cells = []
    for rho, gamma in pairs:
        cfg = replace(base, rho=rho, gamma=gamma)
        for s in strategies:
            cell, _ = run_cell(cfg, s, threads)
            cells.append(cell)
    return cells


# Parameter blocks of the benchmark tables. The sparse Poisson block uses a
# flipped signal: unflipped, exp(h) overflows on the non-negative design;
# flipped, the mean count (= average variance) is about 0.29.
TABLE_PRESETS = {
    "table1": dict(family=GlmFamily.LOGISTIC, tau=1.0, xi=0.1),
    "table2": dict(family=GlmFamily.LOGISTIC, tau=0.01, xi=None),
    "table3": dict(family=GlmFamily.POISSON, tau=0.1, xi=0.1, signal_sign=-1.0),
    "table4": dict(family=GlmFamily.POISSON, tau=0.01, xi=None),
    "table7": dict(family=GlmFamily.LOGISTIC, tau=0.01, xi=0.1),
    "table8": dict(family=GlmFamily.LOGISTIC, tau=0.1, xi=None),
}
TABLE_PRESETS["table5"] = TABLE_PRESETS["table3"]
TABLE_PRESETS["table6"] = TABLE_PRESETS["table4"]


def preset_config(name: str, **overrides) -> SimConfig:
    try:
        params = dict(TABLE_PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown table preset {name!r}; known: {sorted(TABLE_PRESETS)}") from None
    params.update(overrides)
    return SimConfig(**params)
