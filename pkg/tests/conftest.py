import numpy as np
import pytest

from irlasso.families import Dataset, GlmFamily, mean_response


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def random_glm_dataset(rng, family, n=60, p=4, scale=0.5):
    family = GlmFamily.parse(family)
    X = rng.standard_normal((n, p))
    beta = rng.uniform(-1, 1, p) * scale
    eta = 0.2 + X @ beta
    mu = mean_response(family, eta)
    if family is GlmFamily.LOGISTIC:
        y = rng.binomial(1, mu).astype(float)
        if y.min() == y.max():
            y[0] = 1 - y[0]
    elif family is GlmFamily.POISSON:
        y = rng.poisson(mu).astype(float)
        if y.sum() == 0:
            y[0] = 1.0
    else:
        y = mu + rng.standard_normal(n)
    return Dataset(X, y, mu)


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
