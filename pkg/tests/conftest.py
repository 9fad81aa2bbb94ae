import sys

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    acc = sys.modules.get("test_acceptance")
    lines = getattr(acc, "RESULTS", []) if acc else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


def make_instance(rng, n, p, beta=None, sigma=1.0, intercept=True):
    """Random regression instance with an optional intercept column."""
    if intercept:
        X = np.hstack([np.ones((n, 1)), rng.standard_normal((n, p - 1))])
    else:
        X = rng.standard_normal((n, p))
    if beta is None:
        beta = np.zeros(p)
        beta[: max(p // 2, 1)] = 2.0
    y = X @ beta + sigma * rng.standard_normal(n)
    return X, y, beta
