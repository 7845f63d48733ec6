import numpy as np
import pytest

from infoprice import continuum as ct
from infoprice.primitives import bounded_exponential
from infoprice.prior import ChainParams


def benchmark_economy(lambda_b=1.0, theta_max=2.0):
    return ct.ContinuumEconomy(theta_max, ChainParams(2.0 / 3.0, lambda_b), bounded_exponential())


@pytest.fixture(scope="session")
def bench():
    return benchmark_economy()


@pytest.fixture(scope="session")
def bench_schedule(bench):
    return ct.solve_menu(bench, 401)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
