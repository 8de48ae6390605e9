import numpy as np
import pytest

from rotatorlab import solve_order_parameter
from rotatorlab.potential import TrigPolynomial


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance checks")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sd2():
    """Synchronized stationary density at K = 2 (the workhorse coupling)."""
    return solve_order_parameter(2.0)


@pytest.fixture(scope="session")
def table1_potential():
    """V'(theta) = 1 + 1.1 sin(theta), the benchmark forcing."""
    return TrigPolynomial(a0=1.0, a=(0.0,), b=(1.1,))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260819)
