from functools import lru_cache

import pytest

from reltransport.equilibrium_thermo import build_theta_table, make_state
from reltransport.special_integrals import GasParameters


@lru_cache(maxsize=None)
def state_and_table(gamma: float, a: float = 0.0, source: str = "quadrature"):
    gas = GasParameters(a)
    state = make_state(gamma, gas=gas)
    return state, build_theta_table(state, gas, source=source)


@pytest.fixture
def point():
    return state_and_table


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
