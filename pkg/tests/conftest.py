import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from teamquant.problems import RadnerParams, RelayParams, WitsenhausenParams, make_problem
from teamquant.team import static_reduce

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def wits():
    return make_problem(WitsenhausenParams(1.0))


@pytest.fixture
def relay3():
    return make_problem(RelayParams(3, (0.1, 0.3)))


@pytest.fixture
def radner():
    return make_problem(RadnerParams(0.1))


@pytest.fixture(params=["wits", "relay", "radner"])
def any_problem(request):
    return {
        "wits": make_problem(WitsenhausenParams(0.5)),
        "relay": make_problem(RelayParams(3, (0.1, 0.3))),
        "radner": make_problem(RadnerParams(0.2)),
    }[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def reduce(problem):
    return static_reduce(problem)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
