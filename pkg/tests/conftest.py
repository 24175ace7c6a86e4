import functools
import sys

import pytest

from planewave import find_lambda_star, make_power_reaction

ENV_PARAMS = {
    "fisher": (1.0, 1, 1, 1.0),
    "half": (0.5, 1, 2, 0.5),
    "two": (0.5, 2, 2, 2.0),
}


def env_named(name):
    return make_power_reaction(*ENV_PARAMS[name])


@functools.lru_cache(maxsize=None)
def critical(name):
    """Critical report per named environment, computed once per session."""
    return find_lambda_star(env_named(name))


@pytest.fixture
def fisher():
    return env_named("fisher")


@pytest.fixture
def half():
    return env_named("half")


@pytest.fixture
def two():
    return env_named("two")


@pytest.fixture(params=sorted(ENV_PARAMS))
def any_env(request):
    return request.param, env_named(request.param)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
