import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from alphapi.dynamics import make_example_a, make_linear_game
from alphapi.experiments import LinearGameConfig, linear_spec
from alphapi.hji import GameSpec
from alphapi.lq import solve_gare

# fixtures below are frozen objects, safe to share across generated examples
settings.register_profile("alphapi", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("alphapi")


@pytest.fixture
def lin_cfg():
    return LinearGameConfig()


@pytest.fixture
def lin_spec(lin_cfg):
    return linear_spec(lin_cfg)


@pytest.fixture
def lin_gare(lin_cfg):
    return solve_gare(lin_cfg.A, lin_cfg.B, lin_cfg.D, lin_cfg.Q, np.diag(lin_cfg.R),
                      lin_cfg.gamma)


@pytest.fixture
def exa_spec():
    return GameSpec(make_example_a(), 2.0, [1.0])


@pytest.fixture
def zero_dyn():
    return make_linear_game(np.zeros((2, 2)), np.zeros((2, 1)), np.zeros((2, 1)), np.eye(2))


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one summary line per acceptance check."""
    def record(label, ok, detail):
        _VERDICTS.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
