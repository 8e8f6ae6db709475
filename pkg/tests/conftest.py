import numpy as np
import pytest

from nashseek import PerturbationParams, QuadraticGame, ScriptedGame, StepSchedule
from nashseek.wireless import WirelessGame, default_settings


def quad_centered(center):
    def fn(a):
        return -(a - center) ** 2
    return fn


@pytest.fixture
def wireless_params():
    return default_settings()


@pytest.fixture
def wireless_game(wireless_params):
    return WirelessGame(wireless_params, expectation="exact")


@pytest.fixture
def reference_dither():
    return PerturbationParams([0.9, 0.9], [0.9, 1.0], [0.0, 0.0], [0.9, 0.9])


@pytest.fixture
def quad2():
    return ScriptedGame(quad_centered(2.0), 1)


@pytest.fixture
def small_dither():
    return PerturbationParams.uniform(1, amplitude=0.1, frequency=1.0, phase=0.0, growth=1.0)


@pytest.fixture
def noisy_quadratic():
    return QuadraticGame([2.0], 1.0, None, noise_std=1.0)


@pytest.fixture
def const_schedule():
    return StepSchedule.constant(0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    """Store one acceptance outcome; every line is echoed in the terminal summary."""
    line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
