import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ncenter.fixtures import axis_bounce, two_center_system

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def two_centers():
    return two_center_system(1.5)


@pytest.fixture(scope="session")
def bounce():
    return axis_bounce()


def circle_loop(radius=1.0, n=64, period=2 * np.pi, center=(0.0, 0.0), phase=0.1):
    from ncenter.model import PeriodicLoop

    th = phase + 2 * np.pi * np.arange(n) / n
    pts = np.stack([radius * np.cos(th), radius * np.sin(th)], axis=1) + np.asarray(center)
    return PeriodicLoop(period, pts)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record a criterion verdict; the verdicts are printed in the terminal summary."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number: int, passed: bool, detail: str) -> bool:
        store[number] = (bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        passed, detail = store.get(number, (False, "no verdict recorded (test errored or was not run)"))
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
