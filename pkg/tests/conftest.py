import numpy as np
import pytest

from tolsketch.series import random_stationary_ar, simulate_ar


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_series():
    return np.array([1.0, 2.0, 3.0, 4.0, 5.0])


@pytest.fixture(scope="session")
def ar5_series():
    spec = random_stationary_ar(5, seed=2024)
    return spec, simulate_ar(spec, 20_000, seed=7)


def well_conditioned(rng, rows, cols):
    A = rng.standard_normal((rows, cols))
    return A + 0.1 * np.eye(rows, cols)


_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record a one-line verdict per acceptance criterion for the terminal summary."""

    def record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {detail}")
