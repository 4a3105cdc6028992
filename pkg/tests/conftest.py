import numpy as np
import pytest

from viscolab.params import GridDescriptor, make_params

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def params():
    return make_params(1.0, 0.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def small_grid():
    return GridDescriptor(16, 4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one line per acceptance criterion for the terminal summary."""

    def log(number: int, title: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
