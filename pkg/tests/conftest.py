import numpy as np
import pytest

from dce_atom.model import ModelParams
from dce_atom.operators import make_operator_set


@pytest.fixture(scope="session")
def ops8():
    return make_operator_set(8)


@pytest.fixture(scope="session")
def ops64():
    return make_operator_set(64)


@pytest.fixture
def params():
    return ModelParams(omega0=1.0, epsilon=0.05, eta=2.1, omega_atom=1.0, g=0.02)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA = []


@pytest.fixture
def report():
    """Record one acceptance line and fail the test if the criterion is not met."""

    def _report(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        _CRITERIA.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
