import numpy as np
import pytest

from varjump import SampledFunction, SpaceGrid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def gauss_f():
    return SampledFunction.from_callable(SpaceGrid(-12.0, 12.0, 0.005), lambda x: np.exp(-x * x))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("]")[1].split()[0])):
            terminalreporter.write_line(line)
