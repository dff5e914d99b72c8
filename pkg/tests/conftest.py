import numpy as np
import pytest

from vvfractal.ifs_model import PRESETS, preset

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=sorted(PRESETS))
def any_preset(request):
    return request.param, preset(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
