import numpy as np
import pytest

import runs_cache
from maglev_smc import PlantParams


@pytest.fixture
def params():
    return PlantParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if runs_cache.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in runs_cache.REPORT:
            terminalreporter.write_line(line)
