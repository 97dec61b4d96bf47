import sys

import numpy as np
import pytest

from substructuring import Laboratory, ProblemConfig, build_bar_problem, build_problem
from substructuring.operators import build_coarse_split, build_operators


@pytest.fixture(scope="session")
def bar():
    return build_bar_problem()


@pytest.fixture(scope="session")
def bar_ops(bar):
    return build_operators(bar)


@pytest.fixture(scope="session")
def lab22():
    return Laboratory(ProblemConfig((2, 2), 2))


@pytest.fixture(scope="session")
def lab44():
    return Laboratory(ProblemConfig((4, 4), 4))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
