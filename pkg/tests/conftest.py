import sys

import numpy as np
import pytest

from bosontsp.tsp import DistanceMatrix

UNIT4 = [[0, 1, 5, 2], [1, 0, 3, 6], [5, 3, 0, 4], [2, 6, 4, 0]]


@pytest.fixture
def unit4():
    return DistanceMatrix(UNIT4, name="unit4")


def random_matrix(n, seed=0, symmetric=True):
    rng = np.random.default_rng(seed)
    d = rng.integers(1, 100, size=(n, n)).astype(float)
    if symmetric:
        d = np.triu(d, 1)
        d = d + d.T
    np.fill_diagonal(d, 0)
    return d


@pytest.fixture
def rand5():
    return DistanceMatrix(random_matrix(5, seed=3))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        terminalreporter.write_line(results[key])
