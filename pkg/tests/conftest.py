import math

import numpy as np
import pytest

from topostat.data import MatrixKind, PointCloud, SquareMatrix, euclidean_distances

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def square_points():
    return PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))


@pytest.fixture
def square_distances(square_points):
    return euclidean_distances(square_points)


def random_distance_matrix(rng, n):
    """Symmetric matrix with distinct off-diagonal values in (0, 1)."""
    iu = np.triu_indices(n, 1)
    vals = rng.permutation(len(iu[0])) + rng.random(len(iu[0])) * 0.5
    vals = (vals + 1.0) / (len(iu[0]) + 2.0)
    d = np.zeros((n, n))
    d[iu] = vals
    d = d + d.T
    return SquareMatrix(d, MatrixKind.DISTANCE)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
