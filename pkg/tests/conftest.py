import numpy as np
import pytest

from netdep.graph import AdjacencyMatrix, erdos_renyi_gnm


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_graph():
    # path 0-1-2-3 plus chord 1-3, node 4 isolated
    a = np.zeros((5, 5), dtype=int)
    for i, j in [(0, 1), (1, 2), (2, 3), (1, 3)]:
        a[i, j] = a[j, i] = 1
    return AdjacencyMatrix(a)


@pytest.fixture(scope="session")
def er_network():
    return erdos_renyi_gnm(120, 150, 5)
