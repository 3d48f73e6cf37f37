import numpy as np
import pytest

from qaoa_kvc import Graph, ProblemInstance


@pytest.fixture
def triangle():
    return Graph.complete(3)


@pytest.fixture
def path3():
    return Graph.path(3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_instance(n, seed, p_edge=0.5, k=None):
    from qaoa_kvc import gen_random_graph

    g = gen_random_graph(n, p_edge, seed)
    return ProblemInstance(g, n // 2 if k is None else k)
