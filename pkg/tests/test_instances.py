import json
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaoa_kvc import Graph, ProblemInstance, brute_force_optimum, gen_random_graph, objective
from qaoa_kvc.errors import InvalidArgument
from qaoa_kvc.instances import as_int, objective_many, to_bitstring


def test_graph_rejects_bad_edges():
    with pytest.raises(InvalidArgument):
        Graph(3, ((0, 0),))
    with pytest.raises(InvalidArgument):
        Graph(3, ((0, 1), (1, 0)))
    with pytest.raises(InvalidArgument):
        Graph(3, ((0, 3),))
    with pytest.raises(InvalidArgument):
        Graph(0, ())


def test_random_graph_extremes():
    assert gen_random_graph(3, 1.0, 99).edges == ((0, 1), (0, 2), (1, 2))
    assert gen_random_graph(5, 0.0, 7).edges == ()


def test_random_graph_deterministic():
    assert gen_random_graph(10, 0.5, 42) == gen_random_graph(10, 0.5, 42)
    assert gen_random_graph(10, 0.5, 42) != gen_random_graph(10, 0.5, 43)


def test_random_graph_errors():
    with pytest.raises(InvalidArgument):
        gen_random_graph(0, 0.5, 1)
    with pytest.raises(InvalidArgument):
        gen_random_graph(4, 1.5, 1)


def test_random_graph_edge_density():
    counts = [gen_random_graph(10, 0.5, s).n_edges for s in range(400)]
    # 45 pairs, Binomial(45, 0.5) mean 22.5, std of the mean ~ 0.17
    assert abs(np.mean(counts) - 22.5) < 0.7


def test_graph_json_roundtrip():
    g = gen_random_graph(8, 0.5, 3)
    s = g.to_json()
    d = json.loads(s)
    assert d["n"] == 8
    assert d["edges"] == sorted(d["edges"])
    assert Graph.from_json(s) == g


def test_objective_examples(triangle, path3):
    assert objective(triangle, "100") == 2
    assert objective(triangle, "111") == 3
    assert objective(path3, "010") == 2
    assert objective(path3, [0, 1, 0]) == 2
    assert objective(path3, 0b010) == 2


def test_bitstring_helpers():
    assert as_int("100") == 1
    assert to_bitstring(1, 3) == "100"
    assert to_bitstring(as_int("0110"), 4) == "0110"


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**32 - 1), st.data())
def test_objective_bounds_and_monotone(n, seed, data):
    g = gen_random_graph(n, 0.5, seed)
    x = data.draw(st.integers(0, 2**n - 1))
    f = objective(g, x)
    assert 0 <= f <= g.n_edges
    assert objective(g, 2**n - 1) == g.n_edges
    for v in range(n):
        assert objective(g, x | (1 << v)) >= f


def test_objective_many_matches_scalar():
    g = gen_random_graph(9, 0.5, 5)
    xs = np.arange(2**9, dtype=np.uint64)
    np.testing.assert_array_equal(objective_many(g, xs), [objective(g, int(x)) for x in xs])


def test_brute_force_examples(triangle, path3):
    best, arg = brute_force_optimum(ProblemInstance(triangle, 1))
    assert best == 2 and sorted(to_bitstring(x, 3) for x in arg) == ["001", "010", "100"]
    best, arg = brute_force_optimum(ProblemInstance(Graph(5, ()), 2))
    assert best == 0 and len(arg) == 10
    best, arg = brute_force_optimum(ProblemInstance(path3, 1))
    assert best == 2 and [to_bitstring(x, 3) for x in arg] == ["010"]


def test_brute_force_against_enumeration():
    for seed in range(5):
        g = gen_random_graph(8, 0.5, seed)
        inst = ProblemInstance.half(g)
        values = {
            sum(1 << v for v in c): objective(g, sum(1 << v for v in c)) for c in combinations(range(8), 4)
        }
        best = max(values.values())
        got, arg = brute_force_optimum(inst)
        assert got == best == inst.objective_table.max()
        assert sorted(arg) == sorted(x for x, f in values.items() if f == best)


def test_instance_invariants():
    inst = ProblemInstance.half(gen_random_graph(10, 0.5, 0))
    assert inst.k == 5
    assert inst.objective_table.shape == (252,)
    assert inst.objective_table.min() >= 0 and inst.objective_table.max() <= inst.n_edges
    with pytest.raises(InvalidArgument):
        ProblemInstance(Graph(3, ()), 4)
    with pytest.raises(InvalidArgument):
        ProblemInstance(Graph(3, ()), 0)
