"""Max-k Vertex Cover instances: random graphs, the edge-coverage objective and exhaustive optima.

Subsets are plain Python ints (or numpy uint64 arrays) with bit ``i`` set when vertex ``i`` is selected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from qaoa_kvc.errors import InvalidArgument, ResourceLimit
from qaoa_kvc.subspace import SubspaceIndex

# enumeration limit for brute force and objective tables, C(24,12) ~ 2.7e6
MAX_ENUMERATION = 3_000_000
MAX_VERTICES = 63


@dataclass(frozen=True)
class Graph:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not 1 <= self.n_vertices <= MAX_VERTICES:
            raise InvalidArgument(f"n_vertices must be in [1, {MAX_VERTICES}], got {self.n_vertices}")
        canon = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidArgument(f"self-loop on vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise InvalidArgument(f"edge ({u}, {v}) out of range for n={self.n_vertices}")
            e = (min(u, v), max(u, v))
            if e in canon:
                raise InvalidArgument(f"duplicate edge {e}")
            canon.add(e)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def n(self) -> int:
        return self.n_vertices

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        return cls(n, tuple((int(u), int(v)) for u, v in edges))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, tuple(combinations(range(n), 2)))

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        return Graph(self.n_vertices, tuple((perm[u], perm[v]) for u, v in self.edges))

    def to_dict(self) -> dict:
        return {"n": self.n_vertices, "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "Graph":
        return cls.from_edges(d["n"], d["edges"])

    @classmethod
    def from_json(cls, s: str) -> "Graph":
        return cls.from_dict(json.loads(s))


def gen_random_graph(n: int, p_edge: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p_edge); pairs are visited in lexicographic order, one uniform draw each."""
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    if not 0.0 <= p_edge <= 1.0:
        raise InvalidArgument(f"p_edge must be in [0, 1], got {p_edge}")
    rng = np.random.default_rng(seed)
    pairs = list(combinations(range(n), 2))
    draws = rng.random(len(pairs))
    return Graph(n, tuple(e for e, r in zip(pairs, draws) if r < p_edge))


def as_int(subset, n: int | None = None) -> int:
    """Coerce an int, a 0/1 sequence (index = vertex) or a '0'/'1' string (char i = vertex i) to a bitmask."""
    if isinstance(subset, (int, np.integer)):
        return int(subset)
    if isinstance(subset, str):
        subset = [int(c) for c in subset]
    bits = list(subset)
    if n is not None and len(bits) != n:
        raise InvalidArgument(f"expected {n} bits, got {len(bits)}")
    return sum(1 << i for i, b in enumerate(bits) if b)


def to_bitstring(x: int, n: int) -> str:
    """Vertex-ordered string: character i is the membership bit of vertex i."""
    return "".join("1" if (x >> i) & 1 else "0" for i in range(n))


def objective(graph: Graph, subset) -> int:
    """Number of edges with at least one selected endpoint."""
    x = as_int(subset)
    return sum(1 for u, v in graph.edges if (x >> u) & 1 or (x >> v) & 1)


def objective_many(graph: Graph, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.uint64)
    out = np.zeros(xs.shape, dtype=np.int64)
    one = np.uint64(1)
    for u, v in graph.edges:
        out += (((xs >> np.uint64(u)) | (xs >> np.uint64(v))) & one).astype(np.int64)
    return out


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    graph: Graph
    k: int
    index: SubspaceIndex = field(init=False, repr=False)

    def __post_init__(self):
        if not 1 <= self.k <= self.graph.n_vertices:
            raise InvalidArgument(f"k must be in [1, {self.graph.n_vertices}], got {self.k}")
        object.__setattr__(self, "index", SubspaceIndex(self.graph.n_vertices, self.k))

    @classmethod
    def half(cls, graph: Graph) -> "ProblemInstance":
        return cls(graph, graph.n_vertices // 2)

    @property
    def n(self) -> int:
        return self.graph.n_vertices

    @property
    def n_edges(self) -> int:
        return self.graph.n_edges

    @cached_property
    def objective_table(self) -> np.ndarray:
        if self.index.dim > MAX_ENUMERATION:
            raise ResourceLimit(f"C({self.n},{self.k}) = {self.index.dim} exceeds {MAX_ENUMERATION}")
        table = objective_many(self.graph, self.index.basis)
        table.setflags(write=False)
        return table

    @cached_property
    def max_value(self) -> int:
        return int(self.objective_table.max())


def brute_force_optimum(instance: ProblemInstance) -> tuple[int, list[int]]:
    """Exhaustive maximum over weight-k subsets and every subset attaining it (ascending)."""
    table = instance.objective_table
    best = int(table.max())
    winners = instance.index.basis[table == best]
    return best, [int(x) for x in winners]
