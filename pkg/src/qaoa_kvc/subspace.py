"""Hamming-weight-k basis indexing and initial states.

Basis states are ordered colexicographically, which for fixed weight is the same as
ascending order of the bitmask integer. The rank of a subset with set bits
c_1 < c_2 < ... < c_k is sum_j C(c_j, j).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from qaoa_kvc.errors import InvalidArgument


@dataclass(frozen=True)
class SubspaceIndex:
    n: int
    k: int

    def __post_init__(self):
        if self.n < 0 or not 0 <= self.k <= self.n:
            raise InvalidArgument(f"need 0 <= k <= n, got n={self.n}, k={self.k}")

    @property
    def dim(self) -> int:
        return math.comb(self.n, self.k)

    @cached_property
    def basis(self) -> np.ndarray:
        """All weight-k bitmasks in rank order (uint64)."""
        masks = sorted(sum(1 << i for i in c) for c in combinations(range(self.n), self.k))
        arr = np.array(masks, dtype=np.uint64)
        arr.setflags(write=False)
        return arr

    def rank(self, x) -> int:
        x = int(x)
        if x < 0 or x >> self.n or x.bit_count() != self.k:
            raise InvalidArgument(f"{x:#b} is not a weight-{self.k} string on {self.n} bits")
        r, j = 0, 0
        while x:
            low = x & -x
            j += 1
            r += math.comb(low.bit_length() - 1, j)
            x ^= low
        return r

    def rank_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized rank; assumes every entry is a valid weight-k mask."""
        return np.searchsorted(self.basis, np.asarray(xs, dtype=np.uint64))

    def unrank(self, i: int) -> int:
        i = int(i)
        if not 0 <= i < self.dim:
            raise InvalidArgument(f"rank {i} out of range [0, {self.dim})")
        x = 0
        c = self.n
        for j in range(self.k, 0, -1):
            c -= 1
            while math.comb(c, j) > i:
                c -= 1
            i -= math.comb(c, j)
            x |= 1 << c
        return x


@dataclass
class StateVector:
    index: SubspaceIndex
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.index.dim,):
            raise InvalidArgument(
                f"amplitude vector has shape {self.amplitudes.shape}, expected ({self.index.dim},)"
            )

    @property
    def dim(self) -> int:
        return self.index.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return self.amplitudes.real**2 + self.amplitudes.imag**2

    def copy(self) -> "StateVector":
        return StateVector(self.index, self.amplitudes.copy())

    def to_dict(self) -> dict:
        return {
            "n": self.index.n,
            "k": self.index.k,
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "StateVector":
        amps = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        return cls(SubspaceIndex(d["n"], d["k"]), amps)

    @classmethod
    def from_json(cls, s: str) -> "StateVector":
        return cls.from_dict(json.loads(s))


def dicke_state(index: SubspaceIndex) -> StateVector:
    return StateVector(index, np.full(index.dim, 1.0 / math.sqrt(index.dim), dtype=np.complex128))


def basis_k_state(index: SubspaceIndex, x) -> StateVector:
    amps = np.zeros(index.dim, dtype=np.complex128)
    amps[index.rank(x)] = 1.0
    return StateVector(index, amps)


def random_k_state(index: SubspaceIndex, seed) -> StateVector:
    """Basis state of a uniformly drawn weight-k string; the draw happens once per seed."""
    rng = np.random.default_rng(seed)
    return basis_k_state(index, index.unrank(int(rng.integers(index.dim))))
