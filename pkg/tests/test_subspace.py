import math
from collections import Counter

import numpy as np
import pytest

from qaoa_kvc import SubspaceIndex, StateVector, basis_k_state, dicke_state, random_k_state
from qaoa_kvc.errors import InvalidArgument


def colex_enumeration(n, k):
    return sorted(x for x in range(2**n) if bin(x).count("1") == k)


def test_rank_examples():
    idx = SubspaceIndex(4, 2)
    assert idx.rank(0b0011) == 0
    assert idx.rank(0b1100) == 5
    assert SubspaceIndex(1, 1).rank(1) == 0
    assert colex_enumeration(4, 2).index(0b1100) == 5


def test_unrank_examples():
    idx = SubspaceIndex(4, 2)
    assert idx.unrank(0) == 0b0011
    assert idx.unrank(5) == 0b1100


def test_rank_errors():
    idx = SubspaceIndex(4, 2)
    with pytest.raises(InvalidArgument):
        idx.rank(0b0111)
    with pytest.raises(InvalidArgument):
        idx.rank(0b110000)
    with pytest.raises(InvalidArgument):
        idx.unrank(6)
    with pytest.raises(InvalidArgument):
        idx.unrank(-1)


@pytest.mark.parametrize("n", range(0, 17))
def test_rank_unrank_bijection_exhaustive(n):
    for k in range(n + 1):
        idx = SubspaceIndex(n, k)
        assert idx.dim == math.comb(n, k)
        expected = colex_enumeration(n, k)
        np.testing.assert_array_equal(idx.basis, np.array(expected, dtype=np.uint64))
        if idx.dim <= 2000:
            for i, x in enumerate(expected):
                assert idx.rank(x) == i
                assert idx.unrank(i) == x
        np.testing.assert_array_equal(idx.rank_many(idx.basis), np.arange(idx.dim))


def test_roundtrip_10_5():
    idx = SubspaceIndex(10, 5)
    assert idx.dim == 252
    assert all(idx.rank(idx.unrank(i)) == i for i in range(idx.dim))


def test_dicke_state():
    d = dicke_state(SubspaceIndex(4, 2))
    np.testing.assert_allclose(d.amplitudes, np.full(6, 1 / math.sqrt(6)))
    assert dicke_state(SubspaceIndex(1, 1)).amplitudes.tolist() == [1.0]
    assert abs(d.norm() - 1) < 1e-12


def test_dicke_invariant_under_vertex_relabel(rng):
    idx = SubspaceIndex(7, 3)
    d = dicke_state(idx).amplitudes
    perm = rng.permutation(7)
    moved = np.empty_like(d)
    for i, x in enumerate(idx.basis):
        y = sum(1 << int(perm[v]) for v in range(7) if (int(x) >> v) & 1)
        moved[idx.rank(y)] = d[i]
    np.testing.assert_array_equal(moved, d)


def test_basis_k_state():
    idx = SubspaceIndex(4, 2)
    e0 = basis_k_state(idx, 0b0011).amplitudes
    e5 = basis_k_state(idx, 0b1100).amplitudes
    assert e0[0] == 1 and np.count_nonzero(e0) == 1
    assert e5[5] == 1 and np.count_nonzero(e5) == 1
    with pytest.raises(InvalidArgument):
        basis_k_state(idx, 0b0001)


def test_random_k_state_determinism_and_uniformity():
    idx = SubspaceIndex(4, 2)
    a, b = random_k_state(idx, 17), random_k_state(idx, 17)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert np.count_nonzero(a.amplitudes) == 1 and abs(a.norm() - 1) < 1e-15
    counts = Counter(int(np.argmax(np.abs(random_k_state(idx, s).amplitudes))) for s in range(10_000))
    assert set(counts) == set(range(6))
    for c in counts.values():
        assert abs(c / 10_000 - 1 / 6) < 0.02


def test_state_json_roundtrip(rng):
    idx = SubspaceIndex(5, 2)
    amps = rng.normal(size=10) + 1j * rng.normal(size=10)
    s = StateVector(idx, amps / np.linalg.norm(amps))
    back = StateVector.from_json(s.to_json())
    assert back.index == idx
    np.testing.assert_array_equal(back.amplitudes, s.amplitudes)


def test_state_shape_checked():
    with pytest.raises(InvalidArgument):
        StateVector(SubspaceIndex(4, 2), np.zeros(5))
