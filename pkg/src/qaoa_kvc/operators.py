"""Phase separator and XY mixers restricted to the weight-k sector.

Each XY term X_i X_j + Y_i Y_j maps |..0_i..1_j..> to 2|..1_i..0_j..> and kills
states where bits i and j agree, so within the sector a mixer is twice the
adjacency matrix of the graph "differ by one allowed transposition". For the
complete mixer that graph is the Johnson graph J(n, k).
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from qaoa_kvc.errors import InvalidArgument
from qaoa_kvc.subspace import StateVector, SubspaceIndex

XY_COUPLING = 2.0
# largest n for which spectra are computed densely (C(14,7) = 3432)
DENSE_MAX_N = 14
RECONSTRUCTION_TOL = 1e-9


class MixerKind(str, enum.Enum):
    RING = "ring"
    COMPLETE = "complete"


@dataclass(frozen=True, eq=False)
class PhaseSeparator:
    index: SubspaceIndex
    diagonal: np.ndarray
    n_edges: int

    @property
    def dim(self) -> int:
        return self.index.dim


@dataclass(frozen=True, eq=False)
class MixerOperator:
    kind: MixerKind
    index: SubspaceIndex
    matrix: scipy.sparse.csr_matrix
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None
    _v: np.ndarray | None = field(default=None, repr=False)
    _vt: np.ndarray | None = field(default=None, repr=False)
    _levels: tuple | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.index.dim

    @property
    def has_spectrum(self) -> bool:
        return self.eigenvalues is not None

    def apply(self, beta, amps: np.ndarray) -> np.ndarray:
        """exp(-i beta H) applied to a vector, or column-wise to a (dim, B) block.

        ``beta`` may be a scalar or, for a block, a length-B array of per-column angles.
        """
        beta = np.asarray(beta, dtype=float)
        if beta.ndim == 0 and beta == 0.0:
            return np.array(amps, dtype=np.complex128)
        if self.has_spectrum:
            levels, inverse = self._levels
            if beta.ndim == 0:
                factor = np.exp(-1j * float(beta) * levels)[inverse]
                if amps.ndim == 2:
                    factor = factor[:, None]
            else:
                factor = np.exp(-1j * np.outer(levels, beta))[inverse]
            w = _real_matmul(self._vt, amps)
            w *= factor
            return _real_matmul(self._v, w)
        if beta.ndim == 0:
            return _expm_multiply(self.matrix, float(beta), amps)
        out = np.empty_like(amps, dtype=np.complex128)
        for col, b in enumerate(beta):
            out[:, col] = _expm_multiply(self.matrix, float(b), amps[:, col])
        return out

    def spectrum_table(self, decimals: int = 8) -> list[tuple[float, int]]:
        """(eigenvalue, multiplicity) pairs, descending, with eigenvalues grouped after rounding."""
        if not self.has_spectrum:
            raise InvalidArgument("spectrum not cached for this mixer")
        vals, counts = np.unique(np.round(self.eigenvalues, decimals) + 0.0, return_counts=True)
        return [(float(v), int(c)) for v, c in zip(vals[::-1], counts[::-1])]


def _real_matmul(m: np.ndarray, amps: np.ndarray) -> np.ndarray:
    # real matrix times complex block as one real GEMM over interleaved (re, im) columns
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    if amps.ndim == 1:
        return (m @ amps.view(np.float64).reshape(-1, 2)).view(np.complex128).reshape(-1)
    return (m @ amps.view(np.float64)).view(np.complex128)


def distinct_levels(values, atol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values (clustered within atol) and the index of each entry's cluster."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    starts = np.concatenate(([True], np.diff(sorted_vals) > atol)) if values.size else np.zeros(0, bool)
    cluster = np.cumsum(starts) - 1
    levels = sorted_vals[starts]
    inverse = np.empty(values.size, dtype=np.intp)
    inverse[order] = cluster
    return levels, inverse


def _expm_multiply(matrix, beta: float, v: np.ndarray) -> np.ndarray:
    # Al-Mohy & Higham scaling-and-squaring Taylor action; no dense exponential is formed
    return scipy.sparse.linalg.expm_multiply(-1j * beta * matrix.astype(np.complex128), v)


def build_phase_separator(instance, index: SubspaceIndex | None = None) -> PhaseSeparator:
    index = instance.index if index is None else index
    if (index.n, index.k) != (instance.n, instance.k):
        raise InvalidArgument(
            f"subspace (n={index.n}, k={index.k}) does not match instance (n={instance.n}, k={instance.k})"
        )
    diag = instance.objective_table.astype(float)
    diag.setflags(write=False)
    return PhaseSeparator(index, diag, instance.n_edges)


def ring_pairs(n: int) -> list[tuple[int, int]]:
    """Distinct cyclic neighbour pairs (i, i+1 mod n); n = 2 yields the single pair (0, 1)."""
    return sorted({(min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)})


def complete_pairs(n: int) -> list[tuple[int, int]]:
    return list(combinations(range(n), 2))


def xy_matrix(index: SubspaceIndex, pairs) -> scipy.sparse.csr_matrix:
    basis = index.basis
    rows, cols = [], []
    one = np.uint64(1)
    for i, j in pairs:
        differ = (((basis >> np.uint64(i)) ^ (basis >> np.uint64(j))) & one).astype(bool)
        src = np.flatnonzero(differ)
        flipped = basis[src] ^ np.uint64((1 << i) | (1 << j))
        rows.append(src)
        cols.append(index.rank_many(flipped))
    if rows:
        r, c = np.concatenate(rows), np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=np.int64)
    data = np.full(r.shape, XY_COUPLING)
    m = scipy.sparse.coo_matrix((data, (r, c)), shape=(index.dim, index.dim)).tocsr()
    m.sum_duplicates()
    return m


def _with_spectrum(kind: MixerKind, index: SubspaceIndex, matrix, dense: bool) -> MixerOperator:
    if not dense:
        return MixerOperator(kind, index, matrix)
    dense_m = matrix.toarray()
    vals, vecs = scipy.linalg.eigh(dense_m)
    err = np.max(np.abs(vecs @ np.diag(vals) @ vecs.T - dense_m)) if index.dim else 0.0
    if err >= RECONSTRUCTION_TOL:
        raise ArithmeticError(f"eigendecomposition reconstruction error {err:.3e} >= {RECONSTRUCTION_TOL}")
    for a in (vals, vecs):
        a.setflags(write=False)
    # exponentials are evaluated once per distinct eigenvalue; clusters are
    # eigensolver noise around a degenerate level
    levels, inverse = distinct_levels(vals)
    return MixerOperator(
        kind, index, matrix, vals, vecs, np.ascontiguousarray(vecs), np.ascontiguousarray(vecs.T), (levels, inverse)
    )


@lru_cache(maxsize=64)
def _build_mixer(kind: MixerKind, n: int, k: int, dense: bool) -> MixerOperator:
    index = SubspaceIndex(n, k)
    pairs = ring_pairs(n) if kind is MixerKind.RING else complete_pairs(n)
    return _with_spectrum(kind, index, xy_matrix(index, pairs), dense)


def build_mixer(kind, index: SubspaceIndex, dense: bool | None = None) -> MixerOperator:
    kind = MixerKind(kind)
    if index.n < 2:
        raise InvalidArgument(f"XY mixers need n >= 2, got n={index.n}")
    if dense is None:
        dense = index.n <= DENSE_MAX_N
    return _build_mixer(kind, index.n, index.k, dense)


def build_ring_mixer(index: SubspaceIndex, dense: bool | None = None) -> MixerOperator:
    return build_mixer(MixerKind.RING, index, dense)


def build_complete_mixer(index: SubspaceIndex, dense: bool | None = None) -> MixerOperator:
    return build_mixer(MixerKind.COMPLETE, index, dense)


def johnson_spectrum(n: int, k: int) -> list[tuple[int, int]]:
    """Adjacency spectrum of J(n, k): (k-j)(n-k-j) - j with multiplicity C(n,j) - C(n,j-1)."""
    if not 0 <= k <= n:
        raise InvalidArgument(f"need 0 <= k <= n, got n={n}, k={k}")
    out = []
    for j in range(min(k, n - k) + 1):
        mult = math.comb(n, j) - (math.comb(n, j - 1) if j > 0 else 0)
        out.append(((k - j) * (n - k - j) - j, mult))
    return out


def propagator_apply(mixer: MixerOperator, beta: float, state: StateVector) -> StateVector:
    if state.dim != mixer.dim:
        raise InvalidArgument(f"state dim {state.dim} != mixer dim {mixer.dim}")
    return StateVector(state.index, mixer.apply(beta, state.amplitudes))


def phase_apply(sep: PhaseSeparator, gamma: float, state: StateVector) -> StateVector:
    if state.dim != sep.dim:
        raise InvalidArgument(f"state dim {state.dim} != phase separator dim {sep.dim}")
    return StateVector(state.index, np.exp(-1j * gamma * sep.diagonal) * state.amplitudes)


@dataclass(frozen=True)
class PeriodicityReport:
    candidates: np.ndarray  # x = pi d / 2
    deviations: np.ndarray  # max over eigenvalue pairs of dist(x (l_i - l_j), 2 pi Z)
    n_distinct_eigenvalues: int

    def period_index(self, tol: float) -> int | None:
        """Smallest d whose deviation is below ``tol``, or None."""
        hits = np.flatnonzero(self.deviations < tol)
        return int(hits[0]) + 1 if hits.size else None

    def is_periodic(self, tol: float) -> bool:
        return self.period_index(tol) is not None


def distinct_eigenvalues(values, atol: float = 1e-9) -> np.ndarray:
    vals = np.sort(np.asarray(values, dtype=float))
    if vals.size == 0:
        return vals
    keep = np.concatenate(([True], np.diff(vals) > atol))
    return vals[keep]


def mixer_eigenvalues(kind, n: int, k: int | None = None) -> np.ndarray:
    """Eigenvalues of the mixer on sector k, or on the full 2^n space when k is None."""
    kind = MixerKind(kind)
    sectors = range(n + 1) if k is None else [k]
    parts = []
    for kk in sectors:
        m = build_mixer(kind, SubspaceIndex(n, kk), dense=True)
        parts.append(np.asarray(m.eigenvalues))
    return np.concatenate(parts)


def periodicity_probe(eigenvalues, d_max: int) -> PeriodicityReport:
    lam = distinct_eigenvalues(eigenvalues)
    diffs = (lam[:, None] - lam[None, :])[np.triu_indices(lam.size, 1)]
    d = np.arange(1, d_max + 1)
    xs = np.pi * d / 2.0
    devs = np.zeros(d_max)
    two_pi = 2.0 * np.pi
    chunk = max(1, 2_000_000 // max(diffs.size, 1))
    for s in range(0, d_max, chunk):
        phase = np.outer(xs[s : s + chunk], diffs)
        dist = np.abs(phase - two_pi * np.round(phase / two_pi))
        devs[s : s + chunk] = dist.max(axis=1) if diffs.size else 0.0
    return PeriodicityReport(xs, devs, int(lam.size))


def ring_periodicity_probe(index: SubspaceIndex | int, d_max: int, kind=MixerKind.RING) -> PeriodicityReport:
    """Probe candidate periods pi d / 2 of a mixer.

    Passing a SubspaceIndex probes that sector; passing an int n probes the union of all sectors.
    """
    if isinstance(index, SubspaceIndex):
        vals = mixer_eigenvalues(kind, index.n, index.k)
    else:
        vals = mixer_eigenvalues(kind, int(index))
    return periodicity_probe(vals, d_max)


def spectrum_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eigenvalue", "multiplicity"])
    for v, m in table:
        w.writerow([repr(float(v)), int(m)])
    return buf.getvalue()


def matrix_coo_text(mixer: MixerOperator) -> str:
    coo = mixer.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{coo.row[i]} {coo.col[i]} {coo.data[i]:g}" for i in order]
    return "\n".join(lines) + ("\n" if lines else "")
