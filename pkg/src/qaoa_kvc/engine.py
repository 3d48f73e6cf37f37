"""p-round QAOA evolution in the weight-k sector, expectation values and sampling."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg

from qaoa_kvc.errors import InvalidArgument, ResourceLimit, UndefinedRatio
from qaoa_kvc.instances import ProblemInstance, to_bitstring
from qaoa_kvc.operators import (
    MixerKind,
    build_mixer,
    build_phase_separator,
    complete_pairs,
    ring_pairs,
)
from qaoa_kvc.subspace import StateVector, dicke_state

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AngleSchedule:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) for x in self.gammas)
        b = tuple(float(x) for x in self.betas)
        if len(g) != len(b) or len(g) < 1:
            raise InvalidArgument(f"need equal, non-zero lengths; got {len(g)} gammas, {len(b)} betas")
        if not all(math.isfinite(x) for x in g + b):
            raise InvalidArgument("angles must be finite")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "betas", b)

    @property
    def p(self) -> int:
        return len(self.gammas)

    def to_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)

    @classmethod
    def from_vector(cls, x) -> "AngleSchedule":
        x = np.asarray(x, dtype=float)
        p = x.size // 2
        return cls(tuple(x[:p]), tuple(x[p:]))

    def padded(self, rounds: int = 1) -> "AngleSchedule":
        """Append zero-angle rounds; the final state is unchanged."""
        return AngleSchedule(self.gammas + (0.0,) * rounds, self.betas + (0.0,) * rounds)

    def to_dict(self) -> dict:
        return {"p": self.p, "gammas": list(self.gammas), "betas": list(self.betas)}


@dataclass(frozen=True)
class SearchDomain:
    gamma_max: float = TWO_PI
    beta_max: float = math.pi / 2

    def __post_init__(self):
        if not (self.gamma_max > 0 and self.beta_max > 0):
            raise InvalidArgument("search domain ranges must be positive")

    def sample(self, rng: np.random.Generator, p: int, size: int | None = None):
        """Uniform draws; returns (gammas, betas) arrays of shape (p,) or (size, p)."""
        shape = (p,) if size is None else (size, p)
        return rng.uniform(0.0, self.gamma_max, shape), rng.uniform(0.0, self.beta_max, shape)

    def project(self, x: np.ndarray, mixer_kind) -> np.ndarray:
        """Map a flat (gammas, betas) vector into the domain.

        Gammas wrap modulo gamma_max. Betas wrap modulo beta_max for the complete
        mixer and are clamped for the ring mixer, which has no period to wrap by.
        """
        x = np.array(x, dtype=float)
        p = x.size // 2
        g, b = x[:p], x[p:]
        g[:] = np.mod(g, self.gamma_max)
        g[g >= self.gamma_max] = 0.0  # mod can round up to the modulus itself
        if MixerKind(mixer_kind) is MixerKind.COMPLETE:
            b[:] = np.mod(b, self.beta_max)
            b[b >= self.beta_max] = 0.0
        else:
            b[:] = np.clip(b, 0.0, np.nextafter(self.beta_max, 0.0))
        return x

    def contains(self, schedule: AngleSchedule) -> bool:
        return all(0.0 <= g < self.gamma_max for g in schedule.gammas) and all(
            0.0 <= b < self.beta_max for b in schedule.betas
        )

    def to_dict(self) -> dict:
        return {"gamma_max": self.gamma_max, "beta_max": self.beta_max}


class QAOASimulator:
    """Phase separator + mixer pair for one instance; evaluates F_p exactly."""

    def __init__(self, instance: ProblemInstance, mixer_kind=MixerKind.COMPLETE, dense: bool | None = None):
        self.instance = instance
        self.index = instance.index
        self.mixer_kind = MixerKind(mixer_kind)
        self.phase = build_phase_separator(instance)
        self.mixer = build_mixer(self.mixer_kind, self.index, dense)
        self._diag = self.phase.diagonal
        self._values, self._value_index = np.unique(self._diag, return_inverse=True)

    @property
    def dim(self) -> int:
        return self.index.dim

    def _check(self, state: StateVector):
        if state.dim != self.dim:
            raise InvalidArgument(f"state dim {state.dim} != subspace dim {self.dim}")

    def evolve(self, initial: StateVector, schedule: AngleSchedule) -> StateVector:
        self._check(initial)
        amps = initial.amplitudes
        for g, b in zip(schedule.gammas, schedule.betas):
            amps = self._phases(g) * amps
            amps = self.mixer.apply(b, amps)
        return StateVector(self.index, amps)

    def _phases(self, gamma):
        # objective values are few small integers; exponentiate each once
        if np.ndim(gamma) == 0:
            return np.exp(-1j * float(gamma) * self._values)[self._value_index]
        return np.exp(-1j * np.outer(self._values, gamma))[self._value_index]

    def value_flat(self, x: np.ndarray, amps0: np.ndarray) -> float:
        """F_p for a flat (gammas, betas) vector; hot path for optimizers, no validation."""
        p = x.size // 2
        amps = amps0
        for r in range(p):
            amps = self._phases(x[r]) * amps
            amps = self.mixer.apply(x[p + r], amps)
        return float(self._diag @ (amps.real**2 + amps.imag**2))

    def expectation(self, state: StateVector) -> float:
        self._check(state)
        return float(self._diag @ state.probabilities())

    def value(self, schedule: AngleSchedule, initial: StateVector) -> float:
        return self.expectation(self.evolve(initial, schedule))

    def values_batch(self, gammas: np.ndarray, betas: np.ndarray, initial: StateVector) -> np.ndarray:
        """F_p for B schedules at once; gammas and betas have shape (B, p)."""
        self._check(initial)
        gammas = np.atleast_2d(np.asarray(gammas, dtype=float))
        betas = np.atleast_2d(np.asarray(betas, dtype=float))
        if gammas.shape != betas.shape:
            raise InvalidArgument(f"gamma block {gammas.shape} != beta block {betas.shape}")
        n_sched, p = gammas.shape
        amps = np.repeat(initial.amplitudes[:, None], n_sched, axis=1)
        for r in range(p):
            amps *= self._phases(gammas[:, r])
            amps = self.mixer.apply(betas[:, r], amps)
        probs = amps.real**2 + amps.imag**2
        return self._diag @ probs

    def approximation_ratio(self, expectation: float) -> float:
        return approximation_ratio(self.instance, expectation)

    def run(self, initial: StateVector, schedule: AngleSchedule) -> "EvolutionResult":
        final = self.evolve(initial, schedule)
        e = self.expectation(final)
        return EvolutionResult(schedule, final, e, approximation_ratio(self.instance, e), final.probabilities())


@dataclass
class EvolutionResult:
    schedule: AngleSchedule
    final_state: StateVector
    expectation: float
    approx_ratio: float
    measurement_distribution: np.ndarray

    def to_dict(self, include_distribution: bool = False) -> dict:
        d = {
            "schedule": self.schedule.to_dict(),
            "expectation": self.expectation,
            "approx_ratio": self.approx_ratio,
        }
        if include_distribution:
            d["distribution"] = self.measurement_distribution.tolist()
        return d

    def to_json(self, include_distribution: bool = False) -> str:
        return json.dumps(self.to_dict(include_distribution))


def evolve(instance: ProblemInstance, mixer_kind, initial: StateVector, schedule: AngleSchedule) -> StateVector:
    return QAOASimulator(instance, mixer_kind).evolve(initial, schedule)


def expectation(instance: ProblemInstance, state: StateVector) -> float:
    if state.dim != instance.index.dim:
        raise InvalidArgument(f"state dim {state.dim} != subspace dim {instance.index.dim}")
    return float(instance.objective_table @ state.probabilities())


def approximation_ratio(instance: ProblemInstance, expectation: float) -> float:
    """Expectation over the best weight-k objective value."""
    if instance.max_value == 0:
        raise UndefinedRatio("instance has no edges; optimum is 0")
    return float(expectation) / instance.max_value


def measurement_distribution(state: StateVector) -> np.ndarray:
    return state.probabilities()


def sample_measurements(
    instance: ProblemInstance, state: StateVector, n_samples: int, seed
) -> list[tuple[str, int]]:
    """I.i.d. computational-basis measurements as (vertex-ordered bitstring, objective value)."""
    if n_samples < 1:
        raise InvalidArgument(f"n_samples must be >= 1, got {n_samples}")
    probs = state.probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    idx = rng.choice(state.dim, size=n_samples, p=probs)
    basis, table, n = instance.index.basis, instance.objective_table, instance.n
    return [(to_bitstring(int(basis[i]), n), int(table[i])) for i in idx]


# ---- full 2^n reference, used only as a test oracle ----

FULL_SPACE_MAX_N = 8
_I2 = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Y = np.array([[0.0, -1j], [1j, 0.0]])
_Z = np.diag([1.0, -1.0])


def _pauli_string(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    # qubit i is bit i of the basis index, so qubit n-1 is the leftmost Kronecker factor
    return reduce(np.kron, [ops.get(q, _I2) for q in range(n - 1, -1, -1)])


def full_space_phase_hamiltonian(instance: ProblemInstance) -> np.ndarray:
    n = instance.n
    dim = 1 << n
    h = np.zeros((dim, dim))
    eye = np.eye(dim)
    for u, v in instance.graph.edges:
        h += 3 * eye - _pauli_string(n, {u: _Z, v: _Z}) - _pauli_string(n, {u: _Z}) - _pauli_string(n, {v: _Z})
    return h / 4.0


def full_space_mixer_hamiltonian(n: int, mixer_kind) -> np.ndarray:
    pairs = ring_pairs(n) if MixerKind(mixer_kind) is MixerKind.RING else complete_pairs(n)
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=complex)
    for i, j in pairs:
        h += _pauli_string(n, {i: _X, j: _X}) + _pauli_string(n, {i: _Y, j: _Y})
    return h


def full_space_reference(instance: ProblemInstance, mixer_kind, initial, schedule: AngleSchedule):
    """Dense 2^n evolution. Returns (expectation, min weight-k sector occupation over all steps).

    ``initial`` is either "dicke" or a weight-k bitmask.
    """
    n = instance.n
    if n > FULL_SPACE_MAX_N:
        raise ResourceLimit(f"full-space reference limited to n <= {FULL_SPACE_MAX_N}, got {n}")
    dim = 1 << n
    in_sector = np.array([bin(x).count("1") == instance.k for x in range(dim)])
    psi = np.zeros(dim, dtype=complex)
    if isinstance(initial, str) and initial == "dicke":
        psi[in_sector] = 1.0 / math.sqrt(in_sector.sum())
    else:
        x = int(initial)
        if bin(x).count("1") != instance.k:
            raise InvalidArgument(f"initial string {x:#b} does not have weight {instance.k}")
        psi[x] = 1.0
    hp = full_space_phase_hamiltonian(instance)
    hm = full_space_mixer_hamiltonian(n, mixer_kind)
    occupation = [float(np.sum(np.abs(psi[in_sector]) ** 2))]
    for g, b in zip(schedule.gammas, schedule.betas):
        psi = scipy.linalg.expm(-1j * g * hp) @ psi
        occupation.append(float(np.sum(np.abs(psi[in_sector]) ** 2)))
        psi = scipy.linalg.expm(-1j * b * hm) @ psi
        occupation.append(float(np.sum(np.abs(psi[in_sector]) ** 2)))
    value = float(np.real(np.vdot(psi, hp @ psi)))
    return value, min(occupation)


def full_space_reference_expectation(instance: ProblemInstance, mixer_kind, initial, schedule: AngleSchedule) -> float:
    return full_space_reference(instance, mixer_kind, initial, schedule)[0]


def default_initial(instance: ProblemInstance) -> StateVector:
    return dicke_state(instance.index)
