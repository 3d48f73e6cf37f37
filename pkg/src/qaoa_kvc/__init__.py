"""Subspace QAOA simulator and experiment harness for Max-k Vertex Cover."""

__version__ = "0.1.0"

from qaoa_kvc.instances import Graph, ProblemInstance, gen_random_graph, objective, brute_force_optimum
from qaoa_kvc.subspace import SubspaceIndex, StateVector, dicke_state, basis_k_state, random_k_state
from qaoa_kvc.operators import (
    MixerKind,
    MixerOperator,
    PhaseSeparator,
    build_complete_mixer,
    build_phase_separator,
    build_ring_mixer,
    johnson_spectrum,
)
from qaoa_kvc.engine import AngleSchedule, QAOASimulator, SearchDomain

__all__ = [
    "AngleSchedule",
    "Graph",
    "MixerKind",
    "MixerOperator",
    "PhaseSeparator",
    "ProblemInstance",
    "QAOASimulator",
    "SearchDomain",
    "StateVector",
    "SubspaceIndex",
    "basis_k_state",
    "brute_force_optimum",
    "build_complete_mixer",
    "build_phase_separator",
    "build_ring_mixer",
    "dicke_state",
    "gen_random_graph",
    "johnson_spectrum",
    "objective",
    "random_k_state",
]
