"""Fast invariant checks behind the ``verify`` subcommand.

Each check returns its worst observed error and the tolerance it is held to.
"""
from __future__ import annotations

import math
from collections import Counter

import numpy as np
import scipy.linalg

from qaoa_kvc.engine import AngleSchedule, QAOASimulator, SearchDomain, full_space_reference
from qaoa_kvc.instances import ProblemInstance, gen_random_graph
from qaoa_kvc.operators import MixerKind, build_complete_mixer, johnson_spectrum, ring_periodicity_probe
from qaoa_kvc.subspace import SubspaceIndex, basis_k_state, dicke_state


def _instance(rng: np.random.Generator, n: int) -> ProblemInstance:
    return ProblemInstance(gen_random_graph(n, 0.5, int(rng.integers(2**32))), n // 2)


def _schedule(rng: np.random.Generator, p: int) -> AngleSchedule:
    g, b = SearchDomain().sample(rng, p)
    return AngleSchedule(tuple(g), tuple(b))


def check_johnson(n_max: int = 8) -> tuple[float, bool]:
    worst, mult_ok = 0.0, True
    for n in range(2, n_max + 1):
        for k in range(n + 1):
            mixer = build_complete_mixer(SubspaceIndex(n, k))
            expected = np.sort([2 * v for v, m in johnson_spectrum(n, k) for _ in range(m)])
            worst = max(worst, float(np.max(np.abs(np.sort(mixer.eigenvalues) - expected))))
            got = Counter(int(round(v)) for v in mixer.eigenvalues)
            mult_ok &= got == Counter({2 * v: m for v, m in johnson_spectrum(n, k)})
    return worst, mult_ok


def check_complete_period(n_max: int = 8) -> float:
    worst = 0.0
    for n in range(2, n_max + 1):
        for k in range(n + 1):
            mixer = build_complete_mixer(SubspaceIndex(n, k))
            u = scipy.linalg.expm(-1j * math.pi * mixer.matrix.toarray())
            phase = u[0, 0] / abs(u[0, 0])
            worst = max(worst, float(np.max(np.abs(u - phase * np.eye(u.shape[0])))))
    return worst


def check_oracle(rng: np.random.Generator, cases: int) -> float:
    worst = 0.0
    for c in range(cases):
        n = int(rng.integers(3, 7))
        inst = _instance(rng, n)
        kind = (MixerKind.COMPLETE, MixerKind.RING)[c % 2]
        sched = _schedule(rng, int(rng.integers(1, 4)))
        x = int(inst.index.basis[rng.integers(inst.index.dim)])
        for start, state in (("dicke", dicke_state(inst.index)), (x, basis_k_state(inst.index, x))):
            ref, occupation = full_space_reference(inst, kind, start, sched)
            val = QAOASimulator(inst, kind).value(sched, state)
            worst = max(worst, abs(val - ref), abs(1.0 - occupation))
    return worst


def check_symmetry(rng: np.random.Generator, cases: int) -> float:
    worst = 0.0
    for c in range(cases):
        inst = _instance(rng, int(rng.integers(4, 9)))
        kind = (MixerKind.COMPLETE, MixerKind.RING)[c % 2]
        sim = QAOASimulator(inst, kind)
        d = dicke_state(inst.index)
        s = _schedule(rng, int(rng.integers(1, 4)))
        v = sim.value(s, d)
        neg = AngleSchedule(tuple(-g for g in s.gammas), tuple(-b for b in s.betas))
        worst = max(worst, abs(sim.value(neg, d) - v))
        if kind is MixerKind.COMPLETE:
            mirror = AngleSchedule(tuple(2 * math.pi - g for g in s.gammas), tuple(math.pi - b for b in s.betas))
            worst = max(worst, abs(sim.value(mirror, d) - v))
    return worst


def check_mixed_state(rng: np.random.Generator, cases: int) -> float:
    worst = 0.0
    for c in range(cases):
        inst = _instance(rng, int(rng.integers(3, 8)))
        kind = (MixerKind.COMPLETE, MixerKind.RING)[c % 2]
        sim = QAOASimulator(inst, kind)
        s = _schedule(rng, int(rng.integers(1, 4)))
        vals = [sim.value(s, basis_k_state(inst.index, int(x))) for x in inst.index.basis]
        worst = max(worst, abs(float(np.mean(vals)) - float(inst.objective_table.mean())))
    return worst


def check_padding(rng: np.random.Generator, cases: int) -> float:
    worst = 0.0
    for c in range(cases):
        inst = _instance(rng, int(rng.integers(3, 9)))
        kind = (MixerKind.COMPLETE, MixerKind.RING)[c % 2]
        sim = QAOASimulator(inst, kind)
        s = _schedule(rng, int(rng.integers(1, 4)))
        d = dicke_state(inst.index)
        worst = max(worst, abs(sim.value(s.padded(), d) - sim.value(s, d)))
    return worst


def check_ring_probe(d_max: int = 1000, tol: float = 1e-6) -> dict:
    return {
        "ring": {str(n): ring_periodicity_probe(n, d_max).period_index(tol) for n in range(2, 11)},
        "complete": {
            str(n): ring_periodicity_probe(n, d_max, MixerKind.COMPLETE).period_index(tol) for n in range(2, 11)
        },
    }


def run_checks(seed: int = 0, cases: int = 20) -> dict:
    rng = np.random.default_rng(seed)
    johnson_err, mult_ok = check_johnson()
    checks = {
        "johnson_spectrum": {"error": johnson_err, "tol": 1e-8, "multiplicities_match": bool(mult_ok)},
        "complete_period": {"error": check_complete_period(), "tol": 1e-9},
        "oracle_equivalence": {"error": check_oracle(rng, cases), "tol": 1e-10},
        "symmetry": {"error": check_symmetry(rng, cases), "tol": 1e-9},
        "mixed_state": {"error": check_mixed_state(rng, cases), "tol": 1e-9},
        "zero_padding": {"error": check_padding(rng, cases), "tol": 1e-12},
    }
    for c in checks.values():
        c["passed"] = bool(c["error"] <= c["tol"] and c.get("multiplicities_match", True))
    periods = check_ring_probe()
    checks["ring_probe"] = {
        "period_index": periods,
        "passed": all(periods["ring"][str(n)] is None for n in range(4, 11))
        and all(periods["ring"][str(n)] is not None for n in (2, 3))
        and all(d is not None for d in periods["complete"].values()),
    }
    return {"checks": checks, "passed": all(c["passed"] for c in checks.values())}


def run_verify(cfg):
    from qaoa_kvc.experiments.runners import ExperimentResult

    res = ExperimentResult()
    res.json["verify"] = run_checks(cfg.seed)
    return res
