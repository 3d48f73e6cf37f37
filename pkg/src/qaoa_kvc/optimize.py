"""Angle selection: Monte Carlo sampling, Nelder-Mead refinement, basin hopping and
interpolation warm starts, all under an exact count of F_p evaluations."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.optimize

from qaoa_kvc.engine import AngleSchedule, QAOASimulator, SearchDomain
from qaoa_kvc.errors import InvalidArgument
from qaoa_kvc.instances import ProblemInstance
from qaoa_kvc.operators import MixerKind
from qaoa_kvc.parallel import pmap
from qaoa_kvc.subspace import StateVector, dicke_state

SCHEMA_VERSION = 1

SIMPLEX_EDGE = 0.1
XATOL = 1e-6
FATOL = 1e-9
HOP_STEP = 0.3
TEMPERATURE_PER_EDGE = 0.1
MC_CHUNK = 1024

STRATEGIES = ("monte_carlo", "basin_hopping", "interpolation")


class BudgetExhausted(Exception):
    pass


class Objective:
    """Budgeted F_p evaluator over a search domain.

    Every call projects its argument into the domain, evaluates F_p there and logs
    the value. Calls past the budget raise BudgetExhausted before evaluating.
    """

    def __init__(self, sim: QAOASimulator, initial: StateVector, domain: SearchDomain, budget: int):
        if budget < 1:
            raise InvalidArgument(f"budget must be >= 1, got {budget}")
        self.sim = sim
        self.domain = domain
        self.budget = int(budget)
        self._amps0 = np.ascontiguousarray(initial.amplitudes)
        self._initial = initial
        self.values: list[float] = []
        self.points: list[np.ndarray] = []
        self.best_value = -math.inf
        self.best_x: np.ndarray | None = None

    @property
    def count(self) -> int:
        return len(self.values)

    @property
    def remaining(self) -> int:
        return self.budget - len(self.values)

    def project(self, x) -> np.ndarray:
        return self.domain.project(x, self.sim.mixer_kind)

    def _log(self, x: np.ndarray, v: float):
        self.values.append(v)
        self.points.append(x)
        if v > self.best_value:
            self.best_value, self.best_x = v, x.copy()

    def __call__(self, x) -> float:
        if self.remaining <= 0:
            raise BudgetExhausted
        x = self.project(x)
        v = self.sim.value_flat(x, self._amps0)
        self._log(x, v)
        return v

    def batch(self, gammas: np.ndarray, betas: np.ndarray) -> np.ndarray:
        """Evaluate rows of (gammas, betas) already inside the domain; truncates at the budget."""
        take = min(len(gammas), self.remaining)
        out = np.empty(take)
        for s in range(0, take, MC_CHUNK):
            e = min(take, s + MC_CHUNK)
            out[s:e] = self.sim.values_batch(gammas[s:e], betas[s:e], self._initial)
        for i in range(take):
            self._log(np.concatenate((gammas[i], betas[i])), float(out[i]))
        return out


@dataclass
class RunRecord:
    strategy: str
    instance_id: str
    seed: int | None
    p: int
    mixer: str
    schedule: AngleSchedule
    best_value: float
    approx_ratio: float | None
    evaluations: int
    budget: int
    sample_mean: float
    sample_std: float
    sample_max: float
    domain: SearchDomain = field(default_factory=SearchDomain)
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "schema": SCHEMA_VERSION,
            "strategy": self.strategy,
            "instance_id": self.instance_id,
            "seed": self.seed,
            "p": self.p,
            "mixer": self.mixer,
            "schedule": self.schedule.to_dict(),
            "best_value": self.best_value,
            "approx_ratio": self.approx_ratio,
            "evaluations": self.evaluations,
            "budget": self.budget,
            "samples": {"mean": self.sample_mean, "std": self.sample_std, "max": self.sample_max},
            "domain": self.domain.to_dict(),
            "ratio_denominator": "max objective over weight-k subsets",
        }
        if self.extra:
            d["extra"] = self.extra
        if include_timing:
            d["wall_time"] = self.wall_time
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        s = d["samples"]
        return cls(
            strategy=d["strategy"],
            instance_id=d["instance_id"],
            seed=d["seed"],
            p=d["p"],
            mixer=d["mixer"],
            schedule=AngleSchedule(d["schedule"]["gammas"], d["schedule"]["betas"]),
            best_value=d["best_value"],
            approx_ratio=d["approx_ratio"],
            evaluations=d["evaluations"],
            budget=d["budget"],
            sample_mean=s["mean"],
            sample_std=s["std"],
            sample_max=s["max"],
            domain=SearchDomain(**d["domain"]),
            wall_time=d.get("wall_time", 0.0),
            extra=d.get("extra", {}),
        )


def append_jsonl(path, records: Sequence[RunRecord], include_timing: bool = True):
    with Path(path).open("a") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(include_timing), sort_keys=True) + "\n")


def read_jsonl(path) -> list[RunRecord]:
    with Path(path).open() as fh:
        return [RunRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def _ratio(instance: ProblemInstance, value: float) -> float | None:
    return None if instance.max_value == 0 else value / instance.max_value


def _record(strategy, obj: Objective, p, instance_id, seed, started, values=None, x=None, v=None, **extra) -> RunRecord:
    vals = np.asarray(obj.values if values is None else values)
    x = obj.best_x if x is None else x
    v = obj.best_value if v is None else v
    return RunRecord(
        strategy=strategy,
        instance_id=instance_id,
        seed=seed,
        p=p,
        mixer=obj.sim.mixer_kind.value,
        schedule=AngleSchedule.from_vector(x),
        best_value=float(v),
        approx_ratio=_ratio(obj.sim.instance, v),
        evaluations=obj.count,
        budget=obj.budget,
        sample_mean=float(vals.mean()),
        sample_std=float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
        sample_max=float(vals.max()),
        domain=obj.domain,
        wall_time=time.perf_counter() - started,
        extra=extra,
    )


def _as_sim(sim_or_instance, mixer) -> QAOASimulator:
    if isinstance(sim_or_instance, QAOASimulator):
        return sim_or_instance
    return QAOASimulator(sim_or_instance, mixer)


def _seed_int(seed) -> int | None:
    if seed is None:
        return None
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(1, np.uint64)[0])
    return int(seed)


def monte_carlo_search(
    instance, mixer, initial: StateVector, p: int, domain: SearchDomain, budget: int, seed, instance_id: str = ""
) -> RunRecord:
    """Best of ``budget`` uniform draws from the domain, with sample statistics."""
    started = time.perf_counter()
    sim = _as_sim(instance, mixer)
    obj = Objective(sim, initial, domain, budget)
    rng = np.random.default_rng(seed)
    g, b = domain.sample(rng, p, budget)
    obj.batch(g, b)
    return _record("monte_carlo", obj, p, instance_id, _seed_int(seed), started)


def _refine(obj: Objective, x0: np.ndarray, max_evals: int) -> tuple[np.ndarray, float]:
    """Nelder-Mead on -F from x0 using at most ``max_evals`` calls; best point of this run."""
    first = obj.count
    limit = min(max_evals, obj.remaining)
    if limit < 1:
        raise BudgetExhausted
    stop_at = first + limit
    x0 = obj.project(x0)

    def neg(x):
        if obj.count >= stop_at:
            raise BudgetExhausted
        return -obj(x)

    simplex = np.vstack([x0, x0 + SIMPLEX_EDGE * np.eye(x0.size)])
    try:
        scipy.optimize.minimize(
            neg,
            x0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "adaptive": True,
                "xatol": XATOL,
                "fatol": FATOL,
                "maxfev": limit,
                "maxiter": 10 * limit + 100,
            },
        )
    except BudgetExhausted:
        pass
    run = obj.values[first:]
    i = int(np.argmax(run))
    return obj.points[first + i].copy(), run[i]


def local_refine(
    instance, mixer, initial: StateVector, start: AngleSchedule, domain: SearchDomain, budget: int
) -> tuple[AngleSchedule, float]:
    sim = _as_sim(instance, mixer)
    obj = Objective(sim, initial, domain, budget)
    x, v = _refine(obj, start.to_vector(), budget)
    return AngleSchedule.from_vector(x), v


def _hop_budgets(budget: int, hops: int) -> list[int]:
    base, extra = divmod(budget, hops)
    return [base + (1 if h < extra else 0) for h in range(hops)]


def _basin_hop(
    obj: Objective,
    rng: np.random.Generator,
    p: int,
    budget: int,
    hops: int,
    start: np.ndarray | None,
    step: float,
    temperature: float,
) -> tuple[np.ndarray, float]:
    if hops < 1:
        raise InvalidArgument(f"hops must be >= 1, got {hops}")
    if start is None:
        g, b = obj.domain.sample(rng, p)
        start = np.concatenate((g, b))
    budgets = _hop_budgets(budget, hops)
    best_x, best_v = None, -math.inf
    try:
        cur_x, cur_v = _refine(obj, start, budgets[0])
        best_x, best_v = cur_x, cur_v
        for h in range(1, hops):
            if budgets[h] < 1:
                break
            trial = obj.project(cur_x + rng.uniform(-step, step, cur_x.size))
            x, v = _refine(obj, trial, budgets[h])
            if v > best_v:
                best_x, best_v = x, v
            if v >= cur_v or rng.random() < math.exp((v - cur_v) / temperature):
                cur_x, cur_v = x, v
    except BudgetExhausted:
        pass
    if best_x is None or obj.best_value > best_v:
        best_x, best_v = obj.best_x, obj.best_value
    return best_x, best_v


def _temperature(instance: ProblemInstance, temperature: float | None) -> float:
    if temperature is not None:
        return temperature
    return max(TEMPERATURE_PER_EDGE * instance.n_edges, 1e-12)


def basin_hopping(
    instance,
    mixer,
    initial: StateVector,
    p: int,
    domain: SearchDomain,
    budget: int,
    hops: int,
    seed,
    start: AngleSchedule | None = None,
    step: float = HOP_STEP,
    temperature: float | None = None,
    instance_id: str = "",
) -> RunRecord:
    """Perturb, refine and Metropolis-accept for ``hops`` rounds within ``budget`` evaluations.

    The first hop refines from ``start`` (a uniform random point if omitted).
    """
    started = time.perf_counter()
    sim = _as_sim(instance, mixer)
    obj = Objective(sim, initial, domain, budget)
    rng = np.random.default_rng(seed)
    x0 = None if start is None else start.to_vector()
    if x0 is not None and x0.size != 2 * p:
        raise InvalidArgument(f"start schedule has p={x0.size // 2}, expected {p}")
    _basin_hop(obj, rng, p, budget, hops, x0, step, _temperature(sim.instance, temperature))
    return _record("basin_hopping", obj, p, instance_id, _seed_int(seed), started, hops=hops)


def interpolate_schedule(schedule: AngleSchedule) -> AngleSchedule:
    """Resample gammas and betas from p to p + 1 points on the normalized round index."""
    p = schedule.p
    if p == 1:
        return AngleSchedule(schedule.gammas * 2, schedule.betas * 2)
    old = np.linspace(0.0, 1.0, p)
    new = np.linspace(0.0, 1.0, p + 1)
    return AngleSchedule(np.interp(new, old, schedule.gammas), np.interp(new, old, schedule.betas))


def interpolation_warm_start(
    prev: RunRecord | None, instance, mixer, initial: StateVector, domain: SearchDomain, budget: int, instance_id: str = ""
) -> RunRecord:
    if prev is None:
        raise InvalidArgument("interpolation needs the previous level's record")
    started = time.perf_counter()
    sim = _as_sim(instance, mixer)
    obj = Objective(sim, initial, domain, budget)
    start = interpolate_schedule(prev.schedule)
    x, v = _refine(obj, start.to_vector(), budget)
    return _record(
        "interpolation", obj, prev.p + 1, instance_id, None, started, x=x, v=v, start=start.to_dict()
    )


def level_sweep(
    sim: QAOASimulator,
    initial: StateVector,
    p_max: int,
    domain: SearchDomain,
    budget: int,
    hops: int,
    seed,
    instance_id: str = "",
    restarts: int = 1,
) -> list[RunRecord]:
    """Basin hopping at p = 1..p_max; each level's first restart begins at the previous
    best padded with a zero round, so the best value never decreases with p."""
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    level_seeds = ss.spawn(p_max)
    records: list[RunRecord] = []
    prev: RunRecord | None = None
    for p in range(1, p_max + 1):
        best: RunRecord | None = None
        total = 0
        for r, rseed in enumerate(level_seeds[p - 1].spawn(restarts)):
            start = prev.schedule.padded() if (prev is not None and r == 0) else None
            rec = basin_hopping(sim, None, initial, p, domain, budget, hops, rseed, start=start, instance_id=instance_id)
            total += rec.evaluations
            if best is None or rec.best_value > best.best_value:
                best = rec
        best.evaluations = total
        best.budget = budget * restarts
        best.strategy = "sweep"
        records.append(best)
        prev = best
    return records


@dataclass(frozen=True)
class CompareTask:
    instance: ProblemInstance
    instance_id: str
    mixer: str
    budget: int
    p_max: int
    domain: SearchDomain
    hops: int
    seed: np.random.SeedSequence
    strategies: tuple[str, ...]
    reference_factor: int
    reference_restarts: int


def _compare_one(task: CompareTask) -> list[RunRecord]:
    sim = QAOASimulator(task.instance, task.mixer)
    init = dicke_state(task.instance.index)
    dom, B = task.domain, task.budget
    level_seeds = task.seed.spawn(task.p_max)
    out: list[RunRecord] = []
    prev_interp: RunRecord | None = None
    prev_ref: RunRecord | None = None
    for p in range(1, task.p_max + 1):
        s_mc, s_bh, s_ref = level_seeds[p - 1].spawn(3)
        level: list[RunRecord] = []
        bh = None
        if "monte_carlo" in task.strategies:
            level.append(monte_carlo_search(sim, None, init, p, dom, B, s_mc, task.instance_id))
        if "basin_hopping" in task.strategies or ("interpolation" in task.strategies and p == 1):
            bh = basin_hopping(sim, None, init, p, dom, B, task.hops, s_bh, instance_id=task.instance_id)
            if "basin_hopping" in task.strategies:
                level.append(bh)
        if "interpolation" in task.strategies:
            if p == 1:
                rec = RunRecord(**{**bh.__dict__, "strategy": "interpolation"})
            else:
                rec = interpolation_warm_start(prev_interp, sim, None, init, dom, B, task.instance_id)
            level.append(rec)
            prev_interp = rec
        ref = _reference(sim, init, p, task, s_ref, prev_ref, level)
        prev_ref = ref
        out.extend(level)
        out.append(ref)
    return out


def _reference(sim, init, p, task: CompareTask, seed, prev_ref, level: list[RunRecord]) -> RunRecord:
    """Best-known F_p: restarts of large-budget basin hopping, the first warm-started from
    the padded previous reference, merged with whatever the strategies found."""
    started = time.perf_counter()
    per_restart = max(1, task.budget * task.reference_factor // task.reference_restarts)
    best = None
    evals = 0
    for r, rseed in enumerate(seed.spawn(task.reference_restarts)):
        start = prev_ref.schedule.padded() if (prev_ref is not None and r == 0) else None
        rec = basin_hopping(sim, None, init, p, task.domain, per_restart, task.hops, rseed, start=start)
        evals += rec.evaluations
        if best is None or rec.best_value > best.best_value:
            best = rec
    for rec in level:
        evals += rec.evaluations
        if rec.best_value > best.best_value:
            best = rec
    return RunRecord(
        **{
            **best.__dict__,
            "strategy": "reference",
            "instance_id": task.instance_id,
            "seed": None,
            "evaluations": evals,
            "budget": task.budget * task.reference_factor,
            "wall_time": time.perf_counter() - started,
            "extra": {"restarts": task.reference_restarts},
        }
    )


@dataclass
class ComparisonTable:
    rows: list[dict]
    records: list[RunRecord]
    skipped: list[dict]

    def curve(self, strategy: str) -> np.ndarray:
        return np.array([r["mean_ratio"] for r in self.rows if r["strategy"] == strategy])


def summarize(values: Sequence[float]) -> tuple[float, float]:
    """Mean and normal-approximation 95% half-width (1.96 s / sqrt(N))."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    hw = 1.96 * v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else 0.0
    return float(v.mean()), float(hw)


def strategy_compare(
    instances: Sequence[ProblemInstance],
    strategies: Sequence[str] = STRATEGIES,
    budget: int = 200,
    p_max: int = 5,
    seed: int = 0,
    mixer=MixerKind.COMPLETE,
    domain: SearchDomain | None = None,
    hops: int = 4,
    reference_factor: int = 20,
    reference_restarts: int = 10,
    threads: int = 1,
    instance_ids: Sequence[str] | None = None,
) -> ComparisonTable:
    """Equal per-level budgets for every strategy, averaged over instances, plus a reference curve."""
    for s in strategies:
        if s not in STRATEGIES:
            raise InvalidArgument(f"unknown strategy {s!r}; choose from {STRATEGIES}")
    domain = domain or SearchDomain()
    ids = list(instance_ids) if instance_ids is not None else [str(i) for i in range(len(instances))]
    seeds = np.random.SeedSequence(seed).spawn(len(instances))
    tasks, skipped = [], []
    for inst, iid, ss in zip(instances, ids, seeds):
        if inst.max_value == 0:
            skipped.append({"instance_id": iid, "reason": "no edges; approximation ratio undefined"})
            continue
        tasks.append(
            CompareTask(inst, iid, MixerKind(mixer).value, budget, p_max, domain, hops, ss, tuple(strategies),
                        reference_factor, reference_restarts)
        )
    results = pmap(_compare_one, tasks, threads)
    records = [r for res in results for r in res]
    rows = []
    for p in range(1, p_max + 1):
        for s in list(strategies) + ["reference"]:
            ratios = [r.approx_ratio for r in records if r.p == p and r.strategy == s]
            mean, hw = summarize(ratios)
            rows.append({"p": p, "strategy": s, "mean_ratio": mean, "ci_halfwidth": hw, "n_graphs": len(ratios)})
    return ComparisonTable(rows, records, skipped)
