"""The six experiment families plus graph generation.

Each runner returns an ExperimentResult holding named tables; ``run_experiment``
writes them under the configured output directory. Work items fan out through
``pmap`` and are reassembled in input order, so the thread count never changes
the emitted bytes.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from qaoa_kvc.engine import QAOASimulator, SearchDomain
from qaoa_kvc.errors import Unsupported
from qaoa_kvc.experiments import io
from qaoa_kvc.experiments.config import ExperimentConfig
from qaoa_kvc.instances import ProblemInstance, gen_random_graph
from qaoa_kvc.operators import MixerKind
from qaoa_kvc.optimize import (
    basin_hopping,
    interpolate_schedule,
    level_sweep,
    strategy_compare,
    summarize,
)
from qaoa_kvc.parallel import pmap
from qaoa_kvc.subspace import basis_k_state, dicke_state

log = logging.getLogger(__name__)

# stream tags keep per-experiment random streams disjoint
_STREAMS = {"initial": 1, "mixer": 2, "std": 3, "beat": 4, "angles": 5, "strategy": 6}


@dataclass(frozen=True)
class FamilyMember:
    graph_id: int
    seed: int
    instance: ProblemInstance

    def to_dict(self) -> dict:
        inst = self.instance
        return {
            "graph_id": self.graph_id,
            "seed": self.seed,
            "k": inst.k,
            "n_edges": inst.n_edges,
            "max_value": inst.max_value,
            "graph": inst.graph.to_dict(),
        }


@dataclass
class Table:
    columns: list[str]
    rows: list[dict]


@dataclass
class ExperimentResult:
    tables: dict[str, Table] = field(default_factory=dict)
    json: dict[str, dict] = field(default_factory=dict)
    jsonl: dict[str, list[dict]] = field(default_factory=dict)

    def column(self, table: str, name: str, **where) -> list:
        rows = self.tables[table].rows
        return [r[name] for r in rows if all(r[k] == v for k, v in where.items())]


def graph_seed(master: int, graph_id: int) -> int:
    return int(np.random.SeedSequence([master, graph_id]).generate_state(1, np.uint64)[0])


def stream(master: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=tuple(key))


def generate_family(cfg: ExperimentConfig) -> list[FamilyMember]:
    """Graph i has n = n_min + (i mod span) vertices and a seed derived from (master seed, i)."""
    span = cfg.n_max - cfg.n_min + 1
    out = []
    for i in range(cfg.count):
        n = cfg.n_min + i % span
        s = graph_seed(cfg.seed, i)
        out.append(FamilyMember(i, s, ProblemInstance(gen_random_graph(n, cfg.p_edge, s), n // 2)))
    return out


def _domain(cfg: ExperimentConfig) -> SearchDomain:
    return SearchDomain(cfg.gamma_max, cfg.beta_max)


def _usable(members: list[FamilyMember], result: ExperimentResult) -> list[FamilyMember]:
    keep, skipped = [], []
    for m in members:
        if m.instance.max_value == 0:
            log.warning("skipping graph %d: no edges, approximation ratio undefined", m.graph_id)
            skipped.append({"graph_id": m.graph_id, "reason": "no edges; approximation ratio undefined"})
        else:
            keep.append(m)
    result.json.setdefault("summary", {})["skipped"] = skipped
    result.json["summary"]["n_effective"] = len(keep)
    return keep


def exp_generate(cfg: ExperimentConfig) -> ExperimentResult:
    members = generate_family(cfg)
    res = ExperimentResult()
    res.json["graphs"] = {
        "family": {"n_min": cfg.n_min, "n_max": cfg.n_max, "p_edge": cfg.p_edge, "count": cfg.count},
        "graphs": [m.to_dict() for m in members],
    }
    return res


# ---- initial state comparison ----


def _initial_task(args):
    member, mixer, cfg = args
    inst = member.instance
    sim = QAOASimulator(inst, mixer)
    dom = _domain(cfg)
    base = inst.objective_table.mean() / inst.max_value
    out = {"dicke": None, "classical": None}
    if "dicke" in cfg.initial_states:
        recs = level_sweep(sim, dicke_state(inst.index), cfg.p_max, dom, cfg.budget, cfg.hops,
                           stream(cfg.seed, _STREAMS["initial"], member.graph_id, 0))
        out["dicke"] = [base] + [r.approx_ratio for r in recs]
    if "classical" in cfg.initial_states:
        per_start = []
        for i, x in enumerate(inst.index.basis):
            recs = level_sweep(sim, basis_k_state(inst.index, int(x)), cfg.p_max, dom, cfg.budget, cfg.hops,
                               stream(cfg.seed, _STREAMS["initial"], member.graph_id, 1, i))
            per_start.append([inst.objective_table[i] / inst.max_value] + [r.approx_ratio for r in recs])
        out["classical"] = np.array(per_start)
    return out


def exp_initial_state_compare(cfg: ExperimentConfig) -> ExperimentResult:
    """Best-found ratio from the Dicke state against the mean over every weight-k basis start.

    Each classical start gets its own angle optimization; p = 0 rows hold the unevolved values.
    """
    res = ExperimentResult()
    members = _usable(generate_family(cfg), res)
    tasks = [(m, mixer, cfg) for m in members for mixer in cfg.mixers]
    outs = pmap(_initial_task, tasks, cfg.threads)
    rows = []
    for (m, mixer, _), o in zip(tasks, outs):
        for p in range(cfg.p_max + 1):
            c = o["classical"]
            rows.append({
                "graph_id": m.graph_id,
                "n": m.instance.n,
                "p": p,
                "mixer": mixer,
                "dicke_ratio": o["dicke"][p] if o["dicke"] is not None else None,
                "classical_mean_ratio": float(c[:, p].mean()) if c is not None else None,
                "classical_std": float(c[:, p].std(ddof=0)) if c is not None else None,
            })
    summary = []
    for mixer in cfg.mixers:
        for p in range(cfg.p_max + 1):
            sel = [r for r in rows if r["mixer"] == mixer and r["p"] == p]
            d = [r["dicke_ratio"] for r in sel if r["dicke_ratio"] is not None]
            c = [r["classical_mean_ratio"] for r in sel if r["classical_mean_ratio"] is not None]
            cs = [r["classical_std"] for r in sel if r["classical_std"] is not None]
            both = [r for r in sel if r["dicke_ratio"] is not None and r["classical_mean_ratio"] is not None]
            summary.append({
                "p": p,
                "mixer": mixer,
                "dicke_ratio": float(np.mean(d)) if d else None,
                "classical_mean_ratio": float(np.mean(c)) if c else None,
                "classical_std": float(np.mean(cs)) if cs else None,
                "n_graphs": len(sel),
                "frac_dicke_ge_classical": (
                    sum(bool(r["dicke_ratio"] >= r["classical_mean_ratio"]) for r in both) / len(both) if both else None
                ),
            })
    cols = ["graph_id", "n", "p", "mixer", "dicke_ratio", "classical_mean_ratio", "classical_std"]
    res.tables["initial_compare_graphs"] = Table(cols, rows)
    res.tables["initial_compare"] = Table(
        ["p", "mixer", "dicke_ratio", "classical_mean_ratio", "classical_std", "n_graphs", "frac_dicke_ge_classical"],
        summary,
    )
    return res


# ---- mixer comparison ----


def _mixer_task(args):
    member, cfg = args
    inst = member.instance
    dom = _domain(cfg)
    ratios = []
    for mixer in cfg.mixers[:2]:
        sim = QAOASimulator(inst, mixer)
        # same seed for both mixers: equal budgets and identical random starts
        s = stream(cfg.seed, _STREAMS["mixer"], member.graph_id)
        recs = level_sweep(sim, dicke_state(inst.index), cfg.p_max, dom, cfg.budget, cfg.hops, s)
        ratios.append([r.approx_ratio for r in recs])
    return ratios


def exp_mixer_compare(cfg: ExperimentConfig) -> ExperimentResult:
    """Mean of r_A / r_B per level over the family, mixers A, B = cfg.mixers[0], cfg.mixers[1]."""
    mixers = list(cfg.mixers) if len(cfg.mixers) >= 2 else [cfg.mixers[0]] * 2
    cfg = _replace(cfg, mixers=mixers)
    res = ExperimentResult()
    members = _usable(generate_family(cfg), res)
    outs = pmap(_mixer_task, [(m, cfg) for m in members], cfg.threads)
    per_graph, rows = [], []
    for m, (ra, rb) in zip(members, outs):
        for p in range(1, cfg.p_max + 1):
            per_graph.append({"graph_id": m.graph_id, "p": p, "ratio_a": ra[p - 1], "ratio_b": rb[p - 1],
                              "quotient": ra[p - 1] / rb[p - 1]})
    for p in range(1, cfg.p_max + 1):
        q = [r["quotient"] for r in per_graph if r["p"] == p]
        mean, hw = summarize(q)
        rows.append({"p": p, "mean_ratio": mean, "ci_halfwidth": hw, "n_graphs": len(q)})
    res.json["summary"]["mixer_a"], res.json["summary"]["mixer_b"] = mixers[0], mixers[1]
    res.tables["mixer_compare"] = Table(["p", "mean_ratio", "ci_halfwidth", "n_graphs"], rows)
    res.tables["mixer_compare_graphs"] = Table(["graph_id", "p", "ratio_a", "ratio_b", "quotient"], per_graph)
    return res


def _replace(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return dataclasses.replace(cfg, **kw)


# ---- heatmaps ----


def heatmap_axes(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    """Left-closed uniform grid over [0, gamma_max) x [0, beta_max)."""
    r = cfg.grid
    return np.arange(r) * cfg.gamma_max / r, np.arange(r) * cfg.beta_max / r


def _heatmap_task(args):
    member, mixer, cfg = args
    inst = member.instance
    sim = QAOASimulator(inst, mixer)
    g, b = heatmap_axes(cfg)
    G, B = np.meshgrid(g, b, indexing="ij")
    vals = sim.values_batch(G.reshape(-1, 1), B.reshape(-1, 1), dicke_state(inst.index))
    return vals.reshape(cfg.grid, cfg.grid)


def exp_heatmap(cfg: ExperimentConfig) -> ExperimentResult:
    """F_1 over a grid from the Dicke state, per graph and averaged over graphs."""
    if cfg.p_max != 1:
        raise Unsupported(f"heatmaps are defined for p = 1 only, got p_max={cfg.p_max}")
    res = ExperimentResult()
    members = generate_family(cfg)
    tasks = [(m, mixer, cfg) for mixer in cfg.mixers for m in members]
    grids = pmap(_heatmap_task, tasks, cfg.threads)
    g, b = heatmap_axes(cfg)
    summary = {}
    for mixer in cfg.mixers:
        mine = [(t[0], grid) for t, grid in zip(tasks, grids) if t[1] == mixer]
        mean = np.mean([grid for _, grid in mine], axis=0)
        rows = [{"gamma": float(g[i]), "beta": float(b[j]), "value": float(mean[i, j])}
                for i in range(cfg.grid) for j in range(cfg.grid)]
        res.tables[f"heatmap_{mixer}_mean"] = Table(["gamma", "beta", "value"], rows)
        if cfg.per_graph:
            prow = [{"graph_id": m.graph_id, "gamma": float(g[i]), "beta": float(b[j]), "value": float(grid[i, j])}
                    for m, grid in mine for i in range(cfg.grid) for j in range(cfg.grid)]
            res.tables[f"heatmap_{mixer}"] = Table(["graph_id", "gamma", "beta", "value"], prow)
        i, j = np.unravel_index(np.argmax(mean), mean.shape)
        summary[mixer] = {"argmax_gamma": float(g[i]), "argmax_beta": float(b[j]), "max_mean_value": float(mean[i, j])}
    res.json["summary"] = {"mean_grid_maximum": summary, "n_graphs": len(members), "grid": cfg.grid}
    return res


# ---- Monte Carlo standard deviation decay ----


def _std_task(args):
    member, mixer, p, rep, cfg = args
    inst = member.instance
    sim = QAOASimulator(inst, mixer)
    rng = np.random.default_rng(stream(cfg.seed, _STREAMS["std"], member.graph_id, p, rep))
    g, b = _domain(cfg).sample(rng, p, cfg.samples)
    vals = sim.values_batch(g, b, dicke_state(inst.index))
    return float(vals.max()), float(vals.std(ddof=1)) if vals.size > 1 else 0.0


def samples_to_beat(sim: QAOASimulator, initial, p: int, threshold: float, domain: SearchDomain, cap: int,
                    rng: np.random.Generator, chunk: int = 1024) -> tuple[int, bool]:
    """Uniform draws at level p until one strictly exceeds ``threshold``; (count, censored)."""
    drawn = 0
    while drawn < cap:
        size = min(chunk, cap - drawn)
        g, b = domain.sample(rng, p, size)
        vals = sim.values_batch(g, b, initial)
        hit = np.flatnonzero(vals > threshold)
        if hit.size:
            return drawn + int(hit[0]) + 1, False
        drawn += size
    return cap, True


def _beat_task(args):
    member, mixer, p, rep, variant, threshold, cfg = args
    inst = member.instance
    sim = QAOASimulator(inst, mixer)
    rng = np.random.default_rng(stream(cfg.seed, _STREAMS["beat"], member.graph_id, p, rep, variant))
    return samples_to_beat(sim, dicke_state(inst.index), p + 1, threshold, _domain(cfg), cfg.beat_cap, rng)


def _beat_stats(outs: list[tuple[int, bool]], prefix: str) -> dict:
    counts = [c for c, _ in outs]
    mean, hw = summarize(counts)
    return {f"{prefix}_mean": mean, f"{prefix}_ci": hw, f"{prefix}_log10_mean": float(np.mean(np.log10(counts))),
            f"{prefix}_censored": sum(c for _, c in outs)}


BEAT_COLUMNS = ("mean", "ci", "log10_mean", "censored")


def exp_std_decay(cfg: ExperimentConfig) -> ExperimentResult:
    """Per level: best-of-``samples`` ratio and sample std over repetitions, plus how many uniform
    level p+1 draws it takes to beat level p's best (capped).

    ``beat_next_*`` uses level p's reported best (the mean best-of-``samples``) as the bar;
    ``beat_paired_*`` uses each repetition's own best, a much heavier-tailed statistic.
    """
    res = ExperimentResult()
    members = _usable(generate_family(cfg)[:1], res)
    rows = []
    for member in members:
        inst = member.instance
        for mixer in cfg.mixers:
            tasks = [(member, mixer, p, r, cfg) for p in range(1, cfg.p_max + 1) for r in range(cfg.repetitions)]
            outs = dict(zip([(t[2], t[3]) for t in tasks], pmap(_std_task, tasks, cfg.threads)))
            best_f = {p: float(np.mean([outs[(p, r)][0] for r in range(cfg.repetitions)]))
                      for p in range(1, cfg.p_max + 1)}
            nb = min(cfg.beat_repetitions, cfg.repetitions)
            btasks = [(member, mixer, p, r, 0, best_f[p], cfg) for p in range(1, cfg.p_max) for r in range(nb)]
            btasks += [(member, mixer, p, r, 1, outs[(p, r)][0], cfg) for p in range(1, cfg.p_max) for r in range(nb)]
            bouts = dict(zip([(t[2], t[3], t[4]) for t in btasks], pmap(_beat_task, btasks, cfg.threads)))
            for p in range(1, cfg.p_max + 1):
                best = [outs[(p, r)][0] / inst.max_value for r in range(cfg.repetitions)]
                std = [outs[(p, r)][1] for r in range(cfg.repetitions)]
                bm, bhw = summarize(best)
                sm, shw = summarize(std)
                row = {"graph_id": member.graph_id, "mixer": mixer, "p": p, "best_ratio_mean": bm,
                       "best_ratio_ci": bhw, "std_mean": sm, "std_ci": shw, "repetitions": cfg.repetitions,
                       "samples": cfg.samples, "beat_threshold": None, "beat_cap": cfg.beat_cap,
                       "beat_repetitions": nb if p < cfg.p_max else 0}
                if p < cfg.p_max:
                    row["beat_threshold"] = best_f[p]
                    row.update(_beat_stats([bouts[(p, r, 0)] for r in range(nb)], "beat_next"))
                    row.update(_beat_stats([bouts[(p, r, 1)] for r in range(nb)], "beat_paired"))
                rows.append(row)
    cols = ["graph_id", "mixer", "p", "best_ratio_mean", "best_ratio_ci", "std_mean", "std_ci", "repetitions",
            "samples", "beat_threshold"]
    cols += [f"beat_next_{c}" for c in BEAT_COLUMNS] + [f"beat_paired_{c}" for c in BEAT_COLUMNS]
    cols += ["beat_cap", "beat_repetitions"]
    res.tables["std_decay"] = Table(cols, rows)
    return res


# ---- optimal angle patterns ----


def reference_chain(sim: QAOASimulator, initial, levels: int, domain: SearchDomain, budget: int, restarts: int,
                    hops: int, seed: np.random.SeedSequence):
    """Large-budget basin hopping at p = 1..levels.

    From p = 2 on, restart 0 starts at the interpolated previous best and restart 1 at the
    zero-padded previous best; the rest start uniformly at random.
    """
    per_restart = max(1, budget // restarts)
    out = []
    prev = None
    for p, lseed in zip(range(1, levels + 1), seed.spawn(levels)):
        best = None
        for r, rseed in enumerate(lseed.spawn(restarts)):
            start = None
            if prev is not None and r == 0:
                start = interpolate_schedule(prev.schedule)
            elif prev is not None and r == 1:
                start = prev.schedule.padded()
            rec = basin_hopping(sim, None, initial, p, domain, per_restart, hops, rseed, start=start)
            if best is None or rec.best_value > best.best_value:
                best = rec
        out.append(best)
        prev = best
    return out


def _angles_task(args):
    member, mixer, cfg = args
    inst = member.instance
    sim = QAOASimulator(inst, mixer)
    recs = reference_chain(sim, dicke_state(inst.index), max(cfg.p_levels), _domain(cfg),
                           cfg.budget * cfg.reference_factor, cfg.reference_restarts, cfg.hops,
                           stream(cfg.seed, _STREAMS["angles"], member.graph_id))
    return recs


def angle_magnitude(x: float, period: float | None) -> float:
    """Distance from x to the nearest multiple of ``period`` (x itself when there is no period)."""
    if period is None:
        return abs(x)
    r = math.fmod(x, period) % period
    return min(r, period - r)


def exp_angle_patterns(cfg: ExperimentConfig) -> ExperimentResult:
    """Best schedule components by round. Besides the raw angles, rows carry their magnitudes:
    (-gamma, -beta) gives the same F_p, and inside the wrapped domain that mirror shows up as
    gamma near 2 pi and beta near beta_max, so trends are read off the magnitudes."""
    res = ExperimentResult()
    members = _usable(generate_family(cfg), res)
    mixer = cfg.mixers[0]
    beta_period = cfg.beta_max if MixerKind(mixer) is MixerKind.COMPLETE else None
    outs = pmap(_angles_task, [(m, mixer, cfg) for m in members], cfg.threads)
    rows, runs = [], []
    for m, recs in zip(members, outs):
        for p in sorted(set(cfg.p_levels)):
            rec = recs[p - 1]
            rec.instance_id = str(m.graph_id)
            rec.strategy = "reference"
            runs.append(rec.to_dict(include_timing=False))
            for i, (g, b) in enumerate(zip(rec.schedule.gammas, rec.schedule.betas), start=1):
                rows.append({"graph_id": m.graph_id, "p": p, "round": i, "gamma": g, "beta": b,
                             "gamma_magnitude": angle_magnitude(g, cfg.gamma_max),
                             "beta_magnitude": angle_magnitude(b, beta_period)})
    cols = ["graph_id", "p", "round", "gamma", "beta", "gamma_magnitude", "beta_magnitude"]
    res.tables["angle_patterns"] = Table(cols, rows)
    res.jsonl["angle_runs"] = runs
    return res


# ---- strategy comparison ----


def exp_strategy_compare(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    members = _usable(generate_family(cfg), res)
    table = strategy_compare(
        [m.instance for m in members],
        strategies=tuple(cfg.strategies),
        budget=cfg.budget,
        p_max=cfg.p_max,
        seed=int(stream(cfg.seed, _STREAMS["strategy"]).generate_state(1, np.uint64)[0]),
        mixer=cfg.mixers[0],
        domain=_domain(cfg),
        hops=cfg.hops,
        reference_factor=cfg.reference_factor,
        reference_restarts=cfg.reference_restarts,
        threads=cfg.threads,
        instance_ids=[str(m.graph_id) for m in members],
    )
    res.tables["strategy_compare"] = Table(["p", "strategy", "mean_ratio", "ci_halfwidth", "n_graphs"], table.rows)
    res.jsonl["strategy_runs"] = [r.to_dict(include_timing=False) for r in table.records]
    return res


RUNNERS = {
    "gen": exp_generate,
    "heatmap": exp_heatmap,
    "initial-compare": exp_initial_state_compare,
    "mixer-compare": exp_mixer_compare,
    "std-decay": exp_std_decay,
    "angle-patterns": exp_angle_patterns,
    "strategy-compare": exp_strategy_compare,
}


def write_result(cfg: ExperimentConfig, res: ExperimentResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, t in sorted(res.tables.items()):
        path = out / f"{name}.csv"
        path.write_text(io.csv_text(cfg, t.columns, t.rows))
        written.append(path)
    for name, payload in sorted(res.json.items()):
        path = out / f"{name}.json"
        path.write_text(io.json_text(cfg, payload))
        written.append(path)
    for name, recs in sorted(res.jsonl.items()):
        path = out / f"{name}.jsonl"
        path.write_text(io.jsonl_text(cfg, recs))
        written.append(path)
    return written


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> tuple[ExperimentResult, list[Path]]:
    if cfg.kind == "verify":
        from qaoa_kvc.verify import run_verify

        res = run_verify(cfg)
    else:
        res = RUNNERS[cfg.kind](cfg)
    return res, write_result(cfg, res, cfg.out_dir if out_dir is None else out_dir)
