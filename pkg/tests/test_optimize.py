import math

import numpy as np
import pytest

from qaoa_kvc import AngleSchedule, Graph, ProblemInstance, QAOASimulator, SearchDomain, dicke_state
from qaoa_kvc.errors import InvalidArgument
from qaoa_kvc.operators import MixerKind
from qaoa_kvc.optimize import (
    BudgetExhausted,
    Objective,
    append_jsonl,
    basin_hopping,
    interpolate_schedule,
    interpolation_warm_start,
    level_sweep,
    local_refine,
    monte_carlo_search,
    read_jsonl,
    strategy_compare,
    summarize,
)

from conftest import random_instance

DOMAIN = SearchDomain()


def grid_scan(sim, init, res=64):
    g = np.arange(res) * DOMAIN.gamma_max / res
    b = np.arange(res) * DOMAIN.beta_max / res
    G, B = np.meshgrid(g, b, indexing="ij")
    vals = sim.values_batch(G.reshape(-1, 1), B.reshape(-1, 1), init).reshape(res, res)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    return vals, AngleSchedule((g[i],), (b[j],))


@pytest.fixture(scope="module")
def inst8():
    return random_instance(8, 31)


def test_objective_budget_is_exact(inst8):
    sim = QAOASimulator(inst8)
    obj = Objective(sim, dicke_state(inst8.index), DOMAIN, 3)
    for _ in range(3):
        obj(np.array([0.3, 0.2]))
    with pytest.raises(BudgetExhausted):
        obj(np.array([0.3, 0.2]))
    assert obj.count == 3
    with pytest.raises(InvalidArgument):
        Objective(sim, dicke_state(inst8.index), DOMAIN, 0)


def test_monte_carlo(inst8):
    d = dicke_state(inst8.index)
    one = monte_carlo_search(inst8, "complete", d, 2, DOMAIN, 1, seed=5)
    assert one.evaluations == 1 and one.best_value == one.sample_max == one.sample_mean
    a = monte_carlo_search(inst8, "complete", d, 2, DOMAIN, 300, seed=5)
    b = monte_carlo_search(inst8, "complete", d, 2, DOMAIN, 300, seed=5)
    assert a.to_dict(include_timing=False) == b.to_dict(include_timing=False)
    assert a.evaluations == 300 and a.best_value == a.sample_max
    assert DOMAIN.contains(a.schedule)
    sim = QAOASimulator(inst8, "complete")
    assert abs(sim.value(a.schedule, d) - a.best_value) < 1e-12


def test_monte_carlo_triangle_bound(triangle):
    inst = ProblemInstance(triangle, 1)
    rec = monte_carlo_search(inst, "complete", dicke_state(inst.index), 1, DOMAIN, 50, seed=0)
    assert rec.best_value <= 2 + 1e-12


@pytest.mark.parametrize("kind", list(MixerKind))
def test_local_refine_never_worse(inst8, kind, rng):
    sim = QAOASimulator(inst8, kind)
    d = dicke_state(inst8.index)
    for _ in range(5):
        start = AngleSchedule(rng.uniform(0, 6, 2), rng.uniform(0, 1.5, 2))
        sched, v = local_refine(sim, None, d, start, DOMAIN, 150)
        assert v >= sim.value(start, d) - 1e-15
        assert DOMAIN.contains(sched)
        assert abs(sim.value(sched, d) - v) < 1e-12


def test_local_refine_at_maximum_stays(inst8):
    sim = QAOASimulator(inst8)
    d = dicke_state(inst8.index)
    _, best = grid_scan(sim, d)
    s1, v1 = local_refine(sim, None, d, best, DOMAIN, 400)
    s2, v2 = local_refine(sim, None, d, s1, DOMAIN, 400)
    assert v2 >= v1
    assert np.abs(s2.to_vector() - s1.to_vector()).max() < 1e-3


@pytest.mark.parametrize("kind", list(MixerKind))
def test_local_refine_beats_grid(kind):
    inst = random_instance(7, 77)
    sim = QAOASimulator(inst, kind)
    d = dicke_state(inst.index)
    vals, best = grid_scan(sim, d)
    _, v = local_refine(sim, None, d, best, DOMAIN, 300)
    assert v >= vals.max()


def test_basin_hopping_one_hop_is_local_refine(inst8):
    d = dicke_state(inst8.index)
    rec = basin_hopping(inst8, "complete", d, 2, DOMAIN, 120, hops=1, seed=9)
    g, b = DOMAIN.sample(np.random.default_rng(9), 2)
    sched, v = local_refine(inst8, "complete", d, AngleSchedule(g, b), DOMAIN, 120)
    assert rec.best_value == v
    assert rec.schedule == sched


def test_basin_hopping_budget_and_domain(inst8):
    d = dicke_state(inst8.index)
    for kind in MixerKind:
        rec = basin_hopping(inst8, kind, d, 3, DOMAIN, 250, hops=5, seed=2)
        assert rec.evaluations <= 250
        assert DOMAIN.contains(rec.schedule)
        assert rec.best_value == rec.sample_max
        with pytest.raises(InvalidArgument):
            basin_hopping(inst8, kind, d, 3, DOMAIN, 250, hops=0, seed=2)


def test_basin_hopping_best_non_decreasing_in_hops(inst8):
    d = dicke_state(inst8.index)
    # same seed and per-hop budget: more hops extends the same trajectory
    vals = [basin_hopping(inst8, "complete", d, 2, DOMAIN, 60 * h, hops=h, seed=4).best_value for h in (1, 2, 4, 8)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_basin_hopping_triangle(triangle):
    inst = ProblemInstance(triangle, 1)
    rec = basin_hopping(inst, "complete", dicke_state(inst.index), 1, DOMAIN, 100, 2, seed=0)
    assert abs(rec.best_value - 2) < 1e-6


def test_basin_hopping_matches_grid_oracle_p1():
    inst = random_instance(6, 12)
    sim = QAOASimulator(inst, "complete")
    d = dicke_state(inst.index)
    _, best = grid_scan(sim, d, 128)
    _, truth = local_refine(sim, None, d, best, DOMAIN, 500)
    rec = basin_hopping(sim, None, d, 1, DOMAIN, 600, hops=6, seed=1)
    assert rec.best_value >= truth - 1e-6


def test_interpolate_schedule():
    s = interpolate_schedule(AngleSchedule((0.4,), (0.2,)))
    assert s == AngleSchedule((0.4, 0.4), (0.2, 0.2))
    ramp = AngleSchedule([0.3 * i for i in range(4)], [1.0 - 0.1 * i for i in range(4)])
    up = interpolate_schedule(ramp)
    assert up.p == 5
    np.testing.assert_allclose(np.diff(up.gammas), 0.9 / 4)
    np.testing.assert_allclose(np.diff(up.betas), -0.3 / 4)


def test_interpolation_warm_start(inst8):
    d = dicke_state(inst8.index)
    sim = QAOASimulator(inst8)
    prev = basin_hopping(sim, None, d, 2, DOMAIN, 200, 2, seed=3)
    nxt = interpolation_warm_start(prev, sim, None, d, DOMAIN, 100)
    assert nxt.p == 3 and nxt.evaluations <= 100
    start = AngleSchedule(**{k: v for k, v in nxt.extra["start"].items() if k != "p"})
    assert nxt.best_value >= sim.value(start, d)
    assert abs(sim.value(prev.schedule.padded(), d) - prev.best_value) < 1e-12
    with pytest.raises(InvalidArgument):
        interpolation_warm_start(None, sim, None, d, DOMAIN, 100)


def test_level_sweep_monotone(inst8):
    for kind in MixerKind:
        recs = level_sweep(QAOASimulator(inst8, kind), dicke_state(inst8.index), 4, DOMAIN, 150, 3, seed=8)
        vals = [r.best_value for r in recs]
        assert [r.p for r in recs] == [1, 2, 3, 4]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_strategy_compare_small():
    insts = [random_instance(6, s) for s in range(4)] + [ProblemInstance(Graph(6, ()), 3)]
    kw = dict(budget=40, p_max=3, seed=5, reference_factor=4, reference_restarts=2, hops=2)
    a = strategy_compare(insts, **kw)
    b = strategy_compare(insts, **kw)
    assert a.rows == b.rows
    assert len(a.skipped) == 1
    for p in (1, 2, 3):
        ref = next(r for r in a.rows if r["p"] == p and r["strategy"] == "reference")
        assert ref["n_graphs"] == 4
        for r in a.rows:
            if r["p"] == p:
                assert r["mean_ratio"] <= ref["mean_ratio"] + 1e-9
    for rec in a.records:
        if rec.strategy != "reference":
            assert rec.evaluations <= 40
        assert DOMAIN.contains(rec.schedule)
        assert 0 <= rec.approx_ratio <= 1 + 1e-12
    ref = a.curve("reference")
    assert all(y >= x - 1e-12 for x, y in zip(ref, ref[1:]))
    with pytest.raises(InvalidArgument):
        strategy_compare(insts, strategies=("nope",))


def test_summarize():
    m, hw = summarize([1.0, 2.0, 3.0])
    assert m == 2.0 and abs(hw - 1.96 / math.sqrt(3)) < 1e-12
    assert summarize([5.0]) == (5.0, 0.0)


def test_jsonl_roundtrip(tmp_path, inst8):
    rec = monte_carlo_search(inst8, "ring", dicke_state(inst8.index), 2, DOMAIN, 10, seed=1)
    path = tmp_path / "runs.jsonl"
    append_jsonl(path, [rec])
    append_jsonl(path, [rec], include_timing=False)
    back = read_jsonl(path)
    assert len(back) == 2
    assert back[0].to_dict() == rec.to_dict()
    assert back[1].to_dict(include_timing=False) == rec.to_dict(include_timing=False)
