"""Statistical trends of the experiment families on their default instance families."""
import numpy as np

from qaoa_kvc.experiments.config import make_config
from qaoa_kvc.experiments.runners import exp_angle_patterns, exp_initial_state_compare


def test_dicke_start_beats_classical_mean_at_p1():
    cfg = make_config("initial-compare", {"p_max": 1, "mixers": ["complete"]})
    res = exp_initial_state_compare(cfg)
    row = next(r for r in res.tables["initial_compare"].rows if r["p"] == 1)
    print(f"p=1 complete: dicke >= classical mean on {row['frac_dicke_ge_classical']:.0%} of {row['n_graphs']} graphs")
    assert row["n_graphs"] == cfg.count
    assert row["frac_dicke_ge_classical"] >= 0.8


def test_angle_trends_over_rounds():
    cfg = make_config("angle-patterns", {})
    res = exp_angle_patterns(cfg)
    rows = res.tables["angle_patterns"].rows
    assert len({r["graph_id"] for r in rows}) >= 50
    for p in cfg.p_levels:
        by_round = [[r for r in rows if r["p"] == p and r["round"] == i] for i in range(1, p + 1)]
        mean_g = np.array([np.mean([r["gamma_magnitude"] for r in rnd]) for rnd in by_round])
        mean_b = np.array([np.mean([r["beta_magnitude"] for r in rnd]) for rnd in by_round])
        print(f"p={p} mean |gamma| by round {np.round(mean_g, 3)}, mean |beta| {np.round(mean_b, 4)}")
        assert np.all(np.diff(mean_g) > 0)
        assert np.all(np.diff(mean_b) < 0)
