from qaoa_kvc.experiments.config import EXPERIMENT_KINDS, ExperimentConfig, load_config
from qaoa_kvc.experiments.runners import (
    exp_angle_patterns,
    exp_heatmap,
    exp_initial_state_compare,
    exp_mixer_compare,
    exp_std_decay,
    exp_strategy_compare,
    generate_family,
    run_experiment,
)

__all__ = [
    "EXPERIMENT_KINDS",
    "ExperimentConfig",
    "exp_angle_patterns",
    "exp_heatmap",
    "exp_initial_state_compare",
    "exp_mixer_compare",
    "exp_std_decay",
    "exp_strategy_compare",
    "generate_family",
    "load_config",
    "run_experiment",
]
