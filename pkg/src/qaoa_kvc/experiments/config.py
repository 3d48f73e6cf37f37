"""Experiment configuration: JSON file -> validated dataclass with per-experiment defaults."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from qaoa_kvc.errors import InvalidArgument
from qaoa_kvc.operators import MixerKind

EXPERIMENT_KINDS = (
    "gen",
    "heatmap",
    "initial-compare",
    "mixer-compare",
    "std-decay",
    "angle-patterns",
    "strategy-compare",
    "verify",
)
INITIAL_KINDS = ("dicke", "classical")

# knobs that change where or how fast results are produced, never what they are
RUNTIME_FIELDS = ("out_dir", "threads")


@dataclass
class ExperimentConfig:
    kind: str
    n_min: int = 7
    n_max: int = 10
    p_edge: float = 0.5
    count: int = 100
    seed: int = 0
    mixers: list[str] = field(default_factory=lambda: ["complete", "ring"])
    initial_states: list[str] = field(default_factory=lambda: ["dicke", "classical"])
    p_max: int = 5
    p_levels: list[int] = field(default_factory=lambda: [5, 6])
    gamma_max: float = 2 * math.pi
    beta_max: float = math.pi / 2
    budget: int = 200
    hops: int = 4
    reference_factor: int = 20
    reference_restarts: int = 10
    strategies: list[str] = field(default_factory=lambda: ["monte_carlo", "basin_hopping", "interpolation"])
    grid: int = 64
    per_graph: bool = True
    samples: int = 1000
    repetitions: int = 100
    beat_repetitions: int = 100
    beat_cap: int = 1_000_000
    out_dir: str = "results"
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise InvalidArgument(f"unknown experiment kind {self.kind!r}; choose from {EXPERIMENT_KINDS}")
        if not 1 <= self.n_min <= self.n_max:
            raise InvalidArgument(f"need 1 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        if not 0.0 <= self.p_edge <= 1.0:
            raise InvalidArgument(f"p_edge must be in [0, 1], got {self.p_edge}")
        if self.count < 1:
            raise InvalidArgument(f"count must be >= 1, got {self.count}")
        for m in self.mixers:
            MixerKind(m)
        for s in self.initial_states:
            if s not in INITIAL_KINDS:
                raise InvalidArgument(f"unknown initial state {s!r}; choose from {INITIAL_KINDS}")
        if self.grid < 2:
            raise InvalidArgument(f"grid resolution must be >= 2, got {self.grid}")
        for name in ("p_max", "budget", "hops", "samples", "repetitions", "beat_repetitions", "beat_cap",
                     "reference_factor", "reference_restarts", "threads"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.p_levels or min(self.p_levels) < 1:
            raise InvalidArgument("p_levels must be a non-empty list of levels >= 1")
        if not (self.gamma_max > 0 and self.beta_max > 0):
            raise InvalidArgument("gamma_max and beta_max must be positive")

    def science_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in RUNTIME_FIELDS:
            d.pop(k)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.science_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# full-size defaults per experiment; anything in the JSON file overrides them
KIND_DEFAULTS: dict[str, dict] = {
    "gen": {},
    "heatmap": {"n_min": 10, "n_max": 10, "count": 100, "mixers": ["complete", "ring"], "p_max": 1},
    "initial-compare": {"n_min": 7, "n_max": 8, "count": 10, "p_max": 5, "budget": 100, "hops": 2},
    "mixer-compare": {"n_min": 7, "n_max": 7, "count": 100, "p_max": 5, "budget": 400},
    "std-decay": {"n_min": 10, "n_max": 10, "count": 1, "mixers": ["complete"], "p_max": 5},
    "angle-patterns": {"count": 50, "mixers": ["complete"], "p_levels": [5, 6]},
    "strategy-compare": {"count": 50, "mixers": ["complete"], "p_max": 6},
    "verify": {},
}


def make_config(kind: str, overrides: dict | None = None) -> ExperimentConfig:
    if kind not in EXPERIMENT_KINDS:
        raise InvalidArgument(f"unknown experiment kind {kind!r}; choose from {EXPERIMENT_KINDS}")
    values = dict(KIND_DEFAULTS[kind])
    values.update(overrides or {})
    values["kind"] = kind
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**values)


def load_config(kind: str, path: str | Path | None = None, **overrides) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidArgument(f"cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise InvalidArgument("config file must hold a JSON object")
        file_kind = data.pop("kind", kind)
        if file_kind != kind:
            raise InvalidArgument(f"config is for {file_kind!r}, not {kind!r}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return make_config(kind, data)
