"""Run configuration: profiles, per-dataset presets, JSON config files and flag overrides.

Resolution order (later wins): profile defaults, dataset preset, config file,
command-line flags.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, fields

from spacegan.gan import TrainConfig
from spacegan.tree import TreeParams

OUT_ENV = "SPACEGAN_OUT"
CALIFORNIA_ENV = "SPACEGAN_CALIFORNIA_CSV"
DATASETS = ("toy1", "toy2", "california15", "california50")

PROFILES = {
    "paper": {"tsteps": 20000, "snap": 500, "samples_c": 500, "ensemble_b": 100, "subsample": None},
    "desk": {"tsteps": 5000, "snap": 500, "samples_c": 25, "ensemble_b": 20, "subsample": 2000},
}

DATASET_PRESETS = {
    "toy1": {"neighbourhood": "queen", "noise_dim": 8, "gen_filters": 50, "disc_filters": 50},
    "toy2": {"neighbourhood": "queen", "noise_dim": 8, "gen_filters": 100, "disc_filters": 100},
    "california15": {"neighbourhood": "knn:15", "noise_dim": 15, "gen_filters": 100, "disc_filters": 100},
    "california50": {"neighbourhood": "knn:50", "noise_dim": 15, "gen_filters": 200, "disc_filters": 200},
    "csv": {"neighbourhood": "knn:8", "noise_dim": 8, "gen_filters": 50, "disc_filters": 50},
}


@dataclass(frozen=True)
class RunConfig:
    dataset: str = "toy1"
    profile: str = "desk"
    seed: int = 0
    neighbourhood: str = "queen"
    metric: str = "mie"
    tsteps: int = 5000
    snap: int = 500
    samples_c: int = 25
    batch_size: int = 100
    noise_dim: int = 8
    learning_rate: float = 0.01
    gen_filters: int = 50
    disc_filters: int = 50
    ensemble_b: int = 20
    bins: int = 5
    tree_max_depth: int | None = 12
    tree_min_samples_leaf: int = 2
    gp_lengthscale: float = 1.0
    gp_max_points: int | None = 2000
    subsample: int | None = None
    data_path: str | None = None
    toy2_floor_before_scale: bool = False
    include_oracle: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.dataset not in DATASETS and not self.dataset.startswith("csv:"):
            raise ValueError(f"unknown dataset {self.dataset!r}; choose from {DATASETS} or csv:<path>")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; choose from {tuple(PROFILES)}")
        if self.metric not in ("mie", "rmse"):
            raise ValueError(f"metric must be 'mie' or 'rmse', got {self.metric!r}")
        kind = self.neighbourhood.split(":")[0]
        if kind not in ("queen", "knn"):
            raise ValueError(f"neighbourhood must be 'queen' or 'knn:<k>', got {self.neighbourhood!r}")
        if kind == "queen" and self.dataset not in ("toy1", "toy2"):
            raise ValueError("queen neighbourhoods need gridded data (toy1, toy2)")

    @property
    def dataset_family(self) -> str:
        return "csv" if self.dataset.startswith("csv:") else self.dataset

    def train_config(self, seed: int | None = None, metric: str | None = None) -> TrainConfig:
        return TrainConfig(
            tsteps=self.tsteps,
            batch_size=self.batch_size,
            snap=self.snap,
            samples_c=self.samples_c,
            noise_dim=self.noise_dim,
            learning_rate=self.learning_rate,
            gen_filters=self.gen_filters,
            disc_filters=self.disc_filters,
            selection_metric=metric or self.metric,
            seed=self.seed if seed is None else seed,
        )

    def tree_params(self) -> TreeParams:
        return TreeParams(self.tree_max_depth, self.tree_min_samples_leaf)

    def to_dict(self, include_out: bool = True) -> dict:
        d = dataclasses.asdict(self)
        if not include_out:
            d.pop("out")
        return d

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, ignoring the output directory."""
        d = self.to_dict(include_out=False)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def output_dir(self, command: str) -> str:
        if self.out:
            return self.out
        base = os.environ.get(OUT_ENV, "runs")
        name = self.dataset.replace(":", "_").replace(os.sep, "_")
        return os.path.join(base, f"{command}-{name}-seed{self.seed}")


FIELD_NAMES = {f.name for f in fields(RunConfig)}


def resolve(file_values: dict | None = None, flag_values: dict | None = None) -> RunConfig:
    """Merge profile, dataset preset, config-file values and flags into a RunConfig."""
    overrides = {}
    for source in (file_values or {}, flag_values or {}):
        unknown = set(source) - FIELD_NAMES
        if unknown:
            raise ValueError(f"unknown config key(s): {sorted(unknown)}")
        overrides.update({k: v for k, v in source.items() if v is not None})
    profile = overrides.get("profile", "desk")
    dataset = overrides.get("dataset", "toy1")
    values = dict(PROFILES.get(profile, {}))
    family = "csv" if str(dataset).startswith("csv:") else dataset
    values.update(DATASET_PRESETS.get(family, {}))
    values.update(overrides)
    return RunConfig(**values)


def load_config_file(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return data
