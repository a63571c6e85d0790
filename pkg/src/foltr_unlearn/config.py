"""Experiment configuration: a YAML key/value tree with strict key checking.

Missing keys fall back to the reference federated setup (10 clients, 5 local
updates per round, 1000 training and 1000 unlearning rounds, learning rate
0.1, SERP length 10, 30% poisoning rate). Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import yaml

from .attacks import ATTACK_KINDS
from .clicks import PROFILE_NAMES
from .errors import ConfigurationError
from .unlearning import STRATEGIES


@dataclass
class DatasetConfig:
    kind: str = "synthetic"            # synthetic | letor
    path: Optional[str] = None         # letor: directory containing fold dirs
    folds: List[str] = field(default_factory=lambda: ["Fold1"])
    relevance_levels: int = 3
    normalize: bool = True
    # synthetic parameters
    train_queries: int = 100
    test_queries: int = 30
    docs_per_query: int = 20
    features: int = 30
    noise: float = 0.05
    margin: float = 0.0
    dataset_seed: int = 7


@dataclass
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    n_clients: int = 10
    local_updates: int = 5
    train_rounds: int = 1000
    unlearn_rounds: int = 1000
    lr: float = 0.1
    serp_len: int = 10
    gamma: float = 0.9995
    eval_every: int = 10
    click_profile: str = "perfect"
    attack: str = "none"
    poisoning_rate: float = 0.3
    strategies: List[str] = field(default_factory=lambda: list(STRATEGIES))
    seeds: List[int] = field(default_factory=lambda: [1, 2, 3])
    relr: bool = True
    relr_k_percent: float = 20.0
    relr_finetune_steps: int = 20
    ascent_lr: float = 0.01
    ascent_steps: int = 50
    ball_radius: Optional[float] = None
    calibration_local_updates: Optional[int] = None

    def n_targets(self) -> int:
        if self.attack == "none":
            return 0
        return int(round(self.poisoning_rate * self.n_clients))

    def target_ids(self) -> Tuple[int, ...]:
        return tuple(range(self.n_targets()))

    def validate(self) -> "ExperimentConfig":
        if self.n_clients < 1:
            raise ConfigurationError("n_clients: must be >= 1")
        if self.local_updates < 1:
            raise ConfigurationError("local_updates: must be >= 1")
        if self.train_rounds < 1 or self.unlearn_rounds < 1:
            raise ConfigurationError("train_rounds/unlearn_rounds: must be >= 1")
        if self.lr <= 0:
            raise ConfigurationError("lr: must be positive")
        if not 0 < self.gamma <= 1:
            raise ConfigurationError("gamma: must be in (0, 1]")
        if self.click_profile not in PROFILE_NAMES:
            raise ConfigurationError(f"click_profile: unknown profile {self.click_profile!r}")
        if self.attack not in ATTACK_KINDS:
            raise ConfigurationError(f"attack: unknown kind {self.attack!r}")
        if not 0.0 <= self.poisoning_rate <= 1.0:
            raise ConfigurationError("poisoning_rate: must be in [0, 1]")
        if self.attack != "none":
            count = self.poisoning_rate * self.n_clients
            if abs(count - round(count)) > 1e-9:
                raise ConfigurationError(
                    f"poisoning_rate: {self.poisoning_rate} x {self.n_clients} clients is not an integer target count")
            if round(count) < 1:
                raise ConfigurationError("poisoning_rate: attack configured but target count is zero")
            if round(count) >= self.n_clients:
                raise ConfigurationError("poisoning_rate: cannot poison every client")
        for strategy in self.strategies:
            if strategy not in STRATEGIES:
                raise ConfigurationError(f"strategies: unknown strategy {strategy!r}")
        if self.dataset.kind not in ("synthetic", "letor"):
            raise ConfigurationError(f"dataset.kind: must be synthetic or letor, got {self.dataset.kind!r}")
        if self.dataset.kind == "letor" and not self.dataset.path:
            raise ConfigurationError("dataset.path: required for letor datasets")
        if self.dataset.relevance_levels not in (3, 5):
            raise ConfigurationError("dataset.relevance_levels: must be 3 or 5")
        if self.dataset.margin < 0:
            raise ConfigurationError("dataset.margin: must be >= 0")
        if not self.seeds:
            raise ConfigurationError("seeds: at least one seed required")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def desk_preset() -> ExperimentConfig:
    """Margin-separated synthetic data-poisoning scenario, about a minute of runtime."""
    return ExperimentConfig(
        dataset=DatasetConfig(features=60, noise=0.0, margin=0.07),
        train_rounds=200,
        unlearn_rounds=200,
        attack="data_poison",
        seeds=[1, 2, 3],
    )


def _apply(obj, values: dict, context: str):
    known = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in values.items():
        if key not in known:
            raise ConfigurationError(f"unknown configuration key {context}{key!r}")
        if key == "dataset":
            if not isinstance(value, dict):
                raise ConfigurationError("dataset: expected a mapping")
            _apply(obj.dataset, value, "dataset.")
        else:
            setattr(obj, key, value)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    raw = yaml.safe_load(path.read_text())
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a mapping")
    config = base if base is not None else ExperimentConfig()
    _apply(config, raw, "")
    return config.validate()
