"""Poisoning behaviours used to operationalize under-unlearning evaluation.

Data poisoning is realized purely as the "poison" click profile on target
clients; model poisoning flips and perturbs the transmitted parameter vector
while the client's honest local training is untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Set, Tuple

import numpy as np

from .errors import ConfigurationError

ATTACK_KINDS = ("none", "data_poison", "model_poison")


@dataclass(frozen=True)
class AttackConfig:
    kind: str = "none"
    target_ids: Tuple[int, ...] = ()
    gamma_range: Tuple[float, float] = (1.0, 2.0)

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ConfigurationError(f"unknown attack kind {self.kind!r}")
        if self.kind != "none" and not self.target_ids:
            raise ConfigurationError("attack configured without target clients")


def poison_update(theta: np.ndarray, rng: np.random.Generator,
                  gamma_range: Tuple[float, float] = (1.0, 2.0),
                  gamma: Optional[float] = None, mu: Optional[np.ndarray] = None) -> np.ndarray:
    """theta_poi = -gamma * theta + mu.

    gamma ~ U[gamma_range] drawn once per call; mu is elementwise
    Normal(mean(theta), std(theta)) using the sample statistics of the current
    vector. Both are redrawn every call. `gamma`/`mu` overrides exist for
    deterministic checks.
    """
    theta = np.asarray(theta, dtype=float)
    if gamma is None:
        gamma = rng.uniform(gamma_range[0], gamma_range[1])
    if mu is None:
        mean = float(theta.mean())
        std = float(theta.std())
        if std == 0.0:
            mu = np.full_like(theta, mean)
        else:
            mu = rng.normal(mean, std, size=theta.shape)
    return -gamma * theta + mu


def role_for(client_id: int, attack: AttackConfig) -> str:
    """honest | data_poisoner | model_poisoner for a client under the attack config."""
    if attack.kind == "none" or client_id not in attack.target_ids:
        return "honest"
    return "data_poisoner" if attack.kind == "data_poison" else "model_poisoner"


def apply_attack_role(client, attack: AttackConfig):
    """Return the client state with its attack role applied.

    Data poisoners get the "poison" click profile; model poisoners keep honest
    local training and only transform the transmitted vector each round.
    """
    import dataclasses

    from .clicks import make_profile

    role = role_for(client.client_id, attack)
    if role == "honest":
        return client
    if role == "data_poisoner":
        poison = make_profile("poison", client.profile.relevance_levels)
        return dataclasses.replace(client, role=role, profile=poison)
    return dataclasses.replace(client, role=role)
