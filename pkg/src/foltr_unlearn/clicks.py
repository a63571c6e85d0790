"""Cascade click model simulation.

Users scan the SERP top to bottom, click with a relevance-dependent
probability and, after a click, stop scanning with a relevance-dependent
probability. The four profiles are the CCM instantiations used throughout:
perfect, navigational, informational, and the malicious poison profile that
clicks inversely to relevance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from .errors import ConfigurationError

# 5-level rows; 3-level rows are the bracketed MQ2007 variants.
_CLICK_5 = {
    "perfect": [0.0, 0.2, 0.4, 0.8, 1.0],
    "navigational": [0.05, 0.3, 0.5, 0.7, 0.95],
    "informational": [0.4, 0.6, 0.7, 0.8, 0.9],
    "poison": [1.0, 0.8, 0.6, 0.2, 0.0],
}
_STOP_5 = {
    "perfect": [0.0, 0.0, 0.0, 0.0, 0.0],
    "navigational": [0.2, 0.3, 0.5, 0.7, 0.9],
    "informational": [0.1, 0.2, 0.3, 0.4, 0.5],
    "poison": [0.0, 0.0, 0.0, 0.0, 0.0],
}
_CLICK_3 = {
    "perfect": [0.0, 0.5, 1.0],
    "navigational": [0.05, 0.5, 0.95],
    "informational": [0.4, 0.7, 0.9],
    "poison": [1.0, 0.5, 0.0],
}
_STOP_3 = {
    "perfect": [0.0, 0.0, 0.0],
    "navigational": [0.2, 0.5, 0.9],
    "informational": [0.1, 0.3, 0.5],
    "poison": [0.0, 0.0, 0.0],
}

PROFILE_NAMES = ("perfect", "navigational", "informational", "poison")


@dataclass(frozen=True)
class ClickProfile:
    """Click/stop probability tables indexed by relevance grade."""

    name: str
    click_prob: Dict[int, float]
    stop_prob: Dict[int, float]
    relevance_levels: int


def make_profile(name: str, relevance_levels: int) -> ClickProfile:
    if name not in PROFILE_NAMES:
        raise ConfigurationError(f"unknown click profile {name!r}; expected one of {PROFILE_NAMES}")
    if relevance_levels == 5:
        click, stop = _CLICK_5[name], _STOP_5[name]
    elif relevance_levels == 3:
        click, stop = _CLICK_3[name], _STOP_3[name]
    else:
        raise ConfigurationError(f"relevance_levels must be 3 or 5, got {relevance_levels}")
    return ClickProfile(name, dict(enumerate(click)), dict(enumerate(stop)), relevance_levels)


def simulate_session(profile: ClickProfile, serp_relevances: Sequence[int],
                     rng: np.random.Generator) -> np.ndarray:
    """One cascade session over the displayed relevances; returns a boolean click vector.

    The stop draw only happens after a click: an unclicked document never
    terminates the scan.
    """
    clicks = np.zeros(len(serp_relevances), dtype=bool)
    for i, rel in enumerate(serp_relevances):
        rel = int(rel)
        if rng.random() < profile.click_prob[rel]:
            clicks[i] = True
            if rng.random() < profile.stop_prob[rel]:
                break
    return clicks
