"""Linear ranker and the Pairwise Differentiable Gradient Descent local update.

The ranking shown to the user is a Plackett-Luce sample over exp(score),
drawn without replacement and truncated to the SERP length. Preferences are
inferred from clicks (clicked beats unclicked-above and the first unclicked
directly below), and the update is debiased with the swap-probability weight
rho computed over the displayed prefix only, in log domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .data import QueryGroup


@dataclass(frozen=True)
class LinearRanker:
    weights: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("ranker weights must be finite")
        self.weights.setflags(write=False)

    @staticmethod
    def zeros(n_features: int) -> "LinearRanker":
        return LinearRanker(np.zeros(n_features))


@dataclass(frozen=True)
class Serp:
    """Displayed ranking: document indices into the query group plus their
    scores at display time."""

    doc_indices: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return len(self.doc_indices)


@dataclass(frozen=True)
class PreferencePair:
    preferred: int     # document index
    dispreferred: int


def score(ranker: LinearRanker, features: np.ndarray) -> float:
    if features.shape[-1] != ranker.weights.shape[0]:
        raise ValueError(f"feature dimension {features.shape[-1]} != ranker dimension {ranker.weights.shape[0]}")
    return float(ranker.weights @ features)


def score_all(ranker: LinearRanker, features: np.ndarray) -> np.ndarray:
    if features.shape[1] != ranker.weights.shape[0]:
        raise ValueError(f"feature dimension {features.shape[1]} != ranker dimension {ranker.weights.shape[0]}")
    return features @ ranker.weights


def sample_ranking(ranker: LinearRanker, group: QueryGroup, serp_len: int,
                   rng: np.random.Generator) -> Serp:
    """Plackett-Luce sample via the Gumbel-max trick: sorting scores perturbed
    by i.i.d. Gumbel noise draws documents sequentially without replacement
    with probability proportional to exp(score)."""
    if serp_len < 1:
        raise ValueError("serp_len must be >= 1")
    scores = score_all(ranker, group.features)
    keys = scores + rng.gumbel(size=group.n_docs)
    order = np.argsort(-keys, kind="stable")[: min(serp_len, group.n_docs)]
    return Serp(order, scores[order])


def infer_preferences(serp: Serp, clicks: Sequence[bool]) -> List[PreferencePair]:
    """Clicked documents are preferred over every unclicked document displayed
    above them and over the first unclicked document directly below, if any."""
    if len(clicks) != len(serp):
        raise ValueError("clicks length must equal SERP length")
    pairs = []
    for pos, clicked in enumerate(clicks):
        if not clicked:
            continue
        preferred = int(serp.doc_indices[pos])
        for above in range(pos):
            if not clicks[above]:
                pairs.append(PreferencePair(preferred, int(serp.doc_indices[above])))
        for below in range(pos + 1, len(serp)):
            if not clicks[below]:
                pairs.append(PreferencePair(preferred, int(serp.doc_indices[below])))
                break
    return pairs


def pair_gradient(s_k: float, s_l: float) -> float:
    """d/ds_k sigmoid(s_k - s_l) = e^{s_k} e^{s_l} / (e^{s_k} + e^{s_l})^2."""
    sig = 1.0 / (1.0 + np.exp(-(s_k - s_l)))
    return float(sig * (1.0 - sig))


def _plackett_luce_log_prob(scores: np.ndarray) -> float:
    """log P of observing the given display order under Plackett-Luce,
    restricted to the displayed documents."""
    # suffix logsumexp over the remaining candidates at each position
    rev = scores[::-1]
    suffix = np.logaddexp.accumulate(rev)[::-1]
    return float(np.sum(scores - suffix))


def pdgd_update(ranker: LinearRanker, group: QueryGroup, serp: Serp,
                clicks: Sequence[bool], lr: float) -> LinearRanker:
    """One PDGD step from the clicks observed on a displayed ranking.

    theta' = theta + lr * sum_pairs rho * sigmoid'(s_k - s_l) * (x_k - x_l),
    where rho = P(R_swapped) / (P(R) + P(R_swapped)) under the displayed-prefix
    Plackett-Luce model. Zero pairs leave theta unchanged.
    """
    if lr <= 0:
        raise ValueError("lr must be positive")
    pairs = infer_preferences(serp, clicks)
    if not pairs:
        return ranker
    position_of = {int(doc): pos for pos, doc in enumerate(serp.doc_indices)}
    display_scores = serp.scores
    log_p = _plackett_luce_log_prob(display_scores)
    gradient = np.zeros_like(ranker.weights)
    for pair in pairs:
        pos_k = position_of[pair.preferred]
        pos_l = position_of[pair.dispreferred]
        s_k, s_l = display_scores[pos_k], display_scores[pos_l]
        pair_weight = pair_gradient(s_k, s_l)
        swapped = display_scores.copy()
        swapped[pos_k], swapped[pos_l] = s_l, s_k
        log_p_swapped = _plackett_luce_log_prob(swapped)
        rho = 1.0 / (1.0 + np.exp(log_p - log_p_swapped))
        delta_x = group.features[pair.preferred] - group.features[pair.dispreferred]
        gradient += rho * pair_weight * delta_x
    return LinearRanker(ranker.weights + lr * gradient)
