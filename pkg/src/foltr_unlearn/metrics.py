"""Evaluation: nDCG@k, discounted online performance, Relevancy-Reset
probes, l2 model distance and paired significance tests.

nDCG uses the standard LETOR gain/discount form (2^rel - 1, log2(i + 1));
an all-zero ideal yields 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats

from .data import Dataset, QueryGroup
from .ranker import LinearRanker, score_all


def _dcg(relevances: np.ndarray, k: int) -> float:
    rels = np.asarray(relevances, dtype=float)[:k]
    if len(rels) == 0:
        return 0.0
    discounts = np.log2(np.arange(2, len(rels) + 2))
    return float(np.sum((np.power(2.0, rels) - 1.0) / discounts))


def ndcg_at_k(ranked_relevances: Sequence[int], ideal_relevances: Sequence[int], k: int) -> float:
    """nDCG@k of a ranked label list against the ideal (descending) ordering
    of `ideal_relevances`."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ideal = np.sort(np.asarray(ideal_relevances))[::-1]
    idcg = _dcg(ideal, k)
    if idcg == 0.0:
        return 0.0
    return _dcg(np.asarray(ranked_relevances), k) / idcg


def deterministic_ranking(ranker: LinearRanker, group: QueryGroup) -> np.ndarray:
    """Document order by descending score, ties broken by document order."""
    scores = score_all(ranker, group.features)
    return np.argsort(-scores, kind="stable")


def offline_eval(ranker: LinearRanker, test_groups: Dict[str, QueryGroup], k: int = 10) -> float:
    """Mean nDCG@k of the ranker's deterministic rankings over the test split."""
    if not test_groups:
        raise ValueError("test split is empty")
    total = 0.0
    for group in test_groups.values():
        order = deterministic_ranking(ranker, group)
        total += ndcg_at_k(group.relevances[order], group.relevances, k)
    return total / len(test_groups)


def online_performance(per_round_ndcg: Sequence[float], gamma: float) -> float:
    """Discounted cumulative nDCG of displayed rankings: sum_t v_t * gamma^(t-1).

    NaN entries (rounds without user-facing rankings) contribute nothing but
    keep their round index in the discount.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1]")
    total = 0.0
    for t, value in enumerate(per_round_ndcg):
        if not math.isnan(value):
            total += value * gamma**t
    return total


@dataclass(frozen=True)
class RelabeledSubset:
    """High-loss target-client queries with rank-based modified labels."""

    query_ids: Tuple[str, ...]
    features: Tuple[np.ndarray, ...]      # per query, in the f_c ranking order
    modified_labels: Tuple[np.ndarray, ...]


def _band_labels(n_docs: int, relevance_levels: int) -> np.ndarray:
    """Labels by rank position; band boundaries by ceiling of the cumulative
    proportion. 5-level: 20% bands 4..0; 3-level: 20% / 30% / 50% for 2/1/0."""
    if relevance_levels == 5:
        bands = [(4, 0.2), (3, 0.4), (2, 0.6), (1, 0.8), (0, 1.0)]
    else:
        bands = [(2, 0.2), (1, 0.5), (0, 1.0)]
    labels = np.zeros(n_docs, dtype=np.int64)
    start = 0
    for label, cumulative in bands:
        end = math.ceil(cumulative * n_docs)
        labels[start:end] = label
        start = end
    return labels


def relr_prepare(groups: Dict[str, QueryGroup], local_model: LinearRanker,
                 relevance_levels: int, k_percent: float = 20.0, k: int = 10) -> RelabeledSubset:
    """Select the top K% highest-loss queries under the local model and relabel
    their documents by the model's own ranking.

    Per-query loss is 1 - nDCG@k of the model's deterministic ranking against
    the true labels; ties are broken by query id.
    """
    if not groups:
        raise ValueError("target client has no queries")
    losses = []
    orders = {}
    for qid, group in groups.items():
        order = deterministic_ranking(local_model, group)
        orders[qid] = order
        losses.append((1.0 - ndcg_at_k(group.relevances[order], group.relevances, k), qid))
    losses.sort(key=lambda item: (-item[0], item[1]))
    n_selected = math.ceil(k_percent / 100.0 * len(losses))
    selected = [qid for _, qid in losses[:n_selected]]
    features = []
    labels = []
    for qid in selected:
        group = groups[qid]
        order = orders[qid]
        features.append(group.features[order])
        labels.append(_band_labels(group.n_docs, relevance_levels))
    return RelabeledSubset(tuple(selected), tuple(features), tuple(labels))


def relr_loss(model: LinearRanker, subset: RelabeledSubset, k: int = 10) -> float:
    """Mean (1 - nDCG@k) of the model's deterministic rankings against the
    modified labels."""
    total = 0.0
    for feats, labels in zip(subset.features, subset.modified_labels):
        scores = score_all(model, feats)
        order = np.argsort(-scores, kind="stable")
        total += 1.0 - ndcg_at_k(labels[order], labels, k)
    return total / len(subset.query_ids)


def relr_diff(global_before: LinearRanker, global_after: LinearRanker,
              subset: RelabeledSubset, k: int = 10) -> float:
    """Loss increase on the relabeled subset; positive values indicate
    successful unlearning."""
    if not subset.query_ids:
        raise ValueError("relabeled subset is empty")
    return relr_loss(global_after, subset, k) - relr_loss(global_before, subset, k)


def l2_distance(model_a: np.ndarray, model_b: np.ndarray) -> float:
    a = np.asarray(model_a, dtype=float)
    b = np.asarray(model_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"model dimensions differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def paired_t_test(values_a: Sequence[float], values_b: Sequence[float]) -> Tuple[float, float]:
    """Two-sided paired Student's t-test; pairs must be matched by (fold, seed).

    Zero variance of the differences degenerates to p=0 when the mean differs
    from zero and p=1 otherwise.
    """
    a = np.asarray(values_a, dtype=float)
    b = np.asarray(values_b, dtype=float)
    if a.shape != b.shape or len(a) < 2:
        raise ValueError("paired samples must have equal length >= 2")
    diffs = a - b
    mean = diffs.mean()
    sd = diffs.std(ddof=1)
    if sd == 0.0:
        return (0.0, 1.0) if mean == 0.0 else (math.inf, 0.0)
    t_stat = mean / (sd / math.sqrt(len(diffs)))
    p_value = 2.0 * stats.t.sf(abs(t_stat), df=len(diffs) - 1)
    return float(t_stat), float(p_value)
