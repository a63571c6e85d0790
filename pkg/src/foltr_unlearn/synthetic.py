"""Synthetic ranking datasets for desk-scale runs and sanity checks.

Relevance grades are monotone in a hidden linear utility, so a linear ranker
can reach high nDCG; optional score noise before grading caps the attainable
ceiling. With a positive margin the grade bands are separated along the
hidden direction, so a well-trained ranker reaches nDCG 1.0 while a poisoned
one stays measurably below it.
"""

from __future__ import annotations

from typing import Dict, Optional, Sequence

import numpy as np

from .data import Dataset, QueryGroup

_BANDS_3 = (0.1, 0.2)              # fractions for grades 2, 1; rest grade 0
_BANDS_5 = (0.05, 0.1, 0.15, 0.2)  # fractions for grades 4..1


def _grade_by_rank(raw_scores: np.ndarray, relevance_levels: int) -> np.ndarray:
    bands = _BANDS_3 if relevance_levels == 3 else _BANDS_5
    n = len(raw_scores)
    order = np.argsort(-raw_scores, kind="stable")
    labels = np.zeros(n, dtype=np.int64)
    start = 0
    for grade_offset, fraction in enumerate(bands):
        count = max(1, round(fraction * n))
        labels[order[start:start + count]] = relevance_levels - 1 - grade_offset
        start += count
    return labels


def _band_grades(docs_per_query: int, relevance_levels: int) -> np.ndarray:
    bands = _BANDS_3 if relevance_levels == 3 else _BANDS_5
    counts = [max(1, round(fraction * docs_per_query)) for fraction in bands]
    counts.append(docs_per_query - sum(counts))
    grades = []
    for grade_offset, count in enumerate(counts):
        grades.extend([relevance_levels - 1 - grade_offset] * count)
    return np.array(grades, dtype=np.int64)


def make_synthetic_dataset(n_train_queries: int = 100, n_test_queries: int = 30,
                           docs_per_query: int = 20, n_features: int = 10,
                           relevance_levels: int = 3, noise: float = 0.0,
                           margin: float = 0.0, seed: int = 7) -> Dataset:
    rng = np.random.default_rng(seed)
    w_star = rng.normal(size=n_features)
    w_star /= np.linalg.norm(w_star)
    band_grades = _band_grades(docs_per_query, relevance_levels)
    band_width = 0.2

    def make_split(prefix: str, n_queries: int) -> Dict[str, QueryGroup]:
        split = {}
        for q in range(n_queries):
            qid = f"{prefix}{q:04d}"
            features = rng.uniform(0.0, 1.0, size=(docs_per_query, n_features))
            if margin > 0:
                # pin each document's utility inside its grade's band, with
                # inter-band gaps of `margin`, by shifting along w_star
                targets = band_grades * (band_width + margin) \
                    + rng.uniform(0.0, band_width, size=docs_per_query)
                features = features + (targets - features @ w_star)[:, None] * w_star[None, :]
                labels = band_grades.copy()
            else:
                raw = features @ w_star
                if noise > 0:
                    raw = raw + noise * rng.normal(size=docs_per_query)
                labels = _grade_by_rank(raw, relevance_levels)
            split[qid] = QueryGroup(qid, features, labels)
        return split

    return Dataset(make_split("q", n_train_queries), make_split("t", n_test_queries),
                   n_features, relevance_levels)


def make_separable_dataset(n_train_queries: int = 50, n_test_queries: int = 20,
                           docs_per_query: int = 10, seed: int = 11) -> Dataset:
    """Two features; a document is relevant iff feature_0 > feature_1."""
    rng = np.random.default_rng(seed)

    def make_split(prefix: str, n_queries: int) -> Dict[str, QueryGroup]:
        split = {}
        for q in range(n_queries):
            qid = f"{prefix}{q:04d}"
            features = rng.uniform(0.0, 1.0, size=(docs_per_query, 2))
            relevances = (features[:, 0] > features[:, 1]).astype(np.int64)
            split[qid] = QueryGroup(qid, features, relevances)
        return split

    return Dataset(make_split("q", n_train_queries), make_split("t", n_test_queries), 2, 3)
