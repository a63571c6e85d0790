"""LETOR dataset parsing, normalization and client partitioning.

Datasets are stored densely: each query group holds a (n_docs, n_features)
feature matrix and an integer relevance vector. All arrays are frozen after
construction so datasets can be shared across concurrent client workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, LetorParseError


@dataclass(frozen=True)
class Document:
    """A single query-document pair: dense feature vector plus graded relevance."""

    features: np.ndarray
    relevance: int


@dataclass(frozen=True)
class QueryGroup:
    """All candidate documents of one query, in file order."""

    query_id: str
    features: np.ndarray    # (n_docs, n_features)
    relevances: np.ndarray  # (n_docs,) int

    def __post_init__(self):
        if self.features.ndim != 2 or len(self.features) != len(self.relevances):
            raise ValueError("features must be (n_docs, n_features) matching relevances")
        if len(self.relevances) < 1:
            raise ValueError(f"query {self.query_id} has no documents")
        self.features.setflags(write=False)
        self.relevances.setflags(write=False)

    @property
    def n_docs(self) -> int:
        return len(self.relevances)

    @property
    def documents(self) -> List[Document]:
        return [Document(self.features[i], int(self.relevances[i])) for i in range(self.n_docs)]


@dataclass(frozen=True)
class Dataset:
    """Train/test query groups with a shared feature space and grade scheme."""

    train: Dict[str, QueryGroup]
    test: Dict[str, QueryGroup]
    feature_count: int
    relevance_levels: int

    def __post_init__(self):
        if self.relevance_levels not in (3, 5):
            raise ConfigurationError(f"relevance_levels must be 3 or 5, got {self.relevance_levels}")
        overlap = set(self.train) & set(self.test)
        if overlap:
            raise ValueError(f"query ids appear in both splits: {sorted(overlap)[:5]}")
        for split in (self.train, self.test):
            for group in split.values():
                if group.features.shape[1] != self.feature_count:
                    raise ValueError(f"query {group.query_id}: feature dimension mismatch")
                if group.relevances.min() < 0 or group.relevances.max() >= self.relevance_levels:
                    raise ValueError(f"query {group.query_id}: relevance outside 0..{self.relevance_levels - 1}")


@dataclass(frozen=True)
class ClientPartition:
    """The training query ids owned by one client."""

    client_id: int
    query_ids: Tuple[str, ...]


def _parse_line(line: str, line_number: int):
    body = line.split("#", 1)[0].strip()
    tokens = body.split()
    if len(tokens) < 2:
        raise LetorParseError(line_number, f"expected '<rel> qid:<id> ...', got {line!r}")
    try:
        relevance = int(tokens[0])
    except ValueError:
        raise LetorParseError(line_number, f"bad relevance label {tokens[0]!r}") from None
    if not tokens[1].startswith("qid:"):
        raise LetorParseError(line_number, f"expected qid:<id>, got {tokens[1]!r}")
    qid = tokens[1][4:]
    if not qid:
        raise LetorParseError(line_number, "empty query id")
    pairs = {}
    for token in tokens[2:]:
        idx, sep, val = token.partition(":")
        if not sep:
            raise LetorParseError(line_number, f"bad feature token {token!r}")
        try:
            # file indices are 1-based; stored 0-based
            pairs[int(idx) - 1] = float(val)
        except ValueError:
            raise LetorParseError(line_number, f"bad feature token {token!r}") from None
        if int(idx) < 1:
            raise LetorParseError(line_number, f"feature index must be >= 1 in {token!r}")
    return relevance, qid, pairs


def parse_letor(lines: Iterable[str], feature_count: int | None = None) -> List[QueryGroup]:
    """Parse LETOR/SVMLight-with-qid text into query groups, preserving file order.

    Missing feature indices are filled with 0.0; when `feature_count` is None
    the dimension is the highest feature index seen in the split.
    """
    rows = []
    max_index = -1
    for line_number, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        relevance, qid, pairs = _parse_line(line, line_number)
        if pairs:
            max_index = max(max_index, max(pairs))
        rows.append((qid, relevance, pairs))
    if feature_count is None:
        feature_count = max_index + 1
    grouped: Dict[str, list] = {}
    for qid, relevance, pairs in rows:
        grouped.setdefault(qid, []).append((relevance, pairs))
    groups = []
    for qid, docs in grouped.items():
        features = np.zeros((len(docs), feature_count))
        relevances = np.empty(len(docs), dtype=np.int64)
        for i, (relevance, pairs) in enumerate(docs):
            relevances[i] = relevance
            for idx, val in pairs.items():
                if idx >= feature_count:
                    raise LetorParseError(0, f"feature index {idx + 1} exceeds feature_count {feature_count}")
                features[i, idx] = val
        groups.append(QueryGroup(qid, features, relevances))
    return groups


def serialize_letor(groups: Sequence[QueryGroup]) -> str:
    """Write query groups back to LETOR text; all features emitted densely so
    a re-parse reproduces the exact same arrays."""
    lines = []
    for group in groups:
        for i in range(group.n_docs):
            feats = " ".join(f"{j + 1}:{float(group.features[i, j])!r}" for j in range(group.features.shape[1]))
            lines.append(f"{int(group.relevances[i])} qid:{group.query_id} {feats}")
    return "\n".join(lines) + "\n"


def load_dataset(train_path, test_path, relevance_levels: int) -> Dataset:
    """Load one fold from LETOR files, padding both splits to a common feature space."""
    with open(train_path) as fh:
        train = parse_letor(fh)
    with open(test_path) as fh:
        test = parse_letor(fh)
    dim = 0
    for group in [*train, *test]:
        dim = max(dim, group.features.shape[1])

    def pad(groups):
        out = {}
        for g in groups:
            feats = g.features
            if feats.shape[1] < dim:
                feats = np.pad(feats, ((0, 0), (0, dim - feats.shape[1])))
            out[g.query_id] = QueryGroup(g.query_id, feats, g.relevances)
        return out

    return Dataset(pad(train), pad(test), dim, relevance_levels)


def normalize_features(dataset: Dataset) -> Dataset:
    """Per-feature min-max scaling to [0, 1], fit on the training split only.

    Constant features map to 0.0; test values outside the train range are not
    clamped.
    """
    if not dataset.train:
        raise ConfigurationError("cannot normalize: empty training split")
    train_matrix = np.vstack([g.features for g in dataset.train.values()])
    lo = train_matrix.min(axis=0)
    hi = train_matrix.max(axis=0)
    span = hi - lo
    constant = span == 0
    span = np.where(constant, 1.0, span)

    def scale(split):
        out = {}
        for qid, g in split.items():
            feats = (g.features - lo) / span
            feats[:, constant] = 0.0
            out[qid] = QueryGroup(qid, feats, g.relevances)
        return out

    return Dataset(scale(dataset.train), scale(dataset.test), dataset.feature_count, dataset.relevance_levels)


def partition_clients(dataset: Dataset, n_clients: int, seed: int) -> List[ClientPartition]:
    """Shuffle training queries with a seeded generator and deal them round-robin."""
    if n_clients < 1:
        raise ConfigurationError(f"n_clients must be >= 1, got {n_clients}")
    qids = list(dataset.train)
    if len(qids) < n_clients:
        raise ConfigurationError(f"{len(qids)} training queries cannot cover {n_clients} clients")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(qids))
    partitions = []
    for client_id in range(n_clients):
        owned = tuple(qids[i] for i in order[client_id::n_clients])
        partitions.append(ClientPartition(client_id, owned))
    return partitions
