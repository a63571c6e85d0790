"""Federated OLTR orchestration: per-client local PDGD updates, weighted
delta aggregation, broadcast, and a persistent per-round update history.

Every client draws its randomness from a stream derived from
(master_seed, phase_salt, client_id, round_index), so clients can run in any
order (or in parallel) and participation changes never perturb another
client's stream.
"""

from __future__ import annotations

import copy
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .attacks import AttackConfig, apply_attack_role, poison_update
from .clicks import ClickProfile, simulate_session
from .data import ClientPartition, Dataset
from .errors import ConfigurationError
from .metrics import ndcg_at_k
from .ranker import LinearRanker, pdgd_update, sample_ranking

# Phase salts keep rng streams of different training phases independent.
SALT_TRAIN = 0
SALT_UNLEARN = 1
SALT_RETRAIN = 2
SALT_CALIBRATE = 3
SALT_ASCENT = 4
SALT_RELR = 5
SALT_FROZEN = 6


@dataclass
class ClientState:
    client_id: int
    partition: ClientPartition
    profile: ClickProfile
    local_model: LinearRanker
    role: str = "honest"


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    client_ids: Tuple[int, ...]
    weights: np.ndarray          # renormalized over the participants, sums to 1
    deltas: np.ndarray           # (n_participants, n_features), sent - broadcast

    def __post_init__(self):
        if len(self.client_ids) != len(self.weights) or len(self.client_ids) != len(self.deltas):
            raise ValueError("one weight and one delta per participant required")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ValueError("participant weights must sum to 1")


@dataclass
class UpdateHistory:
    theta0: np.ndarray
    records: List[RoundRecord] = field(default_factory=list)

    def append(self, record: RoundRecord) -> None:
        expected = self.records[-1].round_index + 1 if self.records else 1
        if record.round_index != expected:
            raise ValueError(f"round indices must be contiguous: expected {expected}, got {record.round_index}")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)


_MAGIC = b"FOLTRHIST1\n"


def save_history(history: UpdateHistory, path, n_clients: int, seed: int) -> None:
    """Binary, bit-exact round-trip: header (feature_count, n_clients, seed),
    theta0, then flat (t, client_id, weight, delta[float64 x d]) records."""
    d = len(history.theta0)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<iiq", d, n_clients, seed))
        fh.write(history.theta0.astype("<f8").tobytes())
        for record in history.records:
            for i, cid in enumerate(record.client_ids):
                fh.write(struct.pack("<iid", record.round_index, cid, float(record.weights[i])))
                fh.write(record.deltas[i].astype("<f8").tobytes())


def load_history(path) -> Tuple[UpdateHistory, int, int]:
    """Returns (history, n_clients, seed)."""
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a history file")
        d, n_clients, seed = struct.unpack("<iiq", fh.read(16))
        theta0 = np.frombuffer(fh.read(8 * d), dtype="<f8").copy()
        rows = []
        rec_head = struct.Struct("<iid")
        while True:
            head = fh.read(rec_head.size)
            if not head:
                break
            t, cid, weight = rec_head.unpack(head)
            delta = np.frombuffer(fh.read(8 * d), dtype="<f8").copy()
            rows.append((t, cid, weight, delta))
    history = UpdateHistory(theta0)
    t_current, ids, weights, deltas = None, [], [], []

    def flush():
        if t_current is not None:
            history.append(RoundRecord(t_current, tuple(ids), np.array(weights), np.vstack(deltas)))

    for t, cid, weight, delta in rows:
        if t != t_current:
            flush()
            t_current, ids, weights, deltas = t, [], [], []
        ids.append(cid)
        weights.append(weight)
        deltas.append(delta)
    flush()
    return history, n_clients, seed


def aggregate(models: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """Elementwise weighted average of parameter vectors."""
    if len(models) == 0:
        raise ValueError("cannot aggregate an empty participant set")
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be non-negative and sum to 1")
    stacked = np.vstack(models)
    return weights @ stacked


def apply_deltas(theta: np.ndarray, deltas: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """theta + sum_i w_i * delta_i (the delta form of the aggregation rule)."""
    if len(deltas) == 0:
        raise ValueError("cannot aggregate an empty participant set")
    out = theta.astype(float, copy=True)
    for w, delta in zip(weights, deltas):
        out = out + w * delta
    return out


@dataclass
class GlobalState:
    global_model: LinearRanker
    round_index: int
    history: UpdateHistory
    all_clients: Tuple[int, ...]
    targets: frozenset = frozenset()

    @property
    def remaining(self) -> Tuple[int, ...]:
        return tuple(cid for cid in self.all_clients if cid not in self.targets)


class Federation:
    """Owns the clients, the global state and the per-phase rng scheme."""

    def __init__(self, dataset: Dataset, partitions: Sequence[ClientPartition],
                 profile: ClickProfile, attack: AttackConfig, master_seed: int,
                 lr: float = 0.1, serp_len: int = 10, local_updates: int = 5):
        self.dataset = dataset
        self.profile = profile
        self.attack = attack
        self.master_seed = master_seed
        self.lr = lr
        self.serp_len = serp_len
        self.local_updates = local_updates
        zero = LinearRanker.zeros(dataset.feature_count)
        self.clients: Dict[int, ClientState] = {}
        for partition in partitions:
            client = ClientState(partition.client_id, partition, profile, zero)
            self.clients[partition.client_id] = apply_attack_role(client, attack)
        ids = tuple(sorted(self.clients))
        self.state = GlobalState(zero, 0, UpdateHistory(np.zeros(dataset.feature_count)), ids)
        # every partition access is logged as (salt, round, client_id) so tests
        # can assert strategy isolation
        self.partition_access_log: List[Tuple[int, int, int]] = []

    def clone(self) -> "Federation":
        """Deep copy of the mutable state; the immutable dataset is shared."""
        other = object.__new__(Federation)
        other.__dict__.update(self.__dict__)
        other.clients = {cid: copy.copy(client) for cid, client in self.clients.items()}
        other.state = GlobalState(
            self.state.global_model,
            self.state.round_index,
            UpdateHistory(self.state.history.theta0.copy(), list(self.state.history.records)),
            self.state.all_clients,
            self.state.targets,
        )
        other.partition_access_log = list(self.partition_access_log)
        return other

    def client_rng(self, salt: int, client_id: int, round_index: int) -> np.random.Generator:
        return np.random.default_rng([self.master_seed, salt, client_id, round_index])

    def participants(self) -> Tuple[int, ...]:
        return self.state.remaining

    def normalized_weights(self, client_ids: Sequence[int]) -> np.ndarray:
        counts = np.array([len(self.clients[cid].partition.query_ids) for cid in client_ids], dtype=float)
        return counts / counts.sum()

    def local_train(self, theta: np.ndarray, client: ClientState, rng: np.random.Generator,
                    n_updates: int, salt: int, round_index: int,
                    lr: Optional[float] = None) -> Tuple[np.ndarray, List[float]]:
        """Run n_updates PDGD interactions on queries sampled uniformly with
        replacement from the client's partition; returns the updated weights and
        the nDCG of each displayed SERP against true labels."""
        ranker = LinearRanker(theta.copy())
        qids = client.partition.query_ids
        serp_ndcgs = []
        for _ in range(n_updates):
            qid = qids[int(rng.integers(len(qids)))]
            self.partition_access_log.append((salt, round_index, client.client_id))
            group = self.dataset.train[qid]
            serp = sample_ranking(ranker, group, self.serp_len, rng)
            displayed_rels = group.relevances[serp.doc_indices]
            clicks = simulate_session(client.profile, displayed_rels, rng)
            serp_ndcgs.append(ndcg_at_k(displayed_rels, group.relevances, self.serp_len))
            ranker = pdgd_update(ranker, group, serp, clicks, lr if lr is not None else self.lr)
        return ranker.weights, serp_ndcgs

    def client_contribution(self, theta: np.ndarray, client_id: int, salt: int,
                            round_index: int, apply_poison: bool = True,
                            n_updates: Optional[int] = None):
        """One client's round: local training plus the (possibly poisoned)
        transmitted vector. Pure given the rng derivation, so contributions can
        be computed in any order."""
        client = self.clients[client_id]
        rng = self.client_rng(salt, client_id, round_index)
        local, serp_ndcgs = self.local_train(
            theta, client, rng, n_updates or self.local_updates, salt, round_index)
        sent = local
        if apply_poison and client.role == "model_poisoner":
            sent = poison_update(local, rng, self.attack.gamma_range)
        return sent, local, serp_ndcgs

    def run_round(self, salt: int = SALT_TRAIN, record_history: bool = True,
                  apply_poison: bool = True) -> float:
        """One federated round over the current participants; returns the mean
        displayed-SERP nDCG of the round's interactions."""
        ids = self.participants()
        if not ids:
            raise ValueError("no participating clients")
        t = self.state.round_index + 1
        theta = self.state.global_model.weights
        weights = self.normalized_weights(ids)
        deltas = np.empty((len(ids), len(theta)))
        online = []
        for i, cid in enumerate(ids):
            sent, local, serp_ndcgs = self.client_contribution(theta, cid, salt, t, apply_poison)
            self.clients[cid].local_model = LinearRanker(local)
            deltas[i] = sent - theta
            online.extend(serp_ndcgs)
        new_theta = apply_deltas(theta, deltas, weights)
        if record_history:
            self.state.history.append(RoundRecord(t, ids, weights, deltas))
        self.state.global_model = LinearRanker(new_theta)
        self.state.round_index = t
        return float(np.mean(online))

    def simulate_frozen_round(self, salt: int = SALT_FROZEN) -> float:
        """Sample SERPs under the frozen global model without updating it; used
        for the 'original' baseline's online logging."""
        ids = self.participants()
        if not ids:
            raise ValueError("no participating clients")
        t = self.state.round_index + 1
        online = []
        for cid in ids:
            client = self.clients[cid]
            rng = self.client_rng(salt, cid, t)
            qids = client.partition.query_ids
            for _ in range(self.local_updates):
                qid = qids[int(rng.integers(len(qids)))]
                group = self.dataset.train[qid]
                serp = sample_ranking(self.state.global_model, group, self.serp_len, rng)
                online.append(ndcg_at_k(group.relevances[serp.doc_indices], group.relevances, self.serp_len))
        self.state.round_index = t
        return float(np.mean(online))

    def freeze_targets(self, target_ids: Sequence[int]) -> None:
        """Exclude targets from all subsequent participation; idempotent."""
        targets = self.state.targets | frozenset(target_ids)
        unknown = targets - set(self.state.all_clients)
        if unknown:
            raise ConfigurationError(f"unknown target clients: {sorted(unknown)}")
        if len(targets) == len(self.state.all_clients):
            raise ConfigurationError("cannot freeze every client")
        self.state.targets = targets
