"""Configuration-driven experiment runner.

For every (fold, seed): phase 1 trains with attack roles active, the trigger
freezes the target clients (after folding the Relevancy-Reset probes into the
aggregation), and phase 2 runs each unlearning strategy from a clone of the
trigger-time state. An "original" trace (poisoned model frozen) is always
logged as the comparison baseline. Logs are a CSV per run plus a JSON of
final scalars; the manifest records run status so re-runs skip completed
work.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .attacks import AttackConfig
from .clicks import make_profile
from .config import DatasetConfig, ExperimentConfig
from .data import Dataset, QueryGroup, load_dataset, normalize_features, partition_clients
from .errors import ConfigurationError
from .federation import SALT_RELR, Federation, aggregate, save_history
from .metrics import (RelabeledSubset, ndcg_at_k, offline_eval, online_performance,
                      relr_diff, relr_prepare)
from .ranker import LinearRanker, pdgd_update, sample_ranking
from .clicks import simulate_session
from .synthetic import make_synthetic_dataset
from .unlearning import UnlearnPlan, run_strategy


def _fmt(value: Optional[float]) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value))


def build_fold_dataset(config: ExperimentConfig, fold_index: int, fold_name: str) -> Dataset:
    ds = config.dataset
    if ds.kind == "synthetic":
        dataset = make_synthetic_dataset(
            n_train_queries=ds.train_queries, n_test_queries=ds.test_queries,
            docs_per_query=ds.docs_per_query, n_features=ds.features,
            relevance_levels=ds.relevance_levels, noise=ds.noise,
            margin=ds.margin, seed=ds.dataset_seed + fold_index)
    else:
        fold_dir = Path(ds.path) / fold_name
        dataset = load_dataset(fold_dir / "train.txt", fold_dir / "test.txt", ds.relevance_levels)
    if ds.normalize:
        dataset = normalize_features(dataset)
    return dataset


def _relr_fold(fed: Federation, config: ExperimentConfig, targets) -> RelabeledSubset:
    """RelR protocol at the trigger: relabel each target's high-loss queries by
    its local model's ranking, fine-tune the local model on them, and fold the
    fine-tuned models into one aggregation before unlearning."""
    perfect = make_profile("perfect", fed.dataset.relevance_levels)
    probe_models: Dict[int, np.ndarray] = {}
    merged_qids: List[str] = []
    merged_features = []
    merged_labels = []
    for cid in sorted(targets):
        client = fed.clients[cid]
        groups = {qid: fed.dataset.train[qid] for qid in client.partition.query_ids}
        subset = relr_prepare(groups, client.local_model, fed.dataset.relevance_levels,
                              config.relr_k_percent, k=config.serp_len)
        merged_qids.extend(subset.query_ids)
        merged_features.extend(subset.features)
        merged_labels.extend(subset.modified_labels)
        rng = fed.client_rng(SALT_RELR, cid, 0)
        ranker = client.local_model
        for _ in range(config.relr_finetune_steps):
            i = int(rng.integers(len(subset.query_ids)))
            group = QueryGroup(subset.query_ids[i], subset.features[i].copy(),
                               subset.modified_labels[i].copy())
            serp = sample_ranking(ranker, group, fed.serp_len, rng)
            clicks = simulate_session(perfect, group.relevances[serp.doc_indices], rng)
            ranker = pdgd_update(ranker, group, serp, clicks, fed.lr)
        probe_models[cid] = ranker.weights
    ids = sorted(fed.clients)
    weights = fed.normalized_weights(ids)
    models = [probe_models.get(cid, fed.clients[cid].local_model.weights) for cid in ids]
    fed.state.global_model = LinearRanker(aggregate(models, weights))
    return RelabeledSubset(tuple(merged_qids), tuple(merged_features), tuple(merged_labels))


def _offline_at(round_index: int, final_round: int, eval_every: int) -> bool:
    return round_index % eval_every == 0 or round_index == final_round


def _write_csv(path: Path, strategy: str, train_rows, unlearn_rows) -> None:
    lines = ["round,phase,strategy,offline_ndcg10,online_ndcg"]
    for round_index, offline, online in train_rows:
        lines.append(f"{round_index},train,{strategy},{_fmt(offline)},{_fmt(online)}")
    for round_index, offline, online in unlearn_rows:
        lines.append(f"{round_index},unlearn,{strategy},{_fmt(offline)},{_fmt(online)}")
    path.write_text("\n".join(lines) + "\n")


class ExperimentRunner:
    def __init__(self, config: ExperimentConfig, out_dir):
        self.config = config.validate()
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.out_dir / "manifest.json"
        self.manifest = self._load_or_create_manifest()

    def _run_keys(self) -> List[Tuple[str, int, str]]:
        strategies = list(self.config.strategies)
        if "retrain" not in strategies:
            # retraining is the pairing baseline for distance-based metrics
            strategies.append("retrain")
        keys = []
        for fold in self.config.dataset.folds:
            for seed in self.config.seeds:
                for strategy in ["original", *strategies]:
                    keys.append((fold, seed, strategy))
        return keys

    def _load_or_create_manifest(self) -> dict:
        if self.manifest_path.exists():
            manifest = json.loads(self.manifest_path.read_text())
            if manifest.get("config_hash") != self.config.config_hash():
                raise ConfigurationError(
                    f"{self.manifest_path}: existing manifest was produced by a different configuration")
            return manifest
        manifest = {
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
            "runs": {
                f"{fold}_{seed}_{strategy}": {
                    "status": "pending",
                    "csv": f"{fold}_{seed}_{strategy}.csv",
                    "json": f"{fold}_{seed}_{strategy}.json",
                }
                for fold, seed, strategy in self._run_keys()
            },
        }
        self.manifest_path.write_text(json.dumps(manifest, indent=2))
        return manifest

    def _save_manifest(self) -> None:
        self.manifest_path.write_text(json.dumps(self.manifest, indent=2))

    def run(self) -> List[Path]:
        written: List[Path] = []
        for fold_index, fold in enumerate(self.config.dataset.folds):
            for seed in self.config.seeds:
                written.extend(self._run_fold_seed(fold_index, fold, seed))
        return written

    def _run_fold_seed(self, fold_index: int, fold: str, seed: int) -> List[Path]:
        config = self.config
        strategies = ["original", *[k[2] for k in self._run_keys()
                                    if k[0] == fold and k[1] == seed and k[2] != "original"]]
        pending = [s for s in strategies
                   if self.manifest["runs"][f"{fold}_{seed}_{s}"]["status"] != "complete"]
        if not pending:
            return []

        dataset = build_fold_dataset(config, fold_index, fold)
        partitions = partition_clients(dataset, config.n_clients, seed)
        attack = AttackConfig(config.attack, config.target_ids()) if config.attack != "none" \
            else AttackConfig("none")
        profile = make_profile(config.click_profile, dataset.relevance_levels)
        fed = Federation(dataset, partitions, profile, attack, master_seed=seed,
                         lr=config.lr, serp_len=config.serp_len, local_updates=config.local_updates)

        # phase 1: federated training with attack roles active
        train_rows = [(0, offline_eval(fed.state.global_model, dataset.test), None)]
        train_online: List[float] = []
        for t in range(1, config.train_rounds + 1):
            online = fed.run_round()
            train_online.append(online)
            offline = offline_eval(fed.state.global_model, dataset.test) \
                if _offline_at(t, config.train_rounds, config.eval_every) else None
            train_rows.append((t, offline, online))

        relr_subset = None
        targets = config.target_ids()
        if targets and config.relr:
            relr_subset = _relr_fold(fed, config, targets)
        baseline = fed.clone()  # all clients, trigger-time model: the "original" line
        if targets:
            fed.freeze_targets(targets)
        save_history(fed.state.history, self.out_dir / f"{fold}_{seed}_history.bin",
                     config.n_clients, seed)

        trigger_model = fed.state.global_model
        trigger_offline = offline_eval(trigger_model, dataset.test)
        written = []
        for strategy in pending:
            key = f"{fold}_{seed}_{strategy}"
            start = time.monotonic()
            if strategy == "original":
                unlearn_rows, scalars = self._run_original(baseline, trigger_offline, dataset)
            else:
                unlearn_rows, scalars = self._run_strategy(fed, strategy, dataset, relr_subset)
            scalars.update({
                "schema": 1,
                "strategy": strategy,
                "fold": fold,
                "seed": seed,
                "scenario": config.attack,
                "click_profile": config.click_profile,
                "config_hash": config.config_hash(),
                "train_rounds": config.train_rounds,
                "unlearn_rounds": config.unlearn_rounds,
                "gamma": config.gamma,
                "trigger_offline_ndcg10": trigger_offline,
                "online_performance_train": online_performance(train_online, config.gamma),
                "ndcg_form": "gain 2^rel-1, discount log2(i+1)",
            })
            csv_path = self.out_dir / self.manifest["runs"][key]["csv"]
            json_path = self.out_dir / self.manifest["runs"][key]["json"]
            _write_csv(csv_path, strategy, train_rows, unlearn_rows)
            json_path.write_text(json.dumps(scalars, indent=2, sort_keys=True))
            self.manifest["runs"][key]["status"] = "complete"
            self.manifest["runs"][key]["seconds"] = round(time.monotonic() - start, 3)
            self._save_manifest()
            written.extend([csv_path, json_path])
        return written

    def _run_original(self, baseline: Federation, trigger_offline: float, dataset: Dataset):
        """Frozen poisoned model: constant offline curve, online logged from
        freshly sampled SERPs without model updates."""
        config = self.config
        rows = []
        online_values = []
        fed = baseline.clone()
        for u in range(1, config.unlearn_rounds + 1):
            online = fed.simulate_frozen_round()
            online_values.append(online)
            offline = trigger_offline if _offline_at(u, config.unlearn_rounds, config.eval_every) else None
            rows.append((config.train_rounds + u, offline, online))
        model = baseline.state.global_model.weights
        scalars = {
            "online_performance_unlearn": online_performance(online_values, config.gamma),
            "final_offline_ndcg10": trigger_offline,
            "relr_diff": None,
            "unlearned_model": list(model),
            "final_model": list(model),
        }
        return rows, scalars

    def _run_strategy(self, fed: Federation, strategy: str, dataset: Dataset,
                      relr_subset: Optional[RelabeledSubset]):
        config = self.config
        plan = UnlearnPlan(
            strategy,
            unlearn_rounds=config.unlearn_rounds,
            ascent_lr=config.ascent_lr,
            ascent_steps=config.ascent_steps,
            ball_radius=config.ball_radius,
            calibration_local_updates=config.calibration_local_updates,
        )
        trace = run_strategy(fed, fed.state.history, plan)
        rows = []
        for u in range(1, config.unlearn_rounds + 1):
            offline = offline_eval(LinearRanker(trace.models[u].copy()), dataset.test) \
                if _offline_at(u, config.unlearn_rounds, config.eval_every) else None
            rows.append((config.train_rounds + u, offline, trace.online[u - 1]))
        final_offline = offline_eval(LinearRanker(trace.final_model.copy()), dataset.test)
        relr = None
        if relr_subset is not None and relr_subset.query_ids:
            relr = relr_diff(fed.state.global_model, LinearRanker(trace.core_model.copy()),
                             relr_subset, k=config.serp_len)
        scalars = {
            "online_performance_unlearn": online_performance(trace.online, config.gamma),
            "final_offline_ndcg10": final_offline,
            "relr_diff": relr,
            "unlearned_model": list(trace.core_model),
            "final_model": list(trace.final_model),
        }
        return rows, scalars


def run_experiment(config: ExperimentConfig, out_dir) -> List[Path]:
    return ExperimentRunner(config, out_dir).run()
