"""Read-only access to a run directory's documented file formats.

A run directory holds, per (fold, seed, strategy):
  - `<fold>_<seed>_<strategy>.csv` with header
    `round,phase,strategy,offline_ndcg10,online_ndcg` (empty cells for
    rounds without an offline evaluation or without user-facing rankings),
  - `<fold>_<seed>_<strategy>.json` with `"schema": 1` scalar records,
plus an optional `manifest.json` (configuration echo) and, after
summarisation, `summary.json` (per-strategy means and pairwise p-values).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple


class ReportInputError(Exception):
    """The run directory is missing files or mixes configurations."""


@dataclass(frozen=True)
class RunLog:
    """One strategy's curve and scalars for a single (fold, seed)."""

    fold: str
    seed: int
    strategy: str
    scenario: str
    click_profile: str
    config_hash: str
    offline_rounds: Tuple[int, ...]   # rounds with an offline evaluation
    offline_values: Tuple[float, ...]
    trigger_round: int                # last round of the training phase
    total_rounds: int


def _parse_csv(path: Path) -> Tuple[Tuple[int, ...], Tuple[float, ...], int, int]:
    rounds: List[int] = []
    values: List[float] = []
    trigger = 0
    total = 0
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            round_index = int(row["round"])
            total = max(total, round_index)
            if row["phase"] == "train":
                trigger = max(trigger, round_index)
            if row["offline_ndcg10"]:
                rounds.append(round_index)
                values.append(float(row["offline_ndcg10"]))
    return tuple(rounds), tuple(values), trigger, total


def load_runs(run_dir) -> List[RunLog]:
    """Load every completed run in the directory; error on empty or mixed dirs."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ReportInputError(f"{run_dir} is not a directory")
    runs: List[RunLog] = []
    for json_path in sorted(run_dir.glob("*.json")):
        if json_path.name in ("manifest.json", "summary.json"):
            continue
        record = json.loads(json_path.read_text())
        if record.get("schema") != 1:
            continue
        csv_path = json_path.with_suffix(".csv")
        if not csv_path.exists():
            raise ReportInputError(f"{json_path.name} has no matching curve file {csv_path.name}")
        rounds, values, trigger, total = _parse_csv(csv_path)
        runs.append(RunLog(
            fold=str(record["fold"]), seed=int(record["seed"]),
            strategy=record["strategy"], scenario=record["scenario"],
            click_profile=record["click_profile"], config_hash=record["config_hash"],
            offline_rounds=rounds, offline_values=values,
            trigger_round=trigger, total_rounds=total))
    if not runs:
        raise ReportInputError(f"no completed runs found in {run_dir}")
    hashes = {run.config_hash for run in runs}
    if len(hashes) > 1:
        raise ReportInputError(f"mixed configurations in {run_dir}: {sorted(hashes)}")
    return runs


def dataset_label(run_dir) -> str:
    """Human-readable dataset name from the manifest, if one is present."""
    manifest_path = Path(run_dir) / "manifest.json"
    if not manifest_path.exists():
        return "dataset"
    dataset = json.loads(manifest_path.read_text()).get("config", {}).get("dataset", {})
    if dataset.get("kind") == "letor" and dataset.get("path"):
        return Path(dataset["path"]).name
    return dataset.get("kind", "dataset")


def load_summary(run_dir) -> dict:
    summary_path = Path(run_dir) / "summary.json"
    if not summary_path.exists():
        raise ReportInputError(
            f"{summary_path} not found; produce it with the simulator's summarize command")
    return json.loads(summary_path.read_text())
