"""Summary tables over a directory of run logs.

Aggregates per-strategy means of online performance, final offline nDCG@10,
RelR Diff and Dist Diff across (fold, seed) pairs, plus paired t-test
p-values between every pair of strategies. Dist Diff pairs each strategy's
unlearned model with the retrain run sharing (fold, seed).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigurationError
from .metrics import l2_distance, paired_t_test

METRICS = ("online_performance_unlearn", "final_offline_ndcg10", "relr_diff", "dist_diff")


def _load_runs(run_dir: Path) -> List[dict]:
    runs = []
    for path in sorted(run_dir.glob("*.json")):
        if path.name in ("manifest.json", "summary.json"):
            continue
        record = json.loads(path.read_text())
        if record.get("schema") != 1:
            continue
        runs.append(record)
    if not runs:
        raise ConfigurationError(f"no completed runs found in {run_dir}")
    hashes = {run["config_hash"] for run in runs}
    if len(hashes) > 1:
        raise ConfigurationError(f"mixed configurations in {run_dir}: {sorted(hashes)}")
    return runs


def _mean(values: List[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def summarize(run_dir) -> dict:
    run_dir = Path(run_dir)
    runs = _load_runs(run_dir)
    retrain_models: Dict[Tuple[str, int], List[float]] = {
        (run["fold"], run["seed"]): run["unlearned_model"]
        for run in runs if run["strategy"] == "retrain"
    }
    by_strategy: Dict[str, Dict[Tuple[str, int], dict]] = {}
    for run in runs:
        values = {
            "online_performance_unlearn": run["online_performance_unlearn"],
            "final_offline_ndcg10": run["final_offline_ndcg10"],
            "relr_diff": run.get("relr_diff"),
            "dist_diff": None,
        }
        if run["strategy"] != "retrain":
            retrain = retrain_models.get((run["fold"], run["seed"]))
            if retrain is not None:
                values["dist_diff"] = l2_distance(run["unlearned_model"], retrain)
        by_strategy.setdefault(run["strategy"], {})[(run["fold"], run["seed"])] = values

    strategies = sorted(by_strategy)
    summary = {
        "config_hash": runs[0]["config_hash"],
        "scenario": runs[0]["scenario"],
        "click_profile": runs[0]["click_profile"],
        "n_runs": len(runs),
        "strategies": {},
        "p_values": {metric: {} for metric in METRICS},
    }
    for strategy in strategies:
        cells = by_strategy[strategy]
        summary["strategies"][strategy] = {
            metric: _mean([cell[metric] for cell in cells.values()]) for metric in METRICS
        }
        summary["strategies"][strategy]["n"] = len(cells)
    for metric in METRICS:
        for i, a in enumerate(strategies):
            for b in strategies[i + 1:]:
                shared = sorted(set(by_strategy[a]) & set(by_strategy[b]))
                values_a = [by_strategy[a][key][metric] for key in shared]
                values_b = [by_strategy[b][key][metric] for key in shared]
                if (len(shared) < 2 or any(v is None for v in values_a)
                        or any(v is None for v in values_b)):
                    continue
                _, p = paired_t_test(values_a, values_b)
                summary["p_values"][metric][f"{a}|{b}"] = p
    return summary


def write_summary(run_dir, out_path=None) -> Path:
    run_dir = Path(run_dir)
    summary = summarize(run_dir)
    out_path = Path(out_path) if out_path else run_dir / "summary.json"
    out_path.write_text(json.dumps(summary, indent=2, sort_keys=True))
    csv_path = out_path.with_suffix(".csv")
    lines = ["strategy," + ",".join(METRICS)]
    for strategy, cells in sorted(summary["strategies"].items()):
        row = [strategy]
        for metric in METRICS:
            value = cells[metric]
            row.append("" if value is None else repr(value))
        lines.append(",".join(row))
    csv_path.write_text("\n".join(lines) + "\n")
    return out_path
