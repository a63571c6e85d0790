"""Shared builders for hand-written run directories.

The builders write only the documented file formats (curve CSVs, scalar
JSONs, manifest, summary), so the tests exercise the report tool exactly the
way real run directories do, without running the simulator.
"""

import json
from pathlib import Path

import pytest

HEADER = "round,phase,strategy,offline_ndcg10,online_ndcg"


def write_run(run_dir: Path, fold: str, seed: int, strategy: str, *,
              train_offline, unlearn_offline, scenario="data_poison",
              click_profile="perfect", config_hash="cfg0", scalars=None):
    """Write one run's CSV curve and JSON scalars.

    `train_offline` values occupy rounds 0..len-1 (phase `train`),
    `unlearn_offline` the following rounds (phase `unlearn`).
    """
    lines = [HEADER]
    for i, value in enumerate(train_offline):
        lines.append(f"{i},train,{strategy},{value},0.5")
    trigger = len(train_offline) - 1
    for j, value in enumerate(unlearn_offline, start=1):
        lines.append(f"{trigger + j},unlearn,{strategy},{value},0.5")
    stem = f"{fold}_{seed}_{strategy}"
    (run_dir / f"{stem}.csv").write_text("\n".join(lines) + "\n")
    record = {
        "schema": 1, "fold": fold, "seed": seed, "strategy": strategy,
        "scenario": scenario, "click_profile": click_profile,
        "config_hash": config_hash,
        "online_performance_unlearn": 1.0, "final_offline_ndcg10": unlearn_offline[-1],
        "relr_diff": None, "dist_diff": None,
    }
    record.update(scalars or {})
    (run_dir / f"{stem}.json").write_text(json.dumps(record))


def write_summary(run_dir: Path, strategies: dict, p_values=None, *,
                  scenario="data_poison", click_profile="perfect"):
    """Write a summary.json with the given per-strategy metric means."""
    metrics = ("online_performance_unlearn", "final_offline_ndcg10",
               "relr_diff", "dist_diff")
    cells = {}
    for name, values in strategies.items():
        cells[name] = {m: values.get(m) for m in metrics}
        cells[name]["n"] = values.get("n", 1)
    summary = {
        "config_hash": "cfg0", "scenario": scenario, "click_profile": click_profile,
        "n_runs": len(strategies), "strategies": cells,
        "p_values": p_values or {m: {} for m in metrics},
    }
    (run_dir / "summary.json").write_text(json.dumps(summary))


def write_manifest(run_dir: Path, dataset=None):
    dataset = dataset or {"kind": "synthetic"}
    (run_dir / "manifest.json").write_text(
        json.dumps({"config_hash": "cfg0", "config": {"dataset": dataset}, "runs": {}}))


@pytest.fixture
def six_line_dir(tmp_path):
    """A run directory with the original baseline plus five strategies, two seeds."""
    run_dir = tmp_path / "runs"
    run_dir.mkdir()
    strategies = ["original", "retrain", "finetune", "federaser", "fedremove",
                  "gradient_ascent"]
    for seed in (1, 2):
        for i, strategy in enumerate(strategies):
            final = 0.5 if strategy == "original" else 0.9 + 0.01 * i
            write_run(run_dir, "synthetic", seed, strategy,
                      train_offline=[0.1, 0.3, 0.5],
                      unlearn_offline=[0.6, final])
    write_manifest(run_dir)
    return run_dir
