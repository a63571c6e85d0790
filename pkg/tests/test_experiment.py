import json
import math

import numpy as np
import pytest

from foltr_unlearn import cli
from foltr_unlearn.config import (DatasetConfig, ExperimentConfig, desk_preset,
                                  load_config)
from foltr_unlearn.errors import ConfigurationError
from foltr_unlearn.runner import ExperimentRunner, run_experiment
from foltr_unlearn.summarize import summarize, write_summary
from foltr_unlearn.synthetic import make_separable_dataset, make_synthetic_dataset


def tiny_config(**overrides):
    base = dict(
        dataset=DatasetConfig(train_queries=20, test_queries=6, docs_per_query=8,
                              features=5, noise=0.0),
        n_clients=4, local_updates=2, train_rounds=4, unlearn_rounds=4,
        eval_every=2, attack="data_poison", poisoning_rate=0.25,
        seeds=[1], relr_finetune_steps=3,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# --- configuration ---

def test_config_validation_errors():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(n_clients=0).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(lr=-1.0).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(gamma=1.5).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(click_profile="angry").validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(attack="data_poison", poisoning_rate=0.25).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(attack="data_poison", poisoning_rate=1.0).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(strategies=["forget"]).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(seeds=[]).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(dataset=DatasetConfig(kind="letor")).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(dataset=DatasetConfig(margin=-0.1)).validate()


def test_config_target_ids():
    config = ExperimentConfig(attack="model_poison", poisoning_rate=0.3).validate()
    assert config.target_ids() == (0, 1, 2)
    assert ExperimentConfig(attack="none").target_ids() == ()


def test_config_hash_tracks_content():
    a = ExperimentConfig()
    b = ExperimentConfig()
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != ExperimentConfig(lr=0.2).config_hash()


def test_load_config_yaml(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("train_rounds: 7\ndataset:\n  features: 12\n")
    config = load_config(path)
    assert config.train_rounds == 7
    assert config.dataset.features == 12
    assert config.n_clients == 10  # default preserved


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("learning_rate: 0.1\n")
    with pytest.raises(ConfigurationError, match="learning_rate"):
        load_config(path)
    path.write_text("dataset:\n  shards: 3\n")
    with pytest.raises(ConfigurationError, match="dataset.*shards"):
        load_config(path)


def test_load_config_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_config(path).config_hash() == ExperimentConfig().config_hash()
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.yaml")


def test_desk_preset_is_valid():
    config = desk_preset().validate()
    assert config.attack == "data_poison"
    assert len(config.seeds) == 3


# --- synthetic datasets ---

def test_synthetic_dataset_shape_and_grades():
    ds = make_synthetic_dataset(n_train_queries=9, n_test_queries=4, docs_per_query=10,
                                n_features=7, relevance_levels=5, seed=2)
    assert len(ds.train) == 9 and len(ds.test) == 4
    group = next(iter(ds.train.values()))
    assert group.features.shape == (10, 7)
    assert set(np.unique(group.relevances)) <= set(range(5))


def test_synthetic_margin_mode_is_linearly_separated():
    ds = make_synthetic_dataset(n_train_queries=5, n_test_queries=2, docs_per_query=10,
                                n_features=6, margin=0.1, seed=4)
    # same grade histogram in every query, by construction
    histograms = {tuple(np.bincount(g.relevances, minlength=3)) for g in ds.train.values()}
    assert len(histograms) == 1
    # one linear model must rank every query perfectly: recover it by least
    # squares on (features -> grade band midpoints)
    X = np.vstack([g.features for g in ds.train.values()])
    y = np.concatenate([g.relevances for g in ds.train.values()]).astype(float)
    w, *_ = np.linalg.lstsq(X, y, rcond=None)
    for g in list(ds.train.values()) + list(ds.test.values()):
        order = np.argsort(-(g.features @ w), kind="stable")
        assert list(g.relevances[order]) == sorted(g.relevances, reverse=True)


def test_synthetic_datasets_are_seed_deterministic():
    a = make_synthetic_dataset(seed=5)
    b = make_synthetic_dataset(seed=5)
    qid = next(iter(a.train))
    assert np.array_equal(a.train[qid].features, b.train[qid].features)


def test_separable_dataset_rule():
    ds = make_separable_dataset(seed=3)
    assert ds.feature_count == 2
    for group in ds.train.values():
        expected = (group.features[:, 0] > group.features[:, 1]).astype(int)
        assert np.array_equal(group.relevances, expected)


# --- runner ---

@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    run_experiment(tiny_config(), out)
    return out


def test_runner_writes_all_artifacts(run_dir):
    manifest = json.loads((run_dir / "manifest.json").read_text())
    strategies = ["original", "retrain", "finetune", "federaser", "fedremove",
                  "gradient_ascent"]
    for strategy in strategies:
        key = f"Fold1_1_{strategy}"
        assert manifest["runs"][key]["status"] == "complete"
        assert (run_dir / f"Fold1_1_{strategy}.csv").exists()
        assert (run_dir / f"Fold1_1_{strategy}.json").exists()
    assert (run_dir / "Fold1_1_history.bin").exists()


def test_runner_csv_schema(run_dir):
    lines = (run_dir / "Fold1_1_finetune.csv").read_text().splitlines()
    assert lines[0] == "round,phase,strategy,offline_ndcg10,online_ndcg"
    # one row for round 0, one per training round, one per unlearning round
    assert len(lines) == 1 + (4 + 1) + 4
    round0 = lines[1].split(",")
    assert round0[0] == "0" and round0[1] == "train" and round0[4] == ""
    assert round0[3] != ""  # offline eval at round 0
    last_train = lines[5].split(",")
    assert last_train[1] == "train" and last_train[3] != "" and last_train[4] != ""
    unlearn = lines[6].split(",")
    assert unlearn[0] == "5" and unlearn[1] == "unlearn"


def test_runner_json_scalars(run_dir):
    record = json.loads((run_dir / "Fold1_1_federaser.json").read_text())
    assert record["schema"] == 1
    assert record["strategy"] == "federaser"
    assert record["scenario"] == "data_poison"
    assert record["relr_diff"] is not None
    assert len(record["unlearned_model"]) == 5
    assert len(record["final_model"]) == 5
    assert 0.0 <= record["final_offline_ndcg10"] <= 1.0
    original = json.loads((run_dir / "Fold1_1_original.json").read_text())
    assert original["relr_diff"] is None
    assert original["final_offline_ndcg10"] == original["trigger_offline_ndcg10"]


def test_runner_skips_completed_work(run_dir):
    mtimes = {p.name: p.stat().st_mtime_ns for p in run_dir.glob("*.csv")}
    written = run_experiment(tiny_config(), run_dir)
    assert written == []
    assert mtimes == {p.name: p.stat().st_mtime_ns for p in run_dir.glob("*.csv")}


def test_runner_rejects_mismatched_manifest(run_dir):
    with pytest.raises(ConfigurationError):
        ExperimentRunner(tiny_config(train_rounds=5), run_dir)


def test_runner_schedules_retrain_even_if_not_requested(tmp_path):
    config = tiny_config(strategies=["finetune"], relr=False, train_rounds=2,
                         unlearn_rounds=2)
    run_experiment(config, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert "Fold1_1_retrain" in manifest["runs"]
    assert manifest["runs"]["Fold1_1_retrain"]["status"] == "complete"


# --- summarize ---

def test_summarize_means_and_distances(run_dir):
    summary = summarize(run_dir)
    assert summary["n_runs"] == 6
    strategies = summary["strategies"]
    assert strategies["retrain"]["dist_diff"] is None
    for name in ["finetune", "federaser", "fedremove", "gradient_ascent", "original"]:
        assert strategies[name]["dist_diff"] >= 0.0
    assert strategies["finetune"]["n"] == 1


def test_summarize_single_seed_has_no_p_values(run_dir):
    summary = summarize(run_dir)
    assert all(not cells for cells in summary["p_values"].values())


def test_write_summary_files(run_dir, tmp_path):
    out = write_summary(run_dir, tmp_path / "summary.json")
    assert out.exists()
    csv_lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert csv_lines[0].startswith("strategy,")
    assert len(csv_lines) == 1 + 6


def test_summarize_rejects_empty_and_mixed_dirs(tmp_path):
    with pytest.raises(ConfigurationError):
        summarize(tmp_path)
    (tmp_path / "a.json").write_text(json.dumps({"schema": 1, "config_hash": "x",
                                                 "strategy": "retrain", "fold": "f",
                                                 "seed": 1, "scenario": "none",
                                                 "click_profile": "perfect",
                                                 "unlearned_model": [0.0],
                                                 "online_performance_unlearn": 1.0,
                                                 "final_offline_ndcg10": 1.0}))
    (tmp_path / "b.json").write_text(json.dumps({"schema": 1, "config_hash": "y",
                                                 "strategy": "finetune", "fold": "f",
                                                 "seed": 1, "scenario": "none",
                                                 "click_profile": "perfect",
                                                 "unlearned_model": [0.0],
                                                 "online_performance_unlearn": 1.0,
                                                 "final_offline_ndcg10": 1.0}))
    with pytest.raises(ConfigurationError, match="mixed"):
        summarize(tmp_path)


# --- command line ---

def test_cli_run_and_summarize(tmp_path):
    config_path = tmp_path / "exp.yaml"
    config_path.write_text(
        "dataset:\n  train_queries: 20\n  test_queries: 6\n  docs_per_query: 8\n"
        "  features: 5\n  noise: 0.0\n"
        "n_clients: 4\nlocal_updates: 2\ntrain_rounds: 2\nunlearn_rounds: 2\n"
        "eval_every: 2\nattack: data_poison\npoisoning_rate: 0.25\n"
        "seeds: [1]\nrelr_finetune_steps: 2\nstrategies: [finetune]\n")
    out_dir = tmp_path / "out"
    assert cli.main(["run", "--config", str(config_path), "--out", str(out_dir)]) == 0
    assert (out_dir / "manifest.json").exists()
    assert cli.main(["summarize", "--in", str(out_dir)]) == 0
    assert (out_dir / "summary.json").exists()


def test_cli_reports_configuration_errors(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("lr: -3\n")
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert cli.main(["summarize", "--in", str(tmp_path / "nothing")]) == 2
