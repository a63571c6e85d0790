"""Offline-nDCG learning curves: one panel per click profile, one line per
strategy, with the unlearning trigger marked at the train/unlearn boundary."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .loading import ReportInputError, RunLog, load_runs

STRATEGY_ORDER = ("original", "retrain", "finetune", "federaser", "fedremove",
                  "gradient_ascent")
STRATEGY_LABELS = {
    "original": "Original",
    "retrain": "Retrain",
    "finetune": "Fine-tuning",
    "federaser": "FedEraser",
    "fedremove": "FedRemove",
    "gradient_ascent": "Gradient Ascent",
}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: which scenario, click profiles and strategies, and where
    to write the image. `None` selections mean "everything found in the logs"."""

    output_path: str
    scenario: Optional[str] = None
    click_profiles: Optional[Tuple[str, ...]] = None
    strategies: Optional[Tuple[str, ...]] = None


def _ordered(strategies: Sequence[str]) -> List[str]:
    known = [s for s in STRATEGY_ORDER if s in strategies]
    return known + sorted(set(strategies) - set(known))


def _mean_curve(runs: List[RunLog]) -> Tuple[np.ndarray, np.ndarray]:
    """Average the offline values of multiple (fold, seed) runs per round."""
    buckets: Dict[int, List[float]] = {}
    for run in runs:
        for round_index, value in zip(run.offline_rounds, run.offline_values):
            buckets.setdefault(round_index, []).append(value)
    rounds = np.array(sorted(buckets))
    values = np.array([np.mean(buckets[r]) for r in rounds])
    return rounds, values


def render_curves(spec: FigureSpec, run_dir) -> Path:
    """Render the learning-curve figure from a run directory and return the
    written path. Strategies requested but absent from the logs are listed on
    stderr and skipped."""
    runs = load_runs(run_dir)
    if spec.scenario is not None:
        scenarios = {run.scenario for run in runs}
        if spec.scenario not in scenarios:
            raise ReportInputError(
                f"scenario {spec.scenario!r} not in logs (found: {sorted(scenarios)})")
        runs = [run for run in runs if run.scenario == spec.scenario]

    profiles = sorted({run.click_profile for run in runs})
    if spec.click_profiles is not None:
        missing = set(spec.click_profiles) - set(profiles)
        if missing:
            raise ReportInputError(
                f"click profiles {sorted(missing)} not in logs (found: {profiles})")
        profiles = [p for p in profiles if p in spec.click_profiles]

    available = {run.strategy for run in runs}
    wanted = _ordered(available if spec.strategies is None else spec.strategies)
    skipped = [s for s in wanted if s not in available]
    if skipped:
        print(f"warning: no logs for strategies {', '.join(skipped)}; skipped",
              file=sys.stderr)
    wanted = [s for s in wanted if s in available]
    if not wanted:
        raise ReportInputError("none of the requested strategies have logs")

    fig, axes = plt.subplots(1, len(profiles),
                             figsize=(6.0 * len(profiles), 4.2),
                             squeeze=False, sharey=True)
    for ax, profile in zip(axes[0], profiles):
        profile_runs = [run for run in runs if run.click_profile == profile]
        trigger = max(run.trigger_round for run in profile_runs)
        total = max(run.total_rounds for run in profile_runs)
        for strategy in wanted:
            strategy_runs = [run for run in profile_runs if run.strategy == strategy]
            if not strategy_runs:
                continue
            rounds, values = _mean_curve(strategy_runs)
            ax.plot(rounds, values, label=STRATEGY_LABELS.get(strategy, strategy))
        ax.axvline(trigger, color="grey", linestyle="--", linewidth=1.0)
        ax.set_xlim(0, total)
        ax.set_xlabel("round")
        ax.set_title(profile)
    axes[0][0].set_ylabel("offline nDCG@10")
    axes[0][0].legend(loc="lower right", fontsize="small")
    fig.tight_layout()

    out_path = Path(spec.output_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    # suppress the creation-software PNG metadata so reruns are byte-identical
    fig.savefig(out_path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return out_path
