"""The five federated unlearning strategies.

Each strategy starts from a federation whose target clients have been frozen
and produces a trace of per-round global models: the model after every
unlearning round, plus the online nDCG of any user-facing interactions
(NaN for server-only or target-side rounds). `core_model` is the model
immediately after the strategy's core step; it is what distance-based
over-unlearning comparisons use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigurationError, StrategyError
from .federation import (SALT_ASCENT, SALT_CALIBRATE, SALT_RETRAIN,
                         SALT_UNLEARN, Federation, UpdateHistory, GlobalState,
                         apply_deltas)
from .ranker import LinearRanker

STRATEGIES = ("retrain", "finetune", "federaser", "fedremove", "gradient_ascent")


@dataclass(frozen=True)
class UnlearnPlan:
    strategy: str
    unlearn_rounds: int = 1000
    ascent_lr: float = 0.01
    ascent_steps: int = 50
    ball_radius: Optional[float] = None       # default: mean distance to the reference model
    calibration_local_updates: Optional[int] = None  # default: the training E

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown strategy {self.strategy!r}")
        if self.unlearn_rounds < 1:
            raise ConfigurationError("unlearn_rounds must be >= 1")
        if self.ascent_lr <= 0:
            raise ConfigurationError("ascent_lr must be positive")
        if self.ball_radius is not None and self.ball_radius <= 0:
            raise ConfigurationError("ball_radius must be positive")


@dataclass
class UnlearnedTrace:
    strategy: str
    models: List[np.ndarray]        # [0] = starting snapshot, then one per round
    online: List[float]             # per round; NaN when no user-facing ranking
    core_model: np.ndarray          # model right after the strategy's core step
    federation: Federation = field(repr=False, default=None)

    @property
    def final_model(self) -> np.ndarray:
        return self.models[-1]


def calibrate_update(new_delta: np.ndarray, historical_delta: np.ndarray) -> np.ndarray:
    """Rescale the fresh update to the historical update's l2 norm."""
    if new_delta.shape != historical_delta.shape:
        raise ValueError("delta dimensions differ")
    norm_new = float(np.linalg.norm(new_delta))
    if norm_new == 0.0:
        return np.zeros_like(new_delta)
    return new_delta / norm_new * float(np.linalg.norm(historical_delta))


def project_l2_ball(point: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    if radius <= 0:
        raise ValueError("radius must be positive")
    offset = point - center
    norm = float(np.linalg.norm(offset))
    if norm <= radius:
        return point
    return center + offset * (radius / norm)


def _continue_standard(fed: Federation, n_rounds: int, salt: int,
                       models: List[np.ndarray], online: List[float]) -> None:
    for _ in range(n_rounds):
        online.append(fed.run_round(salt=salt, record_history=False))
        models.append(fed.state.global_model.weights)


def unlearn_retrain(fed: Federation, plan: UnlearnPlan) -> UnlearnedTrace:
    """Restart training from theta_0 = 0 with the remaining clients and fresh
    rng streams (never the historical interactions)."""
    if not fed.state.remaining:
        raise StrategyError("no remaining clients to retrain with")
    run = fed.clone()
    zero = LinearRanker.zeros(run.dataset.feature_count)
    run.state = GlobalState(zero, 0, UpdateHistory(np.zeros(run.dataset.feature_count)),
                            run.state.all_clients, run.state.targets)
    models = [zero.weights]
    online: List[float] = []
    _continue_standard(run, plan.unlearn_rounds, SALT_RETRAIN, models, online)
    return UnlearnedTrace("retrain", models, online, models[-1], run)


def unlearn_finetune(fed: Federation, plan: UnlearnPlan) -> UnlearnedTrace:
    """Continue standard federated rounds from the current global model with
    the remaining clients only; the exact run_round code path."""
    run = fed.clone()
    models = [run.state.global_model.weights]
    online: List[float] = []
    _continue_standard(run, plan.unlearn_rounds, SALT_UNLEARN, models, online)
    return UnlearnedTrace("finetune", models, online, models[-1], run)


def unlearn_federaser(fed: Federation, history: UpdateHistory, plan: UnlearnPlan) -> UnlearnedTrace:
    """Replay the stored rounds from theta_0, with each remaining client's fresh
    update rescaled to its stored update's norm before aggregation."""
    if len(history) == 0:
        raise StrategyError("federaser requires a stored update history")
    run = fed.clone()
    remaining = set(run.state.remaining)
    n_updates = plan.calibration_local_updates or run.local_updates
    theta = history.theta0.copy()
    models = [fed.state.global_model.weights]
    online: List[float] = []
    replayed = 0
    for record in history.records[: plan.unlearn_rounds]:
        ids = [cid for cid in record.client_ids if cid in remaining]
        if not ids:
            raise StrategyError(f"round {record.round_index}: no remaining participants in history")
        stored = {cid: i for i, cid in enumerate(record.client_ids)}
        weights = np.array([record.weights[stored[cid]] for cid in ids])
        weights = weights / weights.sum()
        deltas = []
        round_online = []
        for cid in ids:
            sent, _, serp_ndcgs = run.client_contribution(
                theta, cid, SALT_CALIBRATE, record.round_index,
                apply_poison=False, n_updates=n_updates)
            deltas.append(calibrate_update(sent - theta, record.deltas[stored[cid]]))
            round_online.extend(serp_ndcgs)
        theta = apply_deltas(theta, deltas, weights)
        models.append(theta)
        online.append(float(np.mean(round_online)))
        replayed += 1
    core = theta
    run.state.global_model = LinearRanker(theta.copy())
    run.state.round_index = fed.state.round_index + replayed
    _continue_standard(run, plan.unlearn_rounds - replayed, SALT_UNLEARN, models, online)
    return UnlearnedTrace("federaser", models, online, core, run)


def unlearn_fedremove(fed: Federation, history: UpdateHistory, plan: UnlearnPlan) -> UnlearnedTrace:
    """Server-only replay of the remaining clients' stored deltas from theta_0;
    no client computation during the replay. Standard rounds follow only to
    produce per-round curves of the same length as the other strategies."""
    if len(history) == 0:
        raise StrategyError("fedremove requires a stored update history")
    remaining = set(fed.state.remaining)
    if not remaining:
        raise StrategyError("no remaining clients")
    theta = history.theta0.copy()
    models = [fed.state.global_model.weights]
    online: List[float] = []
    replayed = 0
    for record in history.records[: plan.unlearn_rounds]:
        ids = [cid for cid in record.client_ids if cid in remaining]
        if not ids:
            raise StrategyError(f"round {record.round_index}: no remaining participants in history")
        stored = {cid: i for i, cid in enumerate(record.client_ids)}
        weights = np.array([record.weights[stored[cid]] for cid in ids])
        weights = weights / weights.sum()
        deltas = [record.deltas[stored[cid]] for cid in ids]
        theta = apply_deltas(theta, deltas, weights)
        models.append(theta)
        online.append(math.nan)
        replayed += 1
    core = theta
    run = fed.clone()
    run.state.global_model = LinearRanker(theta.copy())
    run.state.round_index = fed.state.round_index + replayed
    _continue_standard(run, plan.unlearn_rounds - replayed, SALT_UNLEARN, models, online)
    return UnlearnedTrace("fedremove", models, online, core, run)


def unlearn_gradient_ascent(fed: Federation, plan: UnlearnPlan) -> UnlearnedTrace:
    """Target clients ascend their own pairwise objective from the trigger-time
    global model, each step projected onto an l2 ball around the average of the
    remaining clients' models; the target results are averaged into theta_u."""
    targets = sorted(fed.state.targets)
    if not targets:
        raise StrategyError("gradient ascent requires target clients")
    remaining = fed.state.remaining
    if not remaining:
        raise StrategyError("no remaining clients for the reference model")
    run = fed.clone()
    reference = np.mean([run.clients[cid].local_model.weights for cid in remaining], axis=0)
    if plan.ball_radius is not None:
        radius = plan.ball_radius
    else:
        distances = [float(np.linalg.norm(run.clients[cid].local_model.weights - reference))
                     for cid in remaining]
        radius = float(np.mean(distances))
        if radius == 0.0:
            radius = 1e-6
    trigger = run.state.global_model.weights
    unlearned = []
    for cid in targets:
        client = run.clients[cid]
        theta = trigger.copy()
        for step in range(1, plan.ascent_steps + 1):
            rng = run.client_rng(SALT_ASCENT, cid, step)
            ascended, _ = run.local_train(theta, client, rng, 1, SALT_ASCENT, step, lr=plan.ascent_lr)
            # negate the PDGD direction: ascend the pairwise objective
            theta = project_l2_ball(theta - (ascended - theta), reference, radius)
        unlearned.append(theta)
    theta_u = np.mean(unlearned, axis=0)
    models = [trigger, theta_u]
    online: List[float] = [math.nan]
    run.state.global_model = LinearRanker(theta_u.copy())
    run.state.round_index = fed.state.round_index + 1
    _continue_standard(run, plan.unlearn_rounds - 1, SALT_UNLEARN, models, online)
    return UnlearnedTrace("gradient_ascent", models, online, theta_u, run)


def run_strategy(fed: Federation, history: UpdateHistory, plan: UnlearnPlan) -> UnlearnedTrace:
    if plan.strategy == "retrain":
        return unlearn_retrain(fed, plan)
    if plan.strategy == "finetune":
        return unlearn_finetune(fed, plan)
    if plan.strategy == "federaser":
        return unlearn_federaser(fed, history, plan)
    if plan.strategy == "fedremove":
        return unlearn_fedremove(fed, history, plan)
    return unlearn_gradient_ascent(fed, plan)
