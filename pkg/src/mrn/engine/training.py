"""Episodic meta-training: one Adam step per sampled episode."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..episodes import SplitDataset, episode_rng, sample_episode
from ..errors import NumericError
from ..numerics import AdamState, adam_step, backward
from .config import RunConfig
from .model import Checkpoint, MRNModel

log = logging.getLogger(__name__)


class TrainingDiverged(NumericError):
    def __init__(self, message: str, episode: int, seed: int):
        super().__init__(message)
        self.episode = episode
        self.seed = seed


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    losses: list[float] = field(default_factory=list)
    lrs: list[float] = field(default_factory=list)


def train(
    config: RunConfig,
    data: SplitDataset,
    checkpoint_path=None,
    callback: Callable[[int, float], None] | None = None,
) -> TrainResult:
    """Train from scratch; deterministic in ``config``.

    Episode ``e`` is drawn from a generator seeded with ``(config.seed, e)``,
    so a diverging run can be replayed from the episode number alone.
    """
    prop = config.resolved().propagation
    model = MRNModel(config)
    model.train()
    params = model.parameters()
    state = AdamState.for_params(params, lr=config.lr, weight_decay=config.weight_decay)
    split = data.train
    losses, lrs = [], []
    for e in range(config.total_episodes):
        state.lr = config.lr_at(e)
        episode = sample_episode(split, config.C, config.K, config.Q, episode_rng(config.seed, e),
                                 n_unlabeled=config.U, seed=e)
        try:
            loss = model.loss(episode, prop)
        except NumericError as exc:
            _dump_divergence(checkpoint_path, config, e, str(exc))
            raise TrainingDiverged(f"episode {e} (seed {config.seed}): {exc}", e, config.seed) from exc
        backward(loss)
        adam_step(params, [p.grad for p in params], state)
        model.zero_grad()
        losses.append(float(loss.data))
        lrs.append(state.lr)
        if callback is not None:
            callback(e, losses[-1])
        elif (e + 1) % 500 == 0:
            log.info("episode %d loss %.4f (window mean %.4f)", e + 1, losses[-1], np.mean(losses[-100:]))
    ckpt = Checkpoint.from_model(model)
    if checkpoint_path is not None:
        ckpt.save(checkpoint_path)
    return TrainResult(ckpt, losses, lrs)


def _dump_divergence(checkpoint_path, config: RunConfig, episode: int, message: str) -> None:
    target = Path(checkpoint_path).with_suffix(".diverged.json") if checkpoint_path else Path("mrn-diverged.json")
    target.write_text(json.dumps({"episode": episode, "seed": config.seed, "error": message,
                                  "config": config.to_flat()}, indent=2))
    log.error("non-finite loss at episode %d; diagnostics written to %s", episode, target)
