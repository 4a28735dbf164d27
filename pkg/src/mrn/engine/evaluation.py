"""Few-shot evaluation with 95% confidence intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..episodes import SplitDataset, sample_episode
from ..memory import PropagationConfig
from ..numerics import no_grad
from .model import Checkpoint, MRNModel


@dataclass
class EvalReport:
    mean_accuracy: float
    ci95: float
    per_episode_accuracies: list[float]
    episodes: int

    @classmethod
    def from_accuracies(cls, accs: Sequence[float]) -> "EvalReport":
        """ci95 = 1.96 * population std / sqrt(N)."""
        accs = [float(a) for a in accs]
        n = len(accs)
        if n == 0:
            raise ValueError("no episodes to report")
        mean = math.fsum(accs) / n
        std = math.sqrt(math.fsum((a - mean) ** 2 for a in accs) / n)
        return cls(mean, 1.96 * std / math.sqrt(n), accs, n)


def eval_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(int(seed)).generate_state(n)]


def episode_accuracy(model: MRNModel, data: SplitDataset, episode_seed: int,
                     prop: PropagationConfig, split: str) -> float:
    cfg = model.config
    episode = sample_episode(data.split(split), cfg.C, cfg.K, cfg.queries_at_eval,
                             np.random.default_rng(episode_seed), n_unlabeled=cfg.U, seed=episode_seed)
    pred = model.predict(episode, prop)
    return float(np.mean(pred == episode.query_y))


def evaluate(
    checkpoint: Checkpoint,
    data: SplitDataset,
    n_episodes: int | None = None,
    seed: int = 0,
    episode_seeds: Sequence[int] | None = None,
    propagation: PropagationConfig | None = None,
    split: str | None = None,
) -> EvalReport:
    """Accuracy over episodes drawn from ``split`` (default: the config's eval split).

    ``propagation`` overrides the checkpoint's propagation settings at
    inference time; the variant's forced settings are still applied on top.
    """
    cfg = checkpoint.config
    if episode_seeds is None:
        episode_seeds = eval_seeds(seed, n_episodes or cfg.eval_episodes)
    if propagation is None:
        prop = cfg.resolved().propagation
    else:
        prop = cfg.with_overrides({"propagation." + k: v for k, v in vars(propagation).items()}
                                  ).resolved().propagation
    model = checkpoint.build_model().eval()
    split = split or cfg.eval_split
    with no_grad():
        accs = [episode_accuracy(model, data, s, prop, split) for s in episode_seeds]
    return EvalReport.from_accuracies(accs)
