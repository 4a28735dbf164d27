"""Encoder + relation module wired into the episode pipeline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..classifier import CentroidSet, class_centroids, episode_loss, predict
from ..encoder import Encoder, encode
from ..episodes import Episode
from ..memory import PropagationConfig, memory_init, propagate
from ..numerics import Tensor, load_checkpoint, save_checkpoint
from ..numerics.nn import Module
from ..relation import RelationConfig, RelationModule
from .config import RunConfig

INIT_STREAM = 0x5EED


class MRNModel(Module):
    def __init__(self, config: RunConfig, rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, INIT_STREAM]))
        self.config = config
        self.encoder = Encoder(config.encoder, rng)
        rel_cfg = RelationConfig(
            feature_shape=config.encoder.feature_shape(),
            hidden=config.relation_hidden,
            filters=config.relation_filters,
            output=config.relation_output,
        )
        self.relation = RelationModule(rel_cfg, rng)

    def embed_episode(self, episode: Episode, prop: PropagationConfig) -> tuple[Tensor, CentroidSet]:
        """Encode S, Q (and unlabeled), propagate in episodic memory, build centroids.

        Returns enhanced query embeddings and the centroids of the enhanced supports.
        """
        ns, nq = episode.support_x.shape[0], episode.query_x.shape[0]
        x = np.concatenate([episode.support_x, episode.query_x, episode.unlabeled_x])
        feats = encode(Tensor(x), self.encoder)
        support, query, unlabeled = feats[:ns], feats[ns:ns + nq], feats[ns + nq:]
        mode = prop.memory_mode
        with memory_init(support, query, unlabeled, mode, episode_id=episode.seed) as memory:
            transient = propagate(memory, prop, self.relation, query if mode == "support_only" else None)
            slots = memory.slots
            support = slots[:ns]
            query = transient if mode == "support_only" else slots[ns:ns + nq]
        centroids = class_centroids(support, episode.support_y, episode.n_classes, episode.shots)
        return query, centroids

    def loss(self, episode: Episode, prop: PropagationConfig | None = None) -> Tensor:
        prop = prop or self.config.resolved().propagation
        query, centroids = self.embed_episode(episode, prop)
        return episode_loss(query, episode.query_y, centroids, self.config.metric_DC, self.relation)

    def predict(self, episode: Episode, prop: PropagationConfig | None = None) -> np.ndarray:
        prop = prop or self.config.resolved().propagation
        query, centroids = self.embed_episode(episode, prop)
        return predict(query, centroids, self.config.metric_DC, self.relation)


@dataclass
class Checkpoint:
    """Trained parameters plus the exact config that produced them."""

    config: RunConfig
    state: dict[str, np.ndarray]

    def build_model(self) -> MRNModel:
        model = MRNModel(self.config)
        model.load_state_dict(self.state)
        return model

    def save(self, path) -> None:
        save_checkpoint(path, self.state, self.config.to_text())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        text, state = load_checkpoint(path)
        return cls(RunConfig.from_text(text), state)

    @classmethod
    def from_model(cls, model: MRNModel) -> "Checkpoint":
        return cls(model.config, model.state_dict())
