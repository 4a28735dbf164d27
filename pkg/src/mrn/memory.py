"""Episodic memory and k-NN feature propagation over a relation graph.

Each node is replaced by ``lam * f_i + (1 - lam) * AGG_{j in A_i} f_j``, where
``A_i`` are the k nearest other nodes under the graph metric. The update is
synchronous: every node reads the pre-step slots, then all slots are replaced
at once. The graph is rebuilt from the current slots at every depth.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, UsageError
from .numerics import Tensor, ops
from .relation import MetricKind, RelationModule, cross_matrix, pairwise_matrix

STRATEGIES = ("weighted", "mean", "max")
MEMORY_MODES = ("support_only", "transductive", "semi_supervised")
PROVENANCE_TAGS = {"support": "s", "query": "q", "unlabeled": "u"}

_episode_counter = itertools.count()


@dataclass
class PropagationConfig:
    k: int = 20
    d: int = 1
    lam: float = 0.2
    strategy: str = "weighted"
    metric: MetricKind = MetricKind.LEARNED
    memory_mode: str = "transductive"
    symmetrize: bool = False
    stop_grad: bool = False  # detach neighbour features and graph distances

    def __post_init__(self):
        self.metric = MetricKind.parse(self.metric)
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lam must lie in [0, 1], got {self.lam}")
        if self.k < 0 or self.d < 0:
            raise ConfigError(f"k and d must be non-negative, got k={self.k}, d={self.d}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.memory_mode not in MEMORY_MODES:
            raise ConfigError(f"memory_mode must be one of {MEMORY_MODES}, got {self.memory_mode!r}")


class EpisodicMemory:
    """Feature slots bound to one episode. Unusable once closed."""

    def __init__(self, slots: Tensor, provenance: list[str], episode_id=None):
        if len(provenance) != slots.shape[0]:
            raise UsageError(f"{len(provenance)} provenance tags for {slots.shape[0]} slots")
        self._slots: Tensor | None = slots
        self.provenance = list(provenance)
        self.episode_id = next(_episode_counter) if episode_id is None else episode_id

    @property
    def slots(self) -> Tensor:
        if self._slots is None:
            raise UsageError(f"memory of episode {self.episode_id} was destroyed")
        return self._slots

    @slots.setter
    def slots(self, value: Tensor) -> None:
        if self._slots is None:
            raise UsageError(f"memory of episode {self.episode_id} was destroyed")
        if value.shape != self._slots.shape:
            raise UsageError(f"slot update changes shape {self._slots.shape} -> {value.shape}")
        self._slots = value

    @property
    def m(self) -> int:
        return self.slots.shape[0]

    @property
    def closed(self) -> bool:
        return self._slots is None

    def indices(self, tag: str) -> np.ndarray:
        return np.array([i for i, p in enumerate(self.provenance) if p == tag], dtype=np.int64)

    def close(self) -> None:
        self._slots = None

    def __enter__(self) -> "EpisodicMemory":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def memory_init(
    support: Tensor,
    query: Tensor | None = None,
    unlabeled: Tensor | None = None,
    mode: str = "transductive",
    episode_id=None,
) -> EpisodicMemory:
    """Admit instances into a fresh memory according to ``mode``.

    support_only keeps S; transductive keeps S then Q; semi_supervised keeps
    S, Q, then the unlabeled pool.
    """
    if mode not in MEMORY_MODES:
        raise ConfigError(f"memory mode must be one of {MEMORY_MODES}, got {mode!r}")
    parts: list[tuple[str, Tensor]] = [("support", support)]
    if mode in ("transductive", "semi_supervised") and query is not None:
        parts.append(("query", query))
    if mode == "semi_supervised" and unlabeled is not None:
        parts.append(("unlabeled", unlabeled))
    parts = [(tag, t) for tag, t in parts if t.shape[0] > 0]
    if not parts:
        raise UsageError("memory_init: no instances admitted")
    slots = parts[0][1] if len(parts) == 1 else ops.concat([t for _, t in parts], axis=0)
    provenance = [tag for tag, t in parts for _ in range(t.shape[0])]
    return EpisodicMemory(slots, provenance, episode_id)


@dataclass
class RelationGraph:
    nodes: Tensor           # (m, *feature_shape), aliases the memory slots
    edges: Tensor           # (m, m) directed distances
    neighbors: np.ndarray   # (m, min(k, m - 1)) slot indices, nearest first


def select_neighbors(dist: np.ndarray, k: int, exclude_self: bool) -> np.ndarray:
    """Indices of the k smallest entries per row; ties go to the lower index."""
    n, p = dist.shape
    if exclude_self:
        k_eff = max(0, min(k, p - 1))
        dist = dist.copy()
        np.fill_diagonal(dist, np.inf)
    else:
        k_eff = max(0, min(k, p))
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k_eff]


def build_graph(
    memory: EpisodicMemory,
    metric: MetricKind,
    module: RelationModule | None,
    k: int,
    symmetrize: bool = False,
) -> RelationGraph:
    nodes = memory.slots
    edges = pairwise_matrix(nodes, metric, module, symmetrize)
    return RelationGraph(nodes, edges, select_neighbors(edges.data, k, exclude_self=True))


def aggregation_weights(distances: Tensor) -> Tensor:
    """Softmax of negated distances along the last axis (min distance subtracted first)."""
    if distances.shape[-1] == 0:
        raise UsageError("aggregation_weights: empty neighbour set")
    return ops.softmax(distances * -1.0, axis=-1)


def _aggregate(sources: Tensor, neighbors: np.ndarray, dist: Tensor, strategy: str) -> Tensor:
    n, k = neighbors.shape
    gathered = sources[neighbors]  # (n, k, *feature_shape)
    if strategy == "mean":
        return ops.mean(gathered, axis=1)
    if strategy == "max":
        return ops.max(gathered, axis=1)
    rows = np.arange(n)[:, None]
    w = aggregation_weights(dist[rows, neighbors])
    w = w.reshape((n, k) + (1,) * (sources.ndim - 1))
    return ops.sum(w * gathered, axis=1)


def propagate(
    memory: EpisodicMemory,
    config: PropagationConfig,
    module: RelationModule | None = None,
    transient: Tensor | None = None,
) -> Tensor | None:
    """Run ``config.d`` synchronous aggregation steps, updating ``memory`` in place.

    ``transient`` nodes (queries in support_only mode) pull from the memory at
    every depth but are never admitted into it; their updated embeddings are
    returned.
    """
    if config.k == 0 or config.d == 0:
        return transient
    lam = float(config.lam)
    for _ in range(config.d):
        slots = memory.slots
        src = ops.stop_gradient(slots) if config.stop_grad else slots
        graph_edges = pairwise_matrix(src, config.metric, module, config.symmetrize)
        if config.stop_grad:
            graph_edges = ops.stop_gradient(graph_edges)
        neighbors = select_neighbors(graph_edges.data, config.k, exclude_self=True)
        new_transient = None
        if transient is not None:
            t_edges = cross_matrix(transient, src, config.metric, module)
            if config.stop_grad:
                t_edges = ops.stop_gradient(t_edges)
            t_nb = select_neighbors(t_edges.data, config.k, exclude_self=False)
            t_agg = _aggregate(src, t_nb, t_edges, config.strategy)
            new_transient = transient * lam + t_agg * (1.0 - lam)
        if neighbors.shape[1] > 0:
            agg = _aggregate(src, neighbors, graph_edges, config.strategy)
            memory.slots = slots * lam + agg * (1.0 - lam)
        transient = new_transient
    return transient


def similarity_matrix(memory: EpisodicMemory, metric: MetricKind, module: RelationModule | None = None) -> np.ndarray:
    return np.exp(-pairwise_matrix(memory.slots, metric, module).data)


def export_similarity(memory: EpisodicMemory, metric: MetricKind, module: RelationModule | None, path) -> np.ndarray:
    """Write exp(-D) over all slot pairs as CSV, first line naming slot provenance."""
    sim = similarity_matrix(memory, metric, module)
    tags = ",".join(PROVENANCE_TAGS[p] for p in memory.provenance)
    lines = [f"# provenance: {tags}"]
    lines += [",".join(f"{v:.9g}" for v in row) for row in sim]
    Path(path).write_text("\n".join(lines) + "\n")
    return sim


def read_similarity(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip()
        prefix = "# provenance:"
        if not header.startswith(prefix):
            raise ValueError(f"{path}: missing provenance header")
        tags = [t.strip() for t in header[len(prefix):].split(",")]
        mat = np.loadtxt(fh, delimiter=",", ndmin=2)
    return tags, mat
