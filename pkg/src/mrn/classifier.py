"""Nearest-centroid classification under a configurable distance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .numerics import Tensor, ops
from .relation import MetricKind, RelationModule, cross_matrix


@dataclass
class CentroidSet:
    centroids: Tensor      # (C, *feature_shape)
    class_ids: np.ndarray  # episode-local labels 0..C-1

    @property
    def n_classes(self) -> int:
        return self.centroids.shape[0]


def class_centroids(support: Tensor, labels, n_classes: int, shots: int) -> CentroidSet:
    """Per-class mean of the support embeddings; requires exactly ``shots`` per class."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != support.shape[0]:
        raise UsageError(f"{labels.shape[0]} labels for {support.shape[0]} support embeddings")
    groups = []
    for t in range(n_classes):
        idx = np.flatnonzero(labels == t)
        if idx.size == 0:
            raise UsageError(f"class {t} has no support embeddings")
        if idx.size != shots:
            raise UsageError(f"class {t} has {idx.size} supports, expected {shots}")
        groups.append(idx)
    gathered = support[np.stack(groups)]  # (C, K, *feature_shape)
    return CentroidSet(ops.mean(gathered, axis=1), np.arange(n_classes))


def centroid_distances(queries: Tensor, centroids: CentroidSet, metric: MetricKind,
                       module: RelationModule | None = None) -> Tensor:
    return cross_matrix(queries, centroids.centroids, metric, module)


def loss_from_distances(dist: Tensor, labels) -> Tensor:
    """Mean over rows of -log softmax(-dist)[label]."""
    labels = np.asarray(labels, dtype=np.int64)
    n, c = dist.shape
    if n == 0:
        raise UsageError("episode_loss: no queries")
    if labels.min() < 0 or labels.max() >= c:
        raise UsageError(f"query labels must lie in 0..{c - 1}, got range {labels.min()}..{labels.max()}")
    logp = ops.log_softmax(dist * -1.0, axis=1)
    return ops.mean(logp[np.arange(n), labels]) * -1.0


def episode_loss(queries: Tensor, labels, centroids: CentroidSet, metric: MetricKind,
                 module: RelationModule | None = None) -> Tensor:
    return loss_from_distances(centroid_distances(queries, centroids, metric, module), labels)


def predict(queries: Tensor, centroids: CentroidSet, metric: MetricKind,
            module: RelationModule | None = None) -> np.ndarray:
    """argmin over classes; np.argmin already prefers the lowest index on ties."""
    return np.argmin(centroid_distances(queries, centroids, metric, module).data, axis=1)
