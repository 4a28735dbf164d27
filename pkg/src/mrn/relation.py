"""Learnable distance g(f_i - f_j) and the squared-Euclidean alternative."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, ShapeError
from .numerics import Tensor, as_tensor, ops
from .numerics.nn import ConvBlock, Linear, Module


class MetricKind(str, Enum):
    LEARNED = "learned_relation"
    EUCLIDEAN = "squared_euclidean"

    @classmethod
    def parse(cls, value) -> "MetricKind":
        if isinstance(value, cls):
            return value
        aliases = {"learned": cls.LEARNED, "relation": cls.LEARNED, "euclid": cls.EUCLIDEAN,
                   "euclidean": cls.EUCLIDEAN}
        value = str(value).strip()
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(f"unknown metric {value!r}") from None


@dataclass
class RelationConfig:
    feature_shape: tuple[int, ...]
    hidden: int = 8
    filters: int = 64
    output: str = "softplus"  # or "linear": raw g output, may be negative

    def __post_init__(self):
        self.feature_shape = tuple(int(v) for v in self.feature_shape)
        if self.output not in ("softplus", "linear"):
            raise ConfigError(f"relation output must be softplus or linear, got {self.output!r}")
        if len(self.feature_shape) == 3:
            s = min(self.feature_shape[1:])
            if s // 2 // 2 < 1:
                raise ConfigError(f"feature maps {self.feature_shape} too small for two pooling blocks")
        elif len(self.feature_shape) != 1:
            raise ConfigError(f"relation module takes flat vectors or (C, H, W) maps, got {self.feature_shape}")


class RelationModule(Module):
    """Two conv blocks + two FC layers for feature maps; FC-only for vectors."""

    def __init__(self, config: RelationConfig, rng: np.random.Generator):
        self.config = config
        fs = config.feature_shape
        if len(fs) == 3:
            self.blocks = [ConvBlock(fs[0], config.filters, rng), ConvBlock(config.filters, config.filters, rng)]
            h, w = fs[1] // 4, fs[2] // 4
            flat = config.filters * h * w
        else:
            self.blocks = []
            flat = fs[0]
        self.fc1 = Linear(flat, config.hidden, rng)
        self.fc2 = Linear(config.hidden, 1, rng)

    def _head(self, h: Tensor) -> Tensor:
        h = self.fc2(ops.relu(h)).reshape(-1)
        return ops.softplus(h) if self.config.output == "softplus" else h

    def cross(self, x: Tensor, y: Tensor) -> Tensor:
        """(n, p) distances g(x_i - y_j).

        For flat vectors the first affine layer is pushed through the
        difference, W(x_i - y_j) + b = (W x_i + b) - W y_j, so the wide hidden
        layer is formed once per pair instead of multiplied once per pair.
        """
        n, p = x.shape[0], y.shape[0]
        fs = self.config.feature_shape
        if self.blocks:
            diff = x.reshape(n, 1, *fs) - y.reshape(1, p, *fs)
            return self(diff.reshape(n * p, *fs)).reshape(n, p)
        hdim = self.config.hidden
        px = ops.linear(x, self.fc1.weight, self.fc1.bias).reshape(n, 1, hdim)
        py = ops.linear(y, self.fc1.weight).reshape(1, p, hdim)
        return self._head((px - py).reshape(n * p, hdim)).reshape(n, p)

    def __call__(self, diff: Tensor) -> Tensor:
        """Distance for a batch of preprocessed pairs (N, *feature_shape) -> (N,)."""
        if diff.shape[1:] != self.config.feature_shape:
            raise ShapeError(
                f"relation: expected (N, {self.config.feature_shape}), got {diff.shape}")
        h = diff
        for block in self.blocks:
            h = block(h)
        if self.blocks:
            h = ops.flatten(h)
        return self._head(self.fc1(h))


def preprocess_diff(fi, fj) -> Tensor:
    fi, fj = as_tensor(fi), as_tensor(fj)
    if fi.shape != fj.shape:
        raise ShapeError(f"preprocess_diff: shapes {fi.shape} and {fj.shape} differ")
    return fi - fj


def _batched(fi: Tensor, fj: Tensor, feature_ndim: int) -> tuple[Tensor, bool]:
    diff = preprocess_diff(fi, fj)
    single = diff.ndim == feature_ndim
    return (diff.reshape((1, *diff.shape)) if single else diff), single


def relation_distance(fi, fj, module: RelationModule) -> Tensor:
    """Learned distance of one pair (scalar) or of aligned pairs (N,).

    Vector embeddings take the same projected-difference route as
    :func:`cross_matrix`, so results agree bit for bit with the matrix form.
    """
    fi, fj = as_tensor(fi), as_tensor(fj)
    diff, single = _batched(fi, fj, len(module.config.feature_shape))
    if module.blocks:
        out = module(diff)
    else:
        if single:
            fi, fj = fi.reshape(1, -1), fj.reshape(1, -1)
        out = ops.stack([module.cross(fi[i:i + 1], fj[i:i + 1]).reshape(()) for i in range(fi.shape[0])])
    return out.reshape(()) if single else out


def squared_euclidean(fi, fj) -> Tensor:
    """Sum of squared differences over all non-batch axes.

    A 1-D input is a single vector; higher-rank inputs are batches along axis 0.
    """
    diff = preprocess_diff(fi, fj)
    if diff.ndim <= 1:
        return ops.sum(ops.square(diff))
    return ops.sum(ops.square(ops.flatten(diff)), axis=1)


def cross_matrix(x: Tensor, y: Tensor, metric: MetricKind, module: RelationModule | None = None) -> Tensor:
    """(n, p) matrix with entry (i, j) = D(x_i, y_j)."""
    x, y = as_tensor(x), as_tensor(y)
    if x.shape[1:] != y.shape[1:]:
        raise ShapeError(f"cross_matrix: feature shapes {x.shape[1:]} and {y.shape[1:]} differ")
    n, p = x.shape[0], y.shape[0]
    metric = MetricKind.parse(metric)
    if metric is MetricKind.EUCLIDEAN:
        xf, yf = ops.flatten(x), ops.flatten(y)
        diff = xf.reshape(n, 1, -1) - yf.reshape(1, p, -1)
        return ops.sum(ops.square(diff), axis=2)
    if module is None:
        raise ConfigError("learned metric needs a relation module")
    return module.cross(x, y)


def pairwise_matrix(
    features: Tensor,
    metric: MetricKind,
    module: RelationModule | None = None,
    symmetrize: bool = False,
) -> Tensor:
    """All-pairs distance matrix of an (n, *feature_shape) batch.

    The learned metric is generally asymmetric; ``symmetrize`` averages
    D and its transpose.
    """
    if features.shape[0] < 1:
        raise ShapeError("pairwise_matrix: need at least one feature")
    dmat = cross_matrix(features, features, metric, module)
    if symmetrize:
        dmat = (dmat + ops.transpose(dmat)) * 0.5
    return dmat
