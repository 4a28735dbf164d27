"""Embedding backbones: Conv-4, a small MLP, and identity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .numerics import Tensor, ops
from .numerics.nn import ConvBlock, Linear, Module

KINDS = ("conv4", "mlp", "identity")


@dataclass
class EncoderConfig:
    kind: str = "mlp"
    input_shape: tuple[int, ...] = (16,)
    channels: int = 64
    mlp_dims: tuple[int, ...] = (32,)  # hidden widths
    out_dim: int = 16

    def __post_init__(self):
        self.input_shape = tuple(int(v) for v in self.input_shape)
        self.mlp_dims = tuple(int(v) for v in self.mlp_dims)
        if self.kind not in KINDS:
            raise ConfigError(f"encoder kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "identity":
            if len(self.input_shape) != 1 or self.out_dim != self.input_shape[0]:
                raise ConfigError(
                    f"identity encoder needs flat input with out_dim == length, got "
                    f"{self.input_shape} / {self.out_dim}")
        if self.kind == "mlp" and len(self.input_shape) != 1:
            raise ConfigError(f"mlp encoder needs flat input, got {self.input_shape}")
        if self.kind == "conv4":
            if len(self.input_shape) != 3:
                raise ConfigError(f"conv4 expects (channels, H, W), got {self.input_shape}")
            h, w = self.input_shape[1:]
            for _ in range(4):
                h, w = h // 2, w // 2
            if h < 1 or w < 1:
                raise ConfigError(f"input {self.input_shape} too small for four 2x2 poolings")

    def feature_shape(self) -> tuple[int, ...]:
        """Per-sample embedding shape."""
        if self.kind == "conv4":
            h, w = self.input_shape[1:]
            for _ in range(4):
                h, w = h // 2, w // 2
            return (self.channels, h, w)
        if self.kind == "identity":
            return self.input_shape
        return (self.out_dim,)


class Encoder(Module):
    def __init__(self, config: EncoderConfig, rng: np.random.Generator):
        self.config = config
        if config.kind == "conv4":
            c_in = config.input_shape[0]
            self.blocks = [ConvBlock(c_in if i == 0 else config.channels, config.channels, rng) for i in range(4)]
        elif config.kind == "mlp":
            dims = (config.input_shape[0], *config.mlp_dims, config.out_dim)
            self.layers = [Linear(a, b, rng) for a, b in zip(dims[:-1], dims[1:])]

    def __call__(self, x: Tensor) -> Tensor:
        return encode(x, self)


def encode(batch: Tensor, encoder: Encoder) -> Tensor:
    """Map a (B, *input_shape) batch to embeddings.

    conv4 yields (B, channels, h, w) feature maps; mlp and identity yield (B, d).
    """
    cfg = encoder.config
    if batch.shape[1:] != cfg.input_shape:
        raise ShapeError(f"encode: expected (B, {cfg.input_shape}), got {batch.shape}")
    if cfg.kind == "identity":
        return batch
    if cfg.kind == "conv4":
        h = batch
        for block in encoder.blocks:
            h = block(h)
        return h
    h = batch
    for i, layer in enumerate(encoder.layers):
        h = layer(h)
        if i < len(encoder.layers) - 1:
            h = ops.relu(h)
    return h
