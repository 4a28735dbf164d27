"""Tiny layer containers holding named parameters and buffers."""
from __future__ import annotations

import numpy as np

from . import ops
from .tensor import Tensor


class Module:
    training = True

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, val in vars(self).items():
            if isinstance(val, Tensor) and val.requires_grad:
                out[prefix + name] = val
            elif isinstance(val, Module):
                out.update(val.named_parameters(f"{prefix}{name}."))
            elif isinstance(val, list):
                for i, sub in enumerate(val):
                    if isinstance(sub, Module):
                        out.update(sub.named_parameters(f"{prefix}{name}.{i}."))
        return out

    def named_buffers(self, prefix: str = "") -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for name, val in vars(self).items():
            if isinstance(val, np.ndarray):
                out[prefix + name] = val
            elif isinstance(val, Module):
                out.update(val.named_buffers(f"{prefix}{name}."))
            elif isinstance(val, list):
                for i, sub in enumerate(val):
                    if isinstance(sub, Module):
                        out.update(sub.named_buffers(f"{prefix}{name}.{i}."))
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {k: v.data.copy() for k, v in self.named_parameters().items()}
        state.update({k: v.copy() for k, v in self.named_buffers().items()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params, buffers = self.named_parameters(), self.named_buffers()
        expected = set(params) | set(buffers)
        if set(state) != expected:
            missing, extra = expected - set(state), set(state) - expected
            raise KeyError(f"state mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for k, p in params.items():
            if p.shape != state[k].shape:
                raise ValueError(f"{k}: shape {state[k].shape} != {p.shape}")
            p.data[...] = state[k]
        for k, b in buffers.items():
            b[...] = state[k]

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for val in vars(self).values():
            if isinstance(val, Module):
                val.train(mode)
            elif isinstance(val, list):
                for sub in val:
                    if isinstance(sub, Module):
                        sub.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> Tensor:
    bound = np.sqrt(6.0 / fan_in) if fan_in else 0.0
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        self.weight = _uniform(rng, (n_out, n_in), n_in)
        self.bias = Tensor(np.zeros(n_out), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class Conv2d(Module):
    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, kernel: int = 3, padding: int = 1):
        self.weight = _uniform(rng, (c_out, c_in, kernel, kernel), c_in * kernel * kernel)
        self.bias = Tensor(np.zeros(c_out), requires_grad=True)
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, self.padding)


class BatchNorm(Module):
    """Per-channel batch normalisation (axis 1) with running statistics."""

    def __init__(self, channels: int, momentum: float = 0.9, eps: float = 1e-8):
        self.gamma = Tensor(np.ones(channels), requires_grad=True)
        self.beta = Tensor(np.zeros(channels), requires_grad=True)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ops.batch_norm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            self.training, self.momentum, self.eps,
        )


class ConvBlock(Module):
    """conv3x3 (pad 1) -> batchnorm -> ReLU -> 2x2 max-pool."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator):
        self.conv = Conv2d(c_in, c_out, rng)
        self.bn = BatchNorm(c_out)

    def __call__(self, x: Tensor) -> Tensor:
        return ops.max_pool2d(ops.relu(self.bn(self.conv(x))))
