"""Adam with decoupled weight decay."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import UsageError
from .tensor import Tensor


@dataclass
class AdamState:
    lr: float = 1e-3
    weight_decay: float = 1e-6
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.lr <= 0:
            raise UsageError(f"Adam learning rate must be positive, got {self.lr}")

    @classmethod
    def for_params(cls, params: Sequence[Tensor], **kw) -> "AdamState":
        state = cls(**kw)
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
        return state


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray | None], state: AdamState) -> None:
    """One in-place Adam update.

    Weight decay shrinks each parameter by ``lr * weight_decay`` before the
    moment update, independently of the gradient.
    """
    if len(params) != len(grads):
        raise UsageError(f"adam_step: {len(params)} params but {len(grads)} grads")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            raise UsageError(f"adam_step: parameter {i} {p.shape} has no gradient")
        if state.m[i].shape != p.shape:
            raise UsageError(f"adam_step: moment shape {state.m[i].shape} != param shape {p.shape}")
    state.step += 1
    b1, b2 = state.betas
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    # overflow here is not fatal: it surfaces as a non-finite output on the next forward
    with np.errstate(over="ignore", invalid="ignore"):
        for p, g, m, v in zip(params, grads, state.m, state.v):
            if state.weight_decay:
                p.data *= 1.0 - state.lr * state.weight_decay
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
