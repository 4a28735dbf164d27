"""Central finite-difference gradient checking."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward, no_grad


def finite_diff_check(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
) -> float:
    """Max over all coordinates of ``|a - n| / max(1, |a|, |n|)``.

    ``fn`` recomputes a scalar loss from the current values of ``params``;
    ``a`` is the reverse-mode gradient and ``n`` the central difference with
    step ``h``. Parameters are restored exactly after probing.
    """
    for p in params:
        p.grad = None
    loss = fn()
    backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    for p in params:
        p.grad = None

    worst = 0.0
    with no_grad():
        for p, a in zip(params, analytic):
            flat = p.data.reshape(-1)
            af = a.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = float(fn().data)
                flat[i] = orig - h
                down = float(fn().data)
                flat[i] = orig
                num = (up - down) / (2.0 * h)
                err = abs(af[i] - num) / max(1.0, abs(af[i]), abs(num))
                worst = max(worst, err)
    return worst
