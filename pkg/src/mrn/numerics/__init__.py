"""Minimal float64 reverse-mode autodiff, Adam and gradient checking."""
from . import ops
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import finite_diff_check
from .optim import AdamState, adam_step
from .tensor import Tensor, as_tensor, backward, grad_enabled, make_op, no_grad

__all__ = [
    "AdamState", "Tensor", "adam_step", "as_tensor", "backward", "finite_diff_check",
    "grad_enabled", "load_checkpoint", "make_op", "no_grad", "ops", "save_checkpoint",
]
