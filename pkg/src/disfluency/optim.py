"""Adadelta and global-norm gradient clipping."""
from __future__ import annotations

import numpy as np


def adadelta_update(grad, sq_grad, sq_delta, rho=0.95, eps=1e-6):
    """One Adadelta step for a single tensor.

    Returns ``(delta, sq_grad, sq_delta)`` where ``delta`` is added to the
    parameter and the two running averages are the updated accumulators.
    """
    sq_grad = rho * sq_grad + (1.0 - rho) * grad * grad
    delta = -np.sqrt(sq_delta + eps) / np.sqrt(sq_grad + eps) * grad
    sq_delta = rho * sq_delta + (1.0 - rho) * delta * delta
    return delta, sq_grad, sq_delta


class Adadelta:
    def __init__(self, params: dict, rho: float = 0.95, eps: float = 1e-6):
        if not 0.0 < rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        self.rho = rho
        self.eps = eps
        self.sq_grad = {k: np.zeros_like(v) for k, v in params.items()}
        self.sq_delta = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict) -> None:
        for name in sorted(grads):
            delta, self.sq_grad[name], self.sq_delta[name] = adadelta_update(
                grads[name], self.sq_grad[name], self.sq_delta[name], self.rho, self.eps)
            params[name] += delta


def adadelta_step(state: Adadelta, params: dict, grads: dict) -> dict:
    """Apply one step in place and return ``params``."""
    state.step(params, grads)
    return params


def global_norm(grads: dict) -> float:
    return float(np.sqrt(sum(float((g * g).sum()) for _, g in sorted(grads.items()))))


def clip_by_global_norm(grads: dict, max_norm: float) -> float:
    """Rescale ``grads`` in place so their joint norm is at most ``max_norm``."""
    norm = global_norm(grads)
    if max_norm and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm
