"""AdamW with decoupled weight decay, over named numpy parameter dicts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamWState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: dict[str, np.ndarray], **kwargs) -> AdamWState:
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            **kwargs,
        )


def adamw_step(
    state: AdamWState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    lr: float,
    weight_decay: float = 0.0,
) -> tuple[dict[str, np.ndarray], AdamWState]:
    """One update: moment updates, bias correction, then
    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta).

    Weight decay acts on the parameters directly, never through the moments.
    Raises on non-finite gradients so training aborts before corrupting state.
    """
    if set(params) != set(grads):
        raise ValueError(f"param/grad keys differ: {sorted(params)} vs {sorted(grads)}")
    for key, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise ValueError(f"non-finite gradient for {key!r}")
    state.step += 1
    t = state.step
    bias1 = 1.0 - state.beta1**t
    bias2 = 1.0 - state.beta2**t
    updated: dict[str, np.ndarray] = {}
    for key, theta in params.items():
        grad = grads[key]
        state.m[key] = state.beta1 * state.m[key] + (1.0 - state.beta1) * grad
        state.v[key] = state.beta2 * state.v[key] + (1.0 - state.beta2) * grad * grad
        m_hat = state.m[key] / bias1
        v_hat = state.v[key] / bias2
        updated[key] = theta - lr * (m_hat / (np.sqrt(v_hat) + state.eps) + weight_decay * theta)
    return updated, state
