"""Adam optimizer with bias correction, applied in-place to parameter arrays."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


class AdamState:
    """Per-parameter first/second moment accumulators plus the step counter."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """One update: p -= lr * m_hat / (sqrt(v_hat) + eps), eps outside the sqrt.

    Mutates the arrays in `params` in place so live model weights update.
    Parameters without a gradient this step are left untouched.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for key, p in params.items():
        if key not in grads:
            continue
        g = grads[key]
        if g.shape != p.shape:
            raise ShapeMismatch(f"{key}: grad {g.shape} vs param {p.shape}")
        if key not in state.m:
            state.m[key] = np.zeros_like(p)
            state.v[key] = np.zeros_like(p)
        m = state.m[key]
        v = state.v[key]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** state.t)
        v_hat = v / (1.0 - b2 ** state.t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
