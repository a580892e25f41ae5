"""Loss functions returning (mean-reduced scalar, gradient w.r.t. prediction).

Log arguments are clamped to [1e-7, 1 - 1e-7]; the gradient is zero where
the clamp is active, matching the clamped forward exactly.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

CLAMP_LO = 1e-7
CLAMP_HI = 1.0 - 1e-7


def _pair(pred, target):
    p = np.asarray(pred, dtype=np.result_type(pred, np.float32))
    t = np.asarray(target, dtype=p.dtype)
    if p.shape != t.shape:
        raise ShapeMismatch(f"prediction {p.shape} vs target {t.shape}")
    return p, t


def loss_bce(pred, target):
    """Binary cross-entropy, mean over all elements."""
    p, t = _pair(pred, target)
    pc = np.clip(p, CLAMP_LO, CLAMP_HI)
    n = max(pc.size, 1)
    loss = float(-(t * np.log(pc) + (1.0 - t) * np.log(1.0 - pc)).sum() / n)
    live = (p > CLAMP_LO) & (p < CLAMP_HI)
    grad = np.where(live, (pc - t) / (pc * (1.0 - pc)) / n, 0.0).astype(p.dtype)
    return loss, grad.reshape(np.shape(pred)) if np.ndim(pred) else grad


def loss_ce(pred, target):
    """Categorical cross-entropy on probability rows, mean over the batch."""
    p, t = _pair(pred, target)
    rows = 1 if p.ndim == 1 else p.shape[0]
    pc = np.clip(p, CLAMP_LO, CLAMP_HI)
    loss = float(-(t * np.log(pc)).sum() / rows)
    live = (p > CLAMP_LO) & (p < CLAMP_HI)
    grad = np.where(live, -t / pc / rows, 0.0).astype(p.dtype)
    return loss, grad


def loss_l1(pred, target):
    """Mean absolute error; subgradient sign(pred - target) / size."""
    p, t = _pair(pred, target)
    n = max(p.size, 1)
    loss = float(np.abs(p - t).sum() / n)
    grad = (np.sign(p - t) / n).astype(p.dtype)
    return loss, grad
