"""Finite-difference gradient verification.

Analytic gradients are compared against central differences
(f(x+h) - f(x-h)) / 2h coordinate by coordinate; the error metric is
|a - n| / max(|a|, |n|, 1e-8). Run these checks in float64: float32
rounding at h=1e-3 drowns the signal.
"""

from __future__ import annotations

import numpy as np


def rel_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def finite_diff(loss_fn, arr: np.ndarray, coord, h: float) -> float:
    saved = arr[coord]
    arr[coord] = saved + h
    lp = loss_fn()
    arr[coord] = saved - h
    lm = loss_fn()
    arr[coord] = saved
    return (lp - lm) / (2.0 * h)


def gradient_check(loss_fn, arrays: dict, analytic: dict, h=1e-3,
                   max_coords=24, seed=0) -> float:
    """Max relative error between analytic grads and central differences.

    arrays maps name -> array perturbed in place; analytic maps the same
    names to precomputed gradients. Arrays larger than max_coords are
    subsampled at seeded random coordinates.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for name, arr in arrays.items():
        grad = analytic[name]
        flat = arr.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        n = flat.size
        if n <= max_coords:
            coords = range(n)
        else:
            coords = rng.choice(n, size=max_coords, replace=False)
        for c in coords:
            numeric = finite_diff(loss_fn, flat, int(c), h)
            worst = max(worst, rel_error(float(gflat[c]), numeric))
    return worst


def upcast_params(obj) -> None:
    """Promote a layer's or graph's parameters to float64 in place."""
    layers = obj.layers if hasattr(obj, "layers") else [obj]
    for layer in layers:
        for key, arr in layer.params().items():
            setattr(layer, key, arr.astype(np.float64))


def check_layer(layer, x: np.ndarray, h=1e-3, seed=0, train=False,
                rng_seed=7, max_coords=24) -> float:
    """Probe one layer with a fixed linear readout sum(R * y)."""
    upcast_params(layer)
    x = x.astype(np.float64)

    def rng():
        return np.random.Generator(np.random.PCG64(rng_seed))

    probe_ctx = {}
    y = layer.forward(x, probe_ctx, train=train, rng=rng(), skips=[])
    r = np.random.Generator(np.random.PCG64(seed + 1)).standard_normal(y.shape)

    def loss_fn():
        out = layer.forward(x, {}, train=train, rng=rng(), skips=[])
        return float((r * out).sum())

    dx, grads = layer.backward(r, probe_ctx, skip_grads=[])
    arrays = {"x": x}
    analytic = {"x": dx}
    for key, arr in layer.params().items():
        arrays[key] = arr
        analytic[key] = grads[key]
    return gradient_check(loss_fn, arrays, analytic, h=h,
                          max_coords=max_coords, seed=seed)


def check_graph(graph, x: np.ndarray, loss_pair, h=1e-3, seed=0,
                max_coords=12) -> float:
    """Probe a whole graph against a (loss, grad) pair such as loss_bce."""
    upcast_params(graph)
    x = x.astype(np.float64)

    def loss_fn():
        return loss_pair(graph.forward(x))[0]

    tape = []
    out = graph.forward(x, tape=tape)
    _, dout = loss_pair(out)
    grads, dx = graph.backward(tape, dout)
    arrays = {"x": x, **graph.params()}
    analytic = {"x": dx, **grads}
    return gradient_check(loss_fn, arrays, analytic, h=h,
                          max_coords=max_coords, seed=seed)
