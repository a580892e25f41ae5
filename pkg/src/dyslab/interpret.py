"""Grad-CAM saliency over the severity model's convolutional features.

The target score is the pre-softmax logit of the chosen class. Channel
weights are the spatial means of the logit's gradient on the chosen conv
layer's activation; the weighted activation sum is rectified, bilinearly
upsampled to the input size, and min-max normalized (an all-zero map stays
all-zero). Rendering blends the grayscale input with a fixed 256-entry
blue -> green -> yellow ramp at 0.6/0.4 weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import normalize_01, resize_bilinear
from .errors import NotAConvLayer, ShapeMismatch
from .models import ModelGraph, SeverityLabel
from .nn import Conv2D, Sigmoid, Softmax


@dataclass
class GradCamMap:
    heat: np.ndarray          # [H, W] in [0, 1], input-sized
    target_class: int
    source_layer: str


def _ramp_table() -> np.ndarray:
    """Fixed color ramp: index i/255 -> RGB.

    t in [0, 0.5]: blue (0,0,1) -> green (0,1,0), linear per channel;
    t in (0.5, 1]: green -> yellow (1,1,0). 256 entries, bit-reproducible.
    """
    t = np.arange(256) / 255.0
    low = np.stack([np.zeros(256), t / 0.5, 1.0 - t / 0.5], axis=1)
    high = np.stack([(t - 0.5) / 0.5, np.ones(256), np.zeros(256)], axis=1)
    return np.where(t[:, None] <= 0.5, low, high).clip(0.0, 1.0)


COLOR_RAMP = _ramp_table()


def default_cam_layer(model: ModelGraph) -> str:
    """Deepest convolutional layer in the graph."""
    convs = [l.name for l in model.layers if isinstance(l, Conv2D)]
    if not convs:
        raise NotAConvLayer(f"{model.arch} has no convolutional layers")
    return convs[-1]


def grad_cam(model: ModelGraph, image: np.ndarray, target_class,
             layer: str | None = None) -> GradCamMap:
    """Class-discriminative activation map on the chosen conv layer."""
    if layer is None:
        layer = default_cam_layer(model)
    if not isinstance(model.layer(layer), Conv2D):
        raise NotAConvLayer(f"{layer!r} is not a convolutional layer")
    target = int(target_class)

    x = np.asarray(image, dtype=np.float32)
    if x.shape == model.input_shape:
        x = x[None]
    if x.shape != (1,) + model.input_shape:
        raise ShapeMismatch(
            f"grad_cam wants one {model.input_shape} input, got {np.shape(image)}")

    tape = []
    model.forward(x, tape=tape)
    # Seed the backward pass at the logits: drop the trailing probability
    # activation so the gradient is taken w.r.t. the pre-softmax score.
    if not isinstance(tape[-1].layer, (Softmax, Sigmoid)):
        raise ShapeMismatch(f"{model.arch} does not end in a probability layer")
    logits = tape[-2].out
    if not 0 <= target < logits.shape[1]:
        raise ShapeMismatch(
            f"target class {target} outside {logits.shape[1]} logits")
    seed = np.zeros_like(logits)
    seed[0, target] = 1.0

    _, d_act = model.backward(tape[:-1], seed, stop_layer=layer)
    activation = next(e.out for e in tape if e.layer.name == layer)

    alpha = d_act[0].mean(axis=(1, 2))                       # [K]
    cam = np.maximum((alpha[:, None, None] * activation[0]).sum(axis=0), 0.0)
    heat = resize_bilinear(cam, model.input_shape[1], model.input_shape[2])
    return GradCamMap(heat=normalize_01(heat), target_class=target,
                      source_layer=layer)


def overlay(heat, base: np.ndarray) -> np.ndarray:
    """[3, H, W] blend: 0.6 * grayscale base + 0.4 * ramp(heat)."""
    h = heat.heat if isinstance(heat, GradCamMap) else np.asarray(heat, dtype=np.float64)
    b = np.asarray(base, dtype=np.float64)
    if h.shape != b.shape or h.ndim != 2:
        raise ShapeMismatch(f"heat {h.shape} vs base {b.shape}")
    idx = np.floor(np.clip(h, 0.0, 1.0) * 255.0 + 0.5).astype(int)
    color = COLOR_RAMP[idx]                                   # [H, W, 3]
    out = 0.6 * b[None] + 0.4 * color.transpose(2, 0, 1)
    return np.clip(out, 0.0, 1.0)


def heat_band_mass(cam, n_bands: int = 4) -> np.ndarray:
    """Fraction of total heat per horizontal frequency band (top to bottom).

    Purely descriptive: reports where a map concentrates without asserting
    any threshold. A zero map returns uniform fractions.
    """
    h = cam.heat if isinstance(cam, GradCamMap) else np.asarray(cam, dtype=np.float64)
    bands = np.array_split(np.arange(h.shape[0]), n_bands)
    masses = np.array([h[b].sum() for b in bands], dtype=np.float64)
    total = masses.sum()
    if total <= 0:
        return np.full(n_bands, 1.0 / n_bands)
    return masses / total


def severity_label_of(target_class) -> SeverityLabel:
    return SeverityLabel(int(target_class))
