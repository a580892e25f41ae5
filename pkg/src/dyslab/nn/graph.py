"""Ordered layer pipeline with a per-call tape for backprop.

forward() threads activations through the layers; when given a tape list it
records (layer, ctx, output) entries so backward() can replay them in
reverse. All per-call state lives on the tape and the skip stacks, so one
graph instance serves concurrent eval and Grad-CAM requests safely.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..errors import ArchMismatch, DuplicateName, ShapeMismatch
from .layers import Layer
from .weights import WeightStore


@dataclass
class TapeEntry:
    layer: Layer
    ctx: dict
    out: np.ndarray


class ModelGraph:
    """A named architecture: ordered layers over a fixed input shape."""

    def __init__(self, arch: str, input_shape: tuple, layers: list):
        self.arch = arch
        self.input_shape = tuple(input_shape)
        self.layers = list(layers)
        seen = set()
        for layer in self.layers:
            if layer.name in seen:
                raise DuplicateName(f"duplicate layer name {layer.name!r}")
            seen.add(layer.name)

    def init_weights(self, seed: int) -> None:
        rng = np.random.Generator(np.random.PCG64(seed))
        for layer in self.layers:
            layer.init(rng)

    def layer(self, name: str) -> Layer:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise ArchMismatch(f"no layer named {name!r} in {self.arch}")

    def forward(self, x, *, train=False, rng=None, tape=None):
        x = np.asarray(x)
        if x.ndim != len(self.input_shape) + 1 or x.shape[1:] != self.input_shape:
            raise ShapeMismatch(
                f"{self.arch}: expected [N, {', '.join(map(str, self.input_shape))}],"
                f" got {x.shape}")
        skips = []
        for layer in self.layers:
            ctx = {} if tape is not None else None
            x = layer.forward(x, ctx, train=train, rng=rng, skips=skips)
            if tape is not None:
                tape.append(TapeEntry(layer, ctx, x))
        return x

    def backward(self, tape, dy, stop_layer=None):
        """Walk the tape in reverse; returns ({param: grad}, d_stop).

        With stop_layer set, stops before differentiating through that layer
        and returns the gradient w.r.t. its output (used by Grad-CAM).
        """
        grads = {}
        skip_grads = []
        for entry in reversed(tape):
            if stop_layer is not None and entry.layer.name == stop_layer:
                return grads, dy
            dy, layer_grads = entry.layer.backward(dy, entry.ctx,
                                                   skip_grads=skip_grads)
            for key, g in layer_grads.items():
                grads[f"{entry.layer.name}.{key}"] = g
        if stop_layer is not None:
            raise ArchMismatch(f"stop layer {stop_layer!r} not on the tape")
        return grads, dy

    def params(self) -> dict:
        """Live parameter references keyed 'layer.param' (insertion order)."""
        out = {}
        for layer in self.layers:
            for key, arr in layer.params().items():
                out[f"{layer.name}.{key}"] = arr
        return out

    def num_params(self) -> int:
        return sum(int(a.size) for a in self.params().values())

    def snapshot(self) -> WeightStore:
        return WeightStore((k, v.copy()) for k, v in self.params().items())

    def set_weights(self, store: WeightStore) -> None:
        own = self.params()
        if list(own) != store.names():
            raise ArchMismatch(
                f"{self.arch}: weight names do not match architecture")
        for layer in self.layers:
            for key in layer.params():
                arr = store[f"{layer.name}.{key}"]
                if arr.shape != layer.params()[key].shape:
                    raise ArchMismatch(
                        f"{layer.name}.{key}: shape {arr.shape} vs "
                        f"{layer.params()[key].shape}")
                setattr(layer, key, arr.astype(np.float32).copy())

    def config_text(self) -> str:
        lines = [f"arch {self.arch}",
                 f"input {'x'.join(map(str, self.input_shape))}"]
        for layer in self.layers:
            extra = layer.hyperparams()
            lines.append(f"{type(layer).__name__.lower()} {layer.name}" +
                         (f" {extra}" if extra else ""))
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.config_text().encode("utf-8")).hexdigest()
