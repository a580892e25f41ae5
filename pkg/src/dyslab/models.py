"""Model architectures, prediction helpers, and weight files with manifests.

Three fixed graphs:
  * detector  — [1, 64, 64] MFCC image -> sigmoid probability of dysarthria;
  * severity  — [1, 128, 128] mel image -> 4-way softmax over severity;
  * unet      — [1, 128, 128] mel image -> same-shape cleaned mel image.

Weights ride in .dysw files; a plain-text sidecar manifest (same path plus
".manifest") pins the architecture tag and config hash so stale or foreign
weights are rejected instead of silently misloaded.
"""

from __future__ import annotations

import enum
import os

import numpy as np

from .errors import ArchMismatch, MissingFile, ShapeMismatch, ValueOutOfRange
from .nn import (ConcatSkip, Conv2D, Dense, Dropout, Flatten, MaxPool2D,
                 ModelGraph, ReLU, SaveSkip, Sigmoid, Softmax, UpsampleNN,
                 WeightStore, load_weights, save_weights)

DETECTOR_INPUT = (1, 64, 64)
SEVERITY_INPUT = (1, 128, 128)
UNET_INPUT = (1, 128, 128)

DETECT_POSITIVE = "dysarthric"
DETECT_NEGATIVE = "non_dysarthric"


class SeverityLabel(enum.IntEnum):
    VERY_LOW = 0
    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> "SeverityLabel":
        try:
            return cls[key.strip().upper()]
        except KeyError:
            raise ValueOutOfRange(
                f"unknown severity class {key!r}; expected one of "
                f"{[m.key for m in cls]}") from None


def build_detector(seed: int = 1337) -> ModelGraph:
    """Binary dysarthria detector over 64x64 MFCC images (267,009 params)."""
    g = ModelGraph("detector", DETECTOR_INPUT, [
        Conv2D("conv1", 1, 16), ReLU("relu1"), MaxPool2D("pool1"),
        Conv2D("conv2", 16, 32), ReLU("relu2"), MaxPool2D("pool2"),
        Flatten("flatten"),
        Dense("dense1", 32 * 16 * 16, 32), ReLU("relu3"),
        Dense("dense2", 32, 1), Sigmoid("prob"),
    ])
    g.init_weights(seed)
    return g


def build_severity(seed: int = 1337) -> ModelGraph:
    """Four-class severity grader over 128x128 mel images."""
    g = ModelGraph("severity", SEVERITY_INPUT, [
        Conv2D("conv1", 1, 32), ReLU("relu1"), MaxPool2D("pool1"),
        Conv2D("conv2", 32, 64), ReLU("relu2"), MaxPool2D("pool2"),
        Conv2D("conv3", 64, 128), ReLU("relu3"), MaxPool2D("pool3"),
        Flatten("flatten"), Dropout("drop", 0.5),
        Dense("dense1", 128 * 16 * 16, 128), ReLU("relu4"),
        Dense("dense2", 128, 4), Softmax("prob"),
    ])
    g.init_weights(seed)
    return g


def build_unet(seed: int = 1337, base_filters: int = 32,
               input_hw: int = 128) -> ModelGraph:
    """Speech-translation U-Net: 4 encoder levels, skip concats, sigmoid head.

    The graph is locked to one square input resolution (divisible by 16).
    """
    if input_hw % 16 != 0:
        raise ValueOutOfRange(f"input size {input_hw} must be divisible by 16")
    f = [base_filters * (2 ** i) for i in range(4)]  # e.g. 32 64 128 256
    bott = base_filters * 16                          # e.g. 512
    layers = []
    in_ch = 1
    for i, ch in enumerate(f, start=1):
        layers += [
            Conv2D(f"enc{i}_a", in_ch, ch), ReLU(f"enc{i}_ra"),
            Conv2D(f"enc{i}_b", ch, ch), ReLU(f"enc{i}_rb"),
            SaveSkip(f"skip{i}"), MaxPool2D(f"pool{i}"),
        ]
        in_ch = ch
    layers += [
        Conv2D("bott_a", f[3], bott), ReLU("bott_ra"),
        Conv2D("bott_b", bott, bott), ReLU("bott_rb"),
    ]
    in_ch = bott
    for i in range(4, 0, -1):
        ch = f[i - 1]
        layers += [
            UpsampleNN(f"up{i}"), Conv2D(f"upc{i}", in_ch, ch),
            ConcatSkip(f"cat{i}"),
            Conv2D(f"dec{i}_a", 2 * ch, ch), ReLU(f"dec{i}_ra"),
            Conv2D(f"dec{i}_b", ch, ch), ReLU(f"dec{i}_rb"),
        ]
        in_ch = ch
    layers += [Conv2D("head", f[0], 1, kernel_size=1), Sigmoid("out")]
    g = ModelGraph("unet", (1, input_hw, input_hw), layers)
    g.init_weights(seed)
    return g


BUILDERS = {
    "detector": build_detector,
    "severity": build_severity,
    "unet": build_unet,
}


# -- prediction helpers --------------------------------------------------------

def _as_batch(model: ModelGraph, image: np.ndarray) -> np.ndarray:
    x = np.asarray(image, dtype=np.float32)
    if x.shape == model.input_shape:
        x = x[None]
    if x.ndim != len(model.input_shape) + 1 or x.shape[1:] != model.input_shape:
        raise ShapeMismatch(
            f"{model.arch} expects {model.input_shape}, got {np.shape(image)}")
    if x.size and (x.min() < -1e-6 or x.max() > 1.0 + 1e-6):
        raise ValueOutOfRange(
            f"{model.arch} input must be normalized to [0, 1]; "
            f"got range [{x.min():.4g}, {x.max():.4g}]")
    return x


def detect_probability(model: ModelGraph, image: np.ndarray) -> float:
    """Probability that a 64x64 MFCC image comes from dysarthric speech."""
    return float(model.forward(_as_batch(model, image))[0, 0])


def decode_detection(probability: float, threshold: float = 0.5) -> str:
    return DETECT_POSITIVE if probability >= threshold else DETECT_NEGATIVE


def severity_probabilities(model: ModelGraph, image: np.ndarray) -> np.ndarray:
    """Softmax distribution over the four severity classes."""
    return model.forward(_as_batch(model, image))[0]


def argmax_label(probs) -> SeverityLabel:
    """Highest-probability class; ties resolve to the lowest index."""
    p = np.asarray(probs)
    if p.shape != (len(SeverityLabel),):
        raise ShapeMismatch(f"expected {len(SeverityLabel)} probabilities, got {p.shape}")
    return SeverityLabel(int(np.argmax(p)))


def translate_spectrogram(model: ModelGraph, image: np.ndarray) -> np.ndarray:
    """Map a normalized mel image through the U-Net; output stays in [0, 1]."""
    x = np.asarray(image, dtype=np.float32)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    y = model.forward(_as_batch(model, x))[0]
    return y[0] if squeeze else y


# -- weight files + manifests --------------------------------------------------

def manifest_path(weights_path) -> str:
    return str(weights_path) + ".manifest"


def manifest_text(model: ModelGraph) -> str:
    return (f"arch {model.arch}\n"
            f"config {model.config_hash()}\n"
            f"params {model.num_params()}\n")


def save_model(model: ModelGraph, path, store: WeightStore | None = None) -> None:
    """Write weights (a snapshot by default) plus the sidecar manifest."""
    save_weights(store if store is not None else model.snapshot(), path)
    with open(manifest_path(path), "w", encoding="utf-8") as f:
        f.write(manifest_text(model))


def check_manifest(model: ModelGraph, path) -> None:
    mpath = manifest_path(path)
    if not os.path.isfile(mpath):
        raise MissingFile(f"weight manifest {mpath} not found")
    fields = {}
    with open(mpath, "r", encoding="utf-8") as f:
        for line in f:
            parts = line.split(maxsplit=1)
            if len(parts) == 2:
                fields[parts[0]] = parts[1].strip()
    if fields.get("arch") != model.arch:
        raise ArchMismatch(
            f"{path}: manifest arch {fields.get('arch')!r} != {model.arch!r}")
    if fields.get("config") != model.config_hash():
        raise ArchMismatch(f"{path}: manifest config hash does not match")


def load_model(model: ModelGraph, path, require_manifest: bool = True) -> ModelGraph:
    """Load weights into a freshly built graph, verifying the manifest."""
    if not os.path.isfile(path):
        raise MissingFile(str(path))
    if require_manifest:
        check_manifest(model, path)
    model.set_weights(load_weights(path))
    return model
