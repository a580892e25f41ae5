"""
Severity grading and Grad-CAM saliency
======================================

Trains the 4-class severity classifier on a synthetic task where the
class is encoded by the position of a bright blob, then asks Grad-CAM
*why* the network assigned a class: the heatmap should light up over the
blob. Writes the heat/overlay images so you can look for yourself.

CLI equivalents:

    dyslab train-severity --data-root <dir> --out <dir>
    dyslab infer-severity --model severity.dysw --in clip.wav
    dyslab gradcam --model severity.dysw --in clip.wav --out overlay.ppm
"""

from pathlib import Path

import numpy as np

from dyslab.audio_io import save_image_gray, save_image_rgb
from dyslab.interpret import grad_cam, heat_band_mass, overlay
from dyslab.models import (build_severity, argmax_label,
                           severity_probabilities)
from dyslab.train import LabeledDataset, train_classifier

OUT = Path(__file__).resolve().parent / "demo_out"
OUT.mkdir(exist_ok=True)

CLASSES = ["very_low", "low", "medium", "high"]
CENTERS = {0: (32, 32), 1: (32, 96), 2: (96, 32), 3: (96, 96)}
HW = 128


def blob_image(rng, cls):
    """One 128x128 image: noise floor plus a Gaussian blob in a quadrant."""
    yy, xx = np.mgrid[0:HW, 0:HW].astype(np.float64)
    cy, cx = CENTERS[cls]
    jy, jx = cy + rng.uniform(-10, 10), cx + rng.uniform(-10, 10)
    blob = np.exp(-((yy - jy) ** 2 + (xx - jx) ** 2) / (2 * 12.0 ** 2))
    img = np.clip(0.1 * rng.random((HW, HW)) + 0.9 * blob, 0.0, 1.0)
    return img[None].astype(np.float32)


rng = np.random.Generator(np.random.PCG64(9))
items = [(blob_image(rng, cls), cls) for cls in range(4) for _ in range(30)]
rng.shuffle(items)
train_ds = LabeledDataset(items[:96], CLASSES)
val_ds = LabeledDataset(items[96:], CLASSES)

model = build_severity(seed=1)
report, _ = train_classifier(model, train_ds, val_ds, epochs=3, lr=1e-3,
                             batch=32, seed=1)
last = report.epochs[-1]
print(f"after {last.epoch} epochs: train acc {last.train_metric:.2f}, "
      f"val acc {last.val_metric:.2f}")

# -- interrogate one validation image ------------------------------------------
image, true_cls = val_ds.items[0]
probs = severity_probabilities(model, image)
label = argmax_label(probs)
print(f"\ntrue class {CLASSES[true_cls]}; predicted distribution:")
for name, p in zip(CLASSES, probs):
    print(f"  {name:9s} {p:.4f}")
print(f"predicted label: {label.key}")

# -- where did the network look? -----------------------------------------------
cam = grad_cam(model, image, label)
print(f"\nGrad-CAM on layer {cam.source_layer!r} for class {int(label)}")

# The heatmap is upsampled to the input size; overlay() paints it on the
# image with a blue->red color ramp.
painted = overlay(cam, image[0])
save_image_gray(cam.heat, OUT / "cam_heat.pgm")
save_image_rgb(painted, OUT / "cam_overlay.ppm")

# Quarter-band energy mass: with mel images, rows are frequency bands, so
# this answers "which frequency range drove the decision".
masses = heat_band_mass(cam, n_bands=4)
print("heat mass by row quarter (top->bottom): "
      + " ".join(f"{m:.3f}" for m in masses))
print(f"\nheat + overlay images in {OUT}")
