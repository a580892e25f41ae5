"""
Training the binary dysarthria detector
=======================================

Builds a miniature two-class corpus of synthetic voiced clips: the
"control" class is clean harmonic voicing, the "dysarthric" class adds
the slow amplitude tremor and breathy noise floor typical of the
disorder. Ingests the corpus from a class-per-directory layout, trains
the detector CNN, and runs inference on a fresh clip.

The identical flow is available from the command line:

    dyslab train-detect --data-root <dir> --out <dir> --epochs 12 --seed 1337
    dyslab infer-detect --model <dir>/detector.dysw --in clip.wav
"""

import tempfile
from pathlib import Path

import numpy as np

from dyslab.audio_io import AudioClip, load_wav, write_wav_pcm16
from dyslab.features import detector_input
from dyslab.models import (build_detector, decode_detection,
                           detect_probability, load_model, save_model)
from dyslab.train import (SplitSpec, evaluate_classifier,
                          ingest_classification_dir, split, train_classifier)

OUT = Path(__file__).resolve().parent / "demo_out"
OUT.mkdir(exist_ok=True)


def voiced(f0, seconds=0.4, rate=16000, tremor=False, noise=0.0, seed=0):
    """Three-harmonic voicing; tremor/noise mimic dysarthric phonation."""
    rng = np.random.Generator(np.random.PCG64(seed))
    t = np.arange(int(rate * seconds)) / rate
    w = sum(a * np.sin(2 * np.pi * f0 * k * t)
            for k, a in ((1, 0.5), (2, 0.25), (3, 0.12)))
    if tremor:
        w = w * (0.55 + 0.45 * np.sin(2 * np.pi * 5.0 * t))
    if noise:
        w = w + noise * rng.standard_normal(len(t))
    return AudioClip(samples=0.8 * w / np.max(np.abs(w)), sample_rate=rate)


# -- build a corpus on disk, one directory per class ----------------------------
# Real corpora use the same layout: data_root/<class_name>/*.wav
data_root = Path(tempfile.mkdtemp(prefix="detector_corpus_"))
for name, kwargs in (("control", {}),
                     ("dysarthric", dict(tremor=True, noise=0.12))):
    class_dir = data_root / name
    class_dir.mkdir()
    for i in range(20):
        write_wav_pcm16(voiced(100.0 + 7.0 * i, seed=i, **kwargs),
                        class_dir / f"clip{i}.wav")
print(f"corpus at {data_root}: 20 control + 20 dysarthric clips")

# -- ingest and split ------------------------------------------------------------
dataset = ingest_classification_dir(data_root, feature="detect")
train_ds, val_ds, test_ds = split(dataset, SplitSpec(seed=1337))
print(f"split {len(dataset)} clips -> {len(train_ds)} train / "
      f"{len(val_ds)} val / {len(test_ds)} test")

# -- train ------------------------------------------------------------------------
model = build_detector(seed=1337)
report, best = train_classifier(model, train_ds, val_ds, epochs=12, lr=1e-3,
                                batch=8, seed=1337)
for e in report.epochs[::3] + [report.epochs[-1]]:
    print(f"  epoch {e.epoch:2d}: train loss {e.train_loss:.4f} "
          f"acc {e.train_metric:.2f} | val loss {e.val_loss:.4f} "
          f"acc {e.val_metric:.2f}")

_, test_acc, _ = evaluate_classifier(model, test_ds)
print(f"held-out test accuracy: {test_acc:.2f}")

# -- persist and reload ------------------------------------------------------------
weights = OUT / "detector.dysw"
save_model(model, weights)  # also writes detector.manifest next to it
reloaded = load_model(build_detector(seed=0), weights)
print(f"saved + reloaded weights from {weights}")

# -- inference on fresh clips ---------------------------------------------------------
for desc, clip in (("clean probe", voiced(150.0, seed=99)),
                   ("tremulous probe", voiced(150.0, tremor=True, noise=0.12,
                                              seed=99))):
    path = OUT / f"{desc.split()[0]}_probe.wav"
    write_wav_pcm16(clip, path)
    p = detect_probability(reloaded, detector_input(load_wav(path)))
    print(f"{desc}: {decode_detection(p)} (p = {p:.2f})")
