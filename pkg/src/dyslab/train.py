"""Dataset assembly, splitting, training loops, and transfer learning.

Datasets are ingested from disk layouts:
  * classification: root/<class>/*.wav|*.dyst, one subdirectory per class;
  * paired translation: root/dysarthric/* and root/clean/* matched by stem.

Training is plain minibatch Adam with a per-epoch seeded shuffle. Reports
carry per-epoch losses and metrics; both the final and the best-validation
weights are kept. With a fixed seed and single-threaded numpy the resulting
weights are bit-identical across runs (wall-clock time is reported but is
the one field that cannot reproduce).
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .audio_io import load_wav, load_tensor
from .errors import (DataError, EmptyClass, MixedFeatureShapes, OutOfRange,
                     ShapeMismatch, TooSmall, ValueOutOfRange)
from .features import detector_input, severity_input
from .models import ModelGraph, SeverityLabel, load_model
from .nn import (AdamState, Sigmoid, Softmax, WeightStore, adam_step,
                 loss_bce, loss_ce, loss_l1)

FEATURE_PIPELINES = {
    "detect": detector_input,
    "severity": severity_input,
}

MANIFEST_NAME = "manifest.tsv"


@dataclass
class LabeledDataset:
    items: list  # (feature [C, H, W] float32, label index)
    class_names: list
    manifest_path: str | None = None

    def __post_init__(self):
        shapes = {np.shape(f) for f, _ in self.items}
        if len(shapes) > 1:
            raise MixedFeatureShapes(f"features carry mixed shapes {sorted(shapes)}")
        for _, label in self.items:
            if not 0 <= label < len(self.class_names):
                raise OutOfRange(f"label {label} outside {len(self.class_names)} classes")

    def __len__(self):
        return len(self.items)

    def stacked(self):
        x = np.stack([f for f, _ in self.items]).astype(np.float32)
        y = np.array([l for _, l in self.items], dtype=np.int64)
        return x, y

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset([self.items[i] for i in indices],
                              self.class_names, self.manifest_path)


@dataclass
class PairedDataset:
    pairs: list  # (noisy [1, H, W], clean [1, H, W]), both in [0, 1]
    keys: list = field(default_factory=list)

    def __post_init__(self):
        for a, b in self.pairs:
            if np.shape(a) != np.shape(b):
                raise MixedFeatureShapes(
                    f"pair members differ in shape: {np.shape(a)} vs {np.shape(b)}")

    def __len__(self):
        return len(self.pairs)

    def stacked(self):
        x = np.stack([a for a, _ in self.pairs]).astype(np.float32)
        y = np.stack([b for _, b in self.pairs]).astype(np.float32)
        return x, y

    def subset(self, indices) -> "PairedDataset":
        return PairedDataset([self.pairs[i] for i in indices],
                             [self.keys[i] for i in indices] if self.keys else [])


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple = (0.7, 0.2, 0.1)
    seed: int = 1337

    def __post_init__(self):
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
            raise ValueOutOfRange("split needs three non-negative fractions")
        if abs(sum(self.fractions) - 1.0) > 1e-6:
            raise ValueOutOfRange(f"fractions must sum to 1, got {self.fractions}")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    train_metric: float | None  # accuracy for classifiers, None for U-Net
    val_metric: float | None


@dataclass
class TrainReport:
    arch: str
    mode: str  # "scratch" | "finetuned"
    seed: int
    hyperparams: dict
    epochs: list
    best_epoch: int | None = None
    best_val_loss: float | None = None
    final_test_name: str | None = None
    final_test: float | None = None
    wall_seconds: float = 0.0


# -- ingestion ------------------------------------------------------------------

def _feature_files(directory):
    names = sorted(os.listdir(directory))
    return [n for n in names
            if n.lower().endswith(".wav") or n.lower().endswith(".dyst")]


def _load_feature(path, pipeline):
    if path.lower().endswith(".dyst"):
        feat = load_tensor(path).astype(np.float32)
        return feat if feat.ndim == 3 else feat[None]
    return pipeline(load_wav(path))


def _class_order(names):
    """Deterministic class indexing: canonical orders first, else sorted."""
    canon = [m.key for m in SeverityLabel]
    if sorted(names) == sorted(canon):
        return canon
    if len(names) == 2 and "dysarthric" in names:
        other = next(n for n in names if n != "dysarthric")
        return [other, "dysarthric"]  # positive class gets index 1
    return sorted(names)


def ingest_classification_dir(root, feature: str = "detect") -> LabeledDataset:
    """Load root/<class>/*.wav|*.dyst into features, lexicographically sorted.

    Writes a manifest (`<relative-path>\\t<class-index>` lines) next to the
    data so repeat ingests are checkable byte-for-byte.
    """
    if feature not in FEATURE_PIPELINES:
        raise ValueOutOfRange(f"unknown feature pipeline {feature!r}")
    pipeline = FEATURE_PIPELINES[feature]
    classes = sorted(d for d in os.listdir(root)
                     if os.path.isdir(os.path.join(root, d)))
    if not classes:
        raise EmptyClass(f"{root} holds no class subdirectories")
    classes = _class_order(classes)
    items, rows = [], []
    for idx, cls in enumerate(classes):
        cdir = os.path.join(root, cls)
        files = _feature_files(cdir)
        if not files:
            raise EmptyClass(f"class directory {cdir} holds no WAV/DYST files")
        for name in files:
            rel = f"{cls}/{name}"
            items.append((_load_feature(os.path.join(root, rel), pipeline), idx))
            rows.append(f"{rel}\t{idx}")
    manifest_path = os.path.join(root, MANIFEST_NAME)
    with open(manifest_path, "w", encoding="utf-8") as f:
        f.write("\n".join(rows) + "\n")
    return LabeledDataset(items=items, class_names=classes,
                          manifest_path=manifest_path)


def ingest_paired_dir(root, noisy_dir: str = "dysarthric",
                      clean_dir: str = "clean") -> PairedDataset:
    """Pair root/dysarthric/* with root/clean/* by identical file stem."""
    def stems(sub):
        d = os.path.join(root, sub)
        if not os.path.isdir(d):
            raise EmptyClass(f"{d} is not a directory")
        return {os.path.splitext(n)[0]: os.path.join(d, n)
                for n in _feature_files(d)}

    noisy, clean = stems(noisy_dir), stems(clean_dir)
    keys = sorted(set(noisy) & set(clean))
    if not keys:
        raise EmptyClass(f"{root}: no matching stems between "
                         f"{noisy_dir}/ and {clean_dir}/")
    pairs = [(_load_feature(noisy[k], severity_input),
              _load_feature(clean[k], severity_input)) for k in keys]
    return PairedDataset(pairs=pairs, keys=keys)


# -- splitting and encoding ------------------------------------------------------

def split(ds, spec: SplitSpec = SplitSpec()):
    """Seeded shuffle, then contiguous cuts at floor(a*n) and floor((a+b)*n)."""
    n = len(ds)
    if n < 10:
        raise TooSmall(f"need at least 10 items to split, got {n}")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    order = rng.permutation(n)
    a, b, _ = spec.fractions
    # The 1e-9 nudge keeps float noise in the cumulative fraction (for
    # example 0.7 + 0.2 at n = 190) from flooring one item short.
    cut1 = int(np.floor(a * n + 1e-9))
    cut2 = int(np.floor((a + b) * n + 1e-9))
    return (ds.subset(order[:cut1]), ds.subset(order[cut1:cut2]),
            ds.subset(order[cut2:]))


def one_hot(label: int, n_classes: int) -> np.ndarray:
    if not 0 <= label < n_classes:
        raise OutOfRange(f"label {label} outside [0, {n_classes})")
    v = np.zeros(n_classes, dtype=np.float32)
    v[label] = 1.0
    return v


# -- training loops --------------------------------------------------------------

def _batches(n, batch_size, order):
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _classifier_targets(model, labels, n_classes):
    if isinstance(model.layers[-1], Sigmoid):
        return labels.astype(np.float32)[:, None], loss_bce
    if isinstance(model.layers[-1], Softmax):
        t = np.stack([one_hot(int(l), n_classes) for l in labels])
        return t, loss_ce
    raise ShapeMismatch(f"{model.arch}: final layer is neither sigmoid nor softmax")


def _classifier_hits(model, out, labels):
    if isinstance(model.layers[-1], Sigmoid):
        return int(((out[:, 0] >= 0.5) == (labels >= 0.5)).sum())
    return int((np.argmax(out, axis=1) == labels).sum())


def evaluate_classifier(model, ds: LabeledDataset, batch_size: int = 64):
    """Eval-mode (loss, accuracy, predicted labels) over a dataset."""
    x, y = ds.stacked()
    n_classes = len(ds.class_names)
    total_loss, hits, preds = 0.0, 0, []
    for idx in _batches(len(ds), batch_size, np.arange(len(ds))):
        out = model.forward(x[idx])
        t, loss_fn = _classifier_targets(model, y[idx], n_classes)
        loss, _ = loss_fn(out, t)
        total_loss += loss * len(idx)
        hits += _classifier_hits(model, out, y[idx])
        if isinstance(model.layers[-1], Sigmoid):
            preds.extend((out[:, 0] >= 0.5).astype(int).tolist())
        else:
            preds.extend(np.argmax(out, axis=1).tolist())
    n = max(len(ds), 1)
    return total_loss / n, hits / n, np.array(preds, dtype=np.int64)


def train_classifier(model: ModelGraph, train: LabeledDataset,
                     val: LabeledDataset, epochs: int, lr: float = 1e-3,
                     batch: int = 32, seed: int = 1337,
                     mode: str = "scratch"):
    """Minibatch Adam on BCE (sigmoid head) or CE (softmax head).

    Returns (TrainReport, best_val_weights); the model itself ends at the
    final-epoch weights.
    """
    start = time.monotonic()
    x, y = train.stacked()
    if x.shape[1:] != model.input_shape:
        raise ShapeMismatch(
            f"dataset features {x.shape[1:]} vs model input {model.input_shape}")
    n_classes = len(train.class_names)
    rng = np.random.Generator(np.random.PCG64(seed))
    state = AdamState(lr=lr)
    params = model.params()
    report = TrainReport(arch=model.arch, mode=mode, seed=seed,
                         hyperparams={"epochs": epochs, "lr": lr, "batch": batch},
                         epochs=[])
    best = model.snapshot()
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train))
        loss_sum, hit_sum = 0.0, 0
        for idx in _batches(len(train), batch, order):
            tape = []
            out = model.forward(x[idx], train=True, rng=rng, tape=tape)
            t, loss_fn = _classifier_targets(model, y[idx], n_classes)
            loss, dout = loss_fn(out, t)
            grads, _ = model.backward(tape, dout)
            adam_step(params, grads, state)
            loss_sum += loss * len(idx)
            hit_sum += _classifier_hits(model, out, y[idx])
        val_loss, val_acc, _ = evaluate_classifier(model, val)
        stats = EpochStats(epoch=epoch,
                           train_loss=loss_sum / len(train),
                           val_loss=val_loss,
                           train_metric=hit_sum / len(train),
                           val_metric=val_acc)
        report.epochs.append(stats)
        if report.best_val_loss is None or val_loss < report.best_val_loss:
            report.best_val_loss = val_loss
            report.best_epoch = epoch
            best = model.snapshot()
    report.wall_seconds = time.monotonic() - start
    return report, best


def evaluate_unet(model, pairs: PairedDataset, batch_size: int = 8) -> float:
    """Eval-mode mean L1 between translated and target images."""
    x, y = pairs.stacked()
    total = 0.0
    for idx in _batches(len(pairs), batch_size, np.arange(len(pairs))):
        out = model.forward(x[idx])
        total += float(np.abs(out - y[idx]).mean()) * len(idx)
    return total / max(len(pairs), 1)


def train_unet(model: ModelGraph, pairs: PairedDataset, epochs: int = 300,
               lr: float = 1e-4, batch: int = 8, seed: int = 1337,
               val_pairs: PairedDataset | None = None, mode: str = "scratch"):
    """L1-loss Adam training for the translation U-Net."""
    start = time.monotonic()
    x, y = pairs.stacked()
    if x.shape[1:] != model.input_shape:
        raise ShapeMismatch(
            f"pairs {x.shape[1:]} vs model input {model.input_shape}")
    rng = np.random.Generator(np.random.PCG64(seed))
    state = AdamState(lr=lr)
    params = model.params()
    report = TrainReport(arch=model.arch, mode=mode, seed=seed,
                         hyperparams={"epochs": epochs, "lr": lr, "batch": batch},
                         epochs=[])
    best = model.snapshot()
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(pairs))
        loss_sum = 0.0
        for idx in _batches(len(pairs), batch, order):
            tape = []
            out = model.forward(x[idx], train=True, rng=rng, tape=tape)
            loss, dout = loss_l1(out, y[idx])
            grads, _ = model.backward(tape, dout)
            adam_step(params, grads, state)
            loss_sum += loss * len(idx)
        val_loss = (evaluate_unet(model, val_pairs)
                    if val_pairs is not None and len(val_pairs) else float("nan"))
        stats = EpochStats(epoch=epoch, train_loss=loss_sum / len(pairs),
                           val_loss=val_loss, train_metric=None, val_metric=None)
        report.epochs.append(stats)
        if not np.isnan(val_loss) and (report.best_val_loss is None
                                       or val_loss < report.best_val_loss):
            report.best_val_loss = val_loss
            report.best_epoch = epoch
            best = model.snapshot()
    report.wall_seconds = time.monotonic() - start
    return report, best


def finetune(model: ModelGraph, pretrained, train_data, epochs: int,
             lr: float, val_data=None, batch: int | None = None,
             seed: int = 1337):
    """Initialize from pretrained weights, then train as usual.

    `pretrained` is a WeightStore or a .dysw path (manifest-checked).
    Zero epochs leaves the weights bit-identical to the store.
    """
    if isinstance(pretrained, (str, os.PathLike)):
        load_model(model, pretrained)
    elif isinstance(pretrained, WeightStore):
        model.set_weights(pretrained)
    else:
        raise DataError(f"pretrained must be a WeightStore or path, "
                        f"got {type(pretrained).__name__}")
    if isinstance(train_data, PairedDataset):
        return train_unet(model, train_data, epochs=epochs, lr=lr,
                          batch=batch or 8, seed=seed, val_pairs=val_data,
                          mode="finetuned")
    return train_classifier(model, train_data, val_data, epochs=epochs,
                            lr=lr, batch=batch or 32, seed=seed,
                            mode="finetuned")


# -- report files ----------------------------------------------------------------

def write_report(report: TrainReport, out_dir, stem: str = "train") -> tuple:
    """Write `<stem>_report.txt` (key-value) and `<stem>_epochs.csv`."""
    os.makedirs(out_dir, exist_ok=True)
    kv_path = os.path.join(out_dir, f"{stem}_report.txt")
    csv_path = os.path.join(out_dir, f"{stem}_epochs.csv")
    lines = [
        f"arch {report.arch}",
        f"mode {report.mode}",
        f"seed {report.seed}",
    ]
    for key, value in report.hyperparams.items():
        lines.append(f"{key} {value}")
    if report.best_epoch is not None:
        lines.append(f"best_epoch {report.best_epoch}")
        lines.append(f"best_val_loss {report.best_val_loss:.6f}")
    if report.final_test is not None:
        lines.append(f"final_test_{report.final_test_name} {report.final_test:.6f}")
    lines.append(f"wall_seconds {report.wall_seconds:.3f}")
    with open(kv_path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "train_loss", "val_loss", "train_acc", "val_acc"])
        for st in report.epochs:
            writer.writerow([
                st.epoch, f"{st.train_loss:.6f}",
                "" if np.isnan(st.val_loss) else f"{st.val_loss:.6f}",
                "" if st.train_metric is None else f"{st.train_metric:.6f}",
                "" if st.val_metric is None else f"{st.val_metric:.6f}",
            ])
    return kv_path, csv_path
