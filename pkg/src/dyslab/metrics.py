"""Evaluation utilities: accuracy, confusion matrices, WER, paired L1.

WER tokenization: lowercase, drop bracketed spans like "[noise]" wholesale,
strip punctuation but keep apostrophes, split on whitespace. The rate is
(substitutions + deletions + insertions) / reference length via word-level
Levenshtein with unit costs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import Empty, EmptyReference, LengthMismatch, OutOfRange

_BRACKETS = re.compile(r"\[[^\]]*\]")
_NON_WORD = re.compile(r"[^\w'\s]", re.UNICODE)


@dataclass(frozen=True)
class TranscriptPair:
    reference: str
    hypothesis: str


def accuracy(preds, labels) -> float:
    p, t = np.asarray(preds), np.asarray(labels)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} predictions vs {t.shape} labels")
    if p.size == 0:
        raise Empty("cannot score zero samples")
    return float((p == t).mean())


def confusion(preds, labels, n_classes: int) -> np.ndarray:
    """[n, n] counts, rows = true class, columns = predicted class."""
    p, t = np.asarray(preds, dtype=np.int64), np.asarray(labels, dtype=np.int64)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape} predictions vs {t.shape} labels")
    if p.size == 0:
        raise Empty("cannot score zero samples")
    if p.size and (min(p.min(), t.min()) < 0
                   or max(p.max(), t.max()) >= n_classes):
        raise OutOfRange(f"class indices outside [0, {n_classes})")
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (t, p), 1)
    return m


def tokenize_transcript(text: str) -> list:
    """Whitespace tokens after lowercasing and punctuation stripping."""
    cleaned = _BRACKETS.sub(" ", text.lower())
    cleaned = _NON_WORD.sub(" ", cleaned)
    return cleaned.split()


def levenshtein(a: list, b: list) -> int:
    """Word-level edit distance with unit substitution/deletion/insertion."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, wa in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, wb in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1,                      # deletion
                         cur[j - 1] + 1,                   # insertion
                         prev[j - 1] + (wa != wb))         # substitution
        prev = cur
    return prev[-1]


def wer(reference, hypothesis: str | None = None) -> float:
    """Word error rate (S + D + I) / N against the reference.

    Accepts a TranscriptPair or two strings. An empty reference with an
    empty hypothesis scores 0; an empty reference against real words has
    no defined rate and raises EmptyReference.
    """
    if isinstance(reference, TranscriptPair):
        reference, hypothesis = reference.reference, reference.hypothesis
    ref = tokenize_transcript(reference)
    hyp = tokenize_transcript(hypothesis or "")
    if not ref:
        if not hyp:
            return 0.0
        raise EmptyReference("reference is empty after tokenization")
    return levenshtein(ref, hyp) / len(ref)


def load_transcript_pairs(path) -> list:
    """Read tab-separated `reference<TAB>hypothesis` lines."""
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise Empty(f"{path}:{lineno}: expected reference<TAB>hypothesis")
            ref, hyp = line.split("\t", 1)
            pairs.append(TranscriptPair(reference=ref, hypothesis=hyp))
    if not pairs:
        raise Empty(f"{path} holds no transcript pairs")
    return pairs


def mean_wer(pairs) -> float:
    if not pairs:
        raise Empty("no transcript pairs to score")
    return float(np.mean([wer(p) for p in pairs]))


def eval_l1(model, pairs, batch_size: int = 8) -> float:
    """Mean over pairs of the mean absolute prediction error.

    `pairs` is a paired dataset or any sequence of (input, target) arrays.
    """
    if len(pairs) == 0:
        raise Empty("no pairs to evaluate")
    if hasattr(pairs, "stacked"):
        x, y = pairs.stacked()
    else:
        x = np.stack([np.asarray(a) for a, _ in pairs]).astype(np.float32)
        y = np.stack([np.asarray(b) for _, b in pairs]).astype(np.float32)
    total = 0.0
    for start in range(0, len(pairs), batch_size):
        out = model.forward(x[start:start + batch_size])
        total += float(np.abs(out - y[start:start + batch_size]).mean()) \
            * (min(start + batch_size, len(pairs)) - start)
    return total / len(pairs)
