"""Fixed feature pipelines shared by training, the CLI, and the service.

Every path starts by resampling to the 16 kHz pipeline rate:
  * detector input: 13-coefficient MFCC matrix -> 64x64, min-max normalized;
  * severity / translation input: 128-band log-mel image -> 128x128,
    min-max normalized;
  * translation output -> audio: invert the normalization against a fixed
    80 dB display range, undo the dB and mel mappings, then Griffin-Lim.
"""

from __future__ import annotations

import numpy as np

from .audio_io import PIPELINE_RATE, AudioClip, resample
from .dsp import (DB_TOP, StftParams, amplitude_to_db, griffin_lim,
                  mel_filterbank, mel_spectrogram, mel_to_linear, mfcc,
                  normalize_01, resize_bilinear)

PIPELINE_STFT = StftParams()  # 1024-point FFT, hop 256, periodic Hann


def detector_input(clip: AudioClip) -> np.ndarray:
    """[1, 64, 64] float32 MFCC image in [0, 1]."""
    clip = resample(clip, PIPELINE_RATE)
    coeffs = mfcc(clip, PIPELINE_STFT, n_mfcc=13).coeffs
    img = normalize_01(resize_bilinear(coeffs, 64, 64))
    return img.astype(np.float32)[None]


def severity_input(clip: AudioClip) -> np.ndarray:
    """[1, 128, 128] float32 log-mel image in [0, 1]."""
    clip = resample(clip, PIPELINE_RATE)
    mel = mel_spectrogram(clip, PIPELINE_STFT, n_mels=128)
    db = amplitude_to_db(mel)
    img = normalize_01(resize_bilinear(db.data, 128, 128))
    return img.astype(np.float32)[None]


unet_input = severity_input


def mel_image_to_audio(image01: np.ndarray, n_iters: int = 32,
                       seed: int = 0) -> AudioClip:
    """Rebuild a waveform from a normalized 128-band mel image.

    The [0, 1] image is mapped onto a [-DB_TOP, 0] dB scale, converted back
    to mel power, projected to a linear spectrogram, and phase-recovered
    with Griffin-Lim. Absolute loudness is not recoverable; the result is
    peak-safe and meant for listening comparisons.
    """
    img = np.asarray(image01, dtype=np.float64)
    if img.ndim == 3 and img.shape[0] == 1:
        img = img[0]
    db = img * DB_TOP - DB_TOP
    mel_power = np.power(10.0, db / 10.0)
    fb = mel_filterbank(img.shape[0], PIPELINE_STFT.n_fft, PIPELINE_RATE)
    magnitude = np.sqrt(mel_to_linear(mel_power, fb))
    return griffin_lim(magnitude, PIPELINE_STFT, n_iters=n_iters, seed=seed,
                       sample_rate=PIPELINE_RATE)
