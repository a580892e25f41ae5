"""Multilingual dysarthria toolkit.

Audio in, diagnosis out: WAV/PCM ingestion, mel/MFCC feature extraction,
from-scratch CNN training (detector, severity grader, translation U-Net),
Grad-CAM interpretation, WER evaluation, a command-line interface, and an
HTTP diagnosis service.
"""

__version__ = "0.1.0"

from . import audio_io, dsp, features, interpret, metrics, models, nn, train
from .audio_io import AudioClip, load_wav, write_wav_pcm16
from .errors import DataError, DyslabError, UsageError
from .models import (SeverityLabel, build_detector, build_severity,
                     build_unet, load_model, save_model)

__all__ = [
    "AudioClip", "DataError", "DyslabError", "SeverityLabel", "UsageError",
    "audio_io", "build_detector", "build_severity", "build_unet", "dsp",
    "features", "interpret", "load_model", "load_wav", "metrics", "models",
    "nn", "save_model", "train", "write_wav_pcm16", "__version__",
]
