"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dyslab.audio_io import AudioClip, encode_wav_pcm16, write_wav_pcm16

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[
        HealthCheck.too_slow,
        HealthCheck.data_too_large,
        HealthCheck.function_scoped_fixture,  # tmp files are overwritten per example
    ],
)
settings.load_profile("suite")


def make_tone(freq=440.0, seconds=1.0, rate=16000, amplitude=0.5):
    """Pure sine as float32 samples."""
    t = np.arange(int(round(seconds * rate)), dtype=np.float64) / rate
    return (amplitude * np.sin(2 * np.pi * freq * t)).astype(np.float32)


def make_voiced(seconds=1.0, rate=16000, seed=0):
    """Speech-shaped test signal: a few harmonics plus gentle noise."""
    rng = np.random.Generator(np.random.PCG64(seed))
    t = np.arange(int(round(seconds * rate)), dtype=np.float64) / rate
    y = (0.4 * np.sin(2 * np.pi * 140 * t)
         + 0.2 * np.sin(2 * np.pi * 280 * t + 0.3)
         + 0.1 * np.sin(2 * np.pi * 560 * t + 1.1)
         + 0.02 * rng.standard_normal(t.size))
    return np.clip(y, -1.0, 1.0).astype(np.float32)


@pytest.fixture
def tone_clip():
    return AudioClip(samples=make_tone(), sample_rate=16000)


@pytest.fixture
def voiced_clip():
    return AudioClip(samples=make_voiced(), sample_rate=16000)


@pytest.fixture
def tone_wav(tmp_path):
    path = tmp_path / "tone.wav"
    write_wav_pcm16(AudioClip(samples=make_tone(), sample_rate=16000), path)
    return path


@pytest.fixture
def voiced_wav(tmp_path):
    path = tmp_path / "voiced.wav"
    write_wav_pcm16(AudioClip(samples=make_voiced(), sample_rate=16000), path)
    return path


def tone_wav_bytes(freq=440.0, seconds=1.0, rate=16000, amplitude=0.5):
    clip = AudioClip(samples=make_tone(freq, seconds, rate, amplitude),
                     sample_rate=rate)
    return encode_wav_pcm16(clip)
