"""
From waveform to features: MFCCs and log-mel images
===================================================

Synthesizes a short vowel-like tone, writes it as a WAV file, loads it
back, and walks the two feature pipelines every model in this package
consumes: a 13-coefficient MFCC matrix and a 128x128 log-mel image.

Run from anywhere; outputs land in demo_out/ next to this script.
"""

from pathlib import Path

import numpy as np

from dyslab.audio_io import (AudioClip, load_wav, resample, save_image_gray,
                             save_tensor, write_wav_pcm16)
from dyslab.dsp import (StftParams, amplitude_to_db, mel_spectrogram, mfcc,
                        normalize_01, stft)
from dyslab.features import detector_input, severity_input

OUT = Path(__file__).resolve().parent / "demo_out"
OUT.mkdir(exist_ok=True)

# -- synthesize one second of "speech" ----------------------------------------
# A fundamental plus two harmonics with slow amplitude modulation is enough
# structure to make every stage below produce something worth looking at.
rate = 22050  # deliberately not 16 kHz, so the resample step matters
t = np.arange(rate) / rate
wave = (0.5 * np.sin(2 * np.pi * 220 * t)
        + 0.25 * np.sin(2 * np.pi * 440 * t)
        + 0.12 * np.sin(2 * np.pi * 880 * t))
wave *= 0.6 + 0.4 * np.sin(2 * np.pi * 3 * t)

clip = AudioClip(samples=np.clip(wave, -1.0, 1.0), sample_rate=rate)
wav_path = OUT / "vowel.wav"
write_wav_pcm16(clip, wav_path)
print(f"wrote {wav_path} ({len(clip.samples)} samples at {clip.sample_rate} Hz)")

# -- load and normalize the sampling rate -------------------------------------
clip = load_wav(wav_path)
clip = resample(clip, 16000)
print(f"resampled to {clip.sample_rate} Hz, {len(clip.samples)} samples")

# -- the STFT underneath everything -------------------------------------------
params = StftParams()  # 1024-point FFT, hop 256, Hann window
spec = stft(clip, params)
print(f"STFT: {spec.shape[0]} frequency bins x {spec.shape[1]} frames (complex)")

# -- pipeline 1: MFCC matrix (detector features) -------------------------------
coeffs = mfcc(clip).coeffs
print(f"MFCC: {coeffs.shape[0]} coefficients x {coeffs.shape[1]} frames")
save_tensor(coeffs.astype(np.float32), OUT / "vowel_mfcc.dyst")

# -- pipeline 2: log-mel image (severity / translation features) ---------------
mel = mel_spectrogram(clip)                 # 128 mel bands, linear power
log_mel = amplitude_to_db(mel)              # compress to an 80 dB window
image = normalize_01(log_mel.data)          # [0, 1] for the networks
print(f"log-mel image: {image.shape}, range [{image.min():.2f}, {image.max():.2f}]")
save_image_gray(np.flipud(image), OUT / "vowel_mel.pgm")  # low freqs at bottom

# -- the exact tensors the models consume --------------------------------------
det = detector_input(clip)    # MFCC matrix resized to [1, 64, 64]
sev = severity_input(clip)    # log-mel image resized to [1, 128, 128]
print(f"detector input {list(det.shape)}, severity/translation input {list(sev.shape)}")
save_tensor(det, OUT / "vowel_detect.dyst")
save_tensor(sev, OUT / "vowel_severity.dyst")

print(f"\nall artifacts in {OUT}")
