"""
Spectrogram translation, transfer learning, and audio reconstruction
====================================================================

Two stories in one script.

First, transfer learning on the U-Net translator: pretrain a small U-Net
on plentiful synthetic (noisy, clean) image pairs, save the weights, then
fine-tune on a *scarce* target set and compare against training from
scratch on the same scarce set. This mirrors the cross-lingual recipe:
pretrain where data is rich, transfer to where it is not.

Second, waveform reconstruction: turn a log-mel image back into playable
audio via iterative phase recovery, the final step of the translation
pipeline.

CLI equivalents:

    dyslab train-s2s --data-root <pairs> --out <dir>
    dyslab finetune-s2s --data-root <pairs> --init <weights.dysw> --out <dir>
    dyslab translate --model unet.dysw --in clip.wav --out clean.dyst --wav clean.wav
"""

from pathlib import Path

import numpy as np

from dyslab.audio_io import AudioClip, write_wav_pcm16
from dyslab.dsp import resize_bilinear
from dyslab.features import mel_image_to_audio, unet_input
from dyslab.models import build_unet, save_model
from dyslab.train import (PairedDataset, evaluate_unet, finetune, train_unet)

OUT = Path(__file__).resolve().parent / "demo_out"
OUT.mkdir(exist_ok=True)

HW = 64  # small images keep the demo quick; the real pipeline uses 128


def field_pairs(n, seed, coarse):
    """(noisy, clean) pairs: a smooth random field plus Gaussian noise."""
    rng = np.random.Generator(np.random.PCG64(seed))
    pairs = []
    for _ in range(n):
        clean = 0.1 + 0.7 * resize_bilinear(rng.random((coarse, coarse)), HW, HW)
        noisy = np.clip(clean + rng.normal(0.0, 0.15, clean.shape), 0.0, 1.0)
        pairs.append((noisy[None].astype(np.float32),
                      clean[None].astype(np.float32)))
    return PairedDataset(pairs)


# -- stage 1: pretrain where data is plentiful -----------------------------------
rich = field_pairs(150, seed=100, coarse=4)
pretrained = build_unet(seed=0, base_filters=16, input_hw=HW)
report, _ = train_unet(pretrained, rich, epochs=1, lr=1e-4, batch=8, seed=0)
print(f"pretrain: {len(rich)} pairs, final L1 {report.epochs[-1].train_loss:.4f}")
weights = OUT / "unet_pretrained.dysw"
save_model(pretrained, weights)

# -- stage 2: fine-tune on scarce target data ------------------------------------
scarce_train = field_pairs(12, seed=200, coarse=8)
scarce_held = field_pairs(16, seed=201, coarse=8)

tuned = build_unet(seed=1, base_filters=16, input_hw=HW)
finetune(tuned, str(weights), scarce_train, epochs=6, lr=1e-4, batch=8, seed=1)
tuned_l1 = evaluate_unet(tuned, scarce_held)

scratch = build_unet(seed=1, base_filters=16, input_hw=HW)
train_unet(scratch, scarce_train, epochs=6, lr=1e-4, batch=8, seed=1)
scratch_l1 = evaluate_unet(scratch, scarce_held)

print(f"held-out L1 after 6 epochs on {len(scarce_train)} pairs:")
print(f"  fine-tuned from pretrained weights: {tuned_l1:.4f}")
print(f"  trained from scratch:               {scratch_l1:.4f}")

# -- mel image back to audio -------------------------------------------------------
# Build a harmonic clip, take the exact 128x128 log-mel image the U-Net
# consumes/produces, and invert it: undo the dB compression, project mel
# back to linear frequencies, and recover phase with Griffin-Lim.
rate = 16000
t = np.arange(rate) / rate
clip = AudioClip(samples=0.5 * np.sin(2 * np.pi * 330 * t)
                 + 0.25 * np.sin(2 * np.pi * 660 * t), sample_rate=rate)
image = unet_input(clip)     # [1, 128, 128] in [0, 1]
# The 128-frame canvas fixes the output duration (~2 s at hop 256), so the
# reconstruction reflects the model's image size, not the source length.
audio = mel_image_to_audio(image[0], n_iters=32, seed=0)
wav_path = OUT / "reconstructed.wav"
write_wav_pcm16(audio, wav_path)
print(f"\nreconstructed {len(audio.samples) / audio.sample_rate:.2f}s of audio "
      f"-> {wav_path}")
