"""
WER scoring and the HTTP diagnosis service
==========================================

First scores a handful of transcript pairs with the word error rate
metric — including the bracket-tag stripping used for annotated clinical
transcripts — then boots the full diagnosis service on a local port,
uploads a WAV to all four endpoints exactly like the browser UI does, and
prints what comes back.

CLI equivalents:

    dyslab eval-wer --pairs transcripts.tsv
    dyslab serve --model-dir <dir> --port 8080
"""

import json
import tempfile
import threading
import time
import urllib.request
import uuid
from pathlib import Path

import numpy as np
import uvicorn

from dyslab.audio_io import AudioClip, encode_wav_pcm16
from dyslab.metrics import load_transcript_pairs, mean_wer, wer
from dyslab.models import build_detector, build_severity, build_unet, save_model
from dyslab.service import create_app

OUT = Path(__file__).resolve().parent / "demo_out"
OUT.mkdir(exist_ok=True)

# -- word error rate ------------------------------------------------------------
print("single pairs:")
for ref, hyp in [
    ("the quick brown fox", "the quick brown fox"),
    ("the quick brown fox", "the quack brown fox"),
    ("please call me tomorrow morning", "please call tomorrow"),
    ("[cough] turn the lights ON.", "turn the lights on"),
]:
    print(f"  {wer(ref, hyp):.4f}  ref={ref!r} hyp={hyp!r}")

# Transcript files are reference<TAB>hypothesis, one pair per line.
tsv = OUT / "transcripts.tsv"
tsv.write_text("the snow blew out of the field\tthe snow flew out of the field\n"
               "hello world\thello world\n", encoding="utf-8")
pairs = load_transcript_pairs(tsv)
print(f"mean WER over {len(pairs)} pairs: {mean_wer(pairs):.4f}")

# -- boot the diagnosis service ---------------------------------------------------
# The service refuses to start unless the model directory holds weights for
# all three models, each next to its architecture manifest.
model_dir = Path(tempfile.mkdtemp(prefix="service_models_"))
save_model(build_detector(seed=3), model_dir / "detector.dysw")
save_model(build_severity(seed=5), model_dir / "severity.dysw")
save_model(build_unet(seed=2), model_dir / "unet.dysw")

app = create_app(str(model_dir))
config = uvicorn.Config(app, host="127.0.0.1", port=8093, log_level="error")
server = uvicorn.Server(config)
threading.Thread(target=server.run, daemon=True).start()

base = "http://127.0.0.1:8093"
for _ in range(100):  # wait for the port to come up
    try:
        with urllib.request.urlopen(f"{base}/healthz", timeout=1) as r:
            if r.status == 200:
                break
    except OSError:
        time.sleep(0.05)
print(f"\nservice up at {base} (models from {model_dir})")


def upload(endpoint, wav_bytes):
    """POST one WAV as multipart/form-data field 'audio'."""
    boundary = uuid.uuid4().hex
    body = (f"--{boundary}\r\n"
            f'Content-Disposition: form-data; name="audio"; '
            f'filename="clip.wav"\r\n'
            f"Content-Type: audio/wav\r\n\r\n").encode() \
        + wav_bytes + f"\r\n--{boundary}--\r\n".encode()
    req = urllib.request.Request(
        f"{base}{endpoint}", data=body, method="POST",
        headers={"Content-Type": f"multipart/form-data; boundary={boundary}"})
    with urllib.request.urlopen(req, timeout=30) as r:
        return json.loads(r.read())


t = np.arange(16000) / 16000.0
clip = AudioClip(samples=0.5 * np.sin(2 * np.pi * 440 * t), sample_rate=16000)
wav = encode_wav_pcm16(clip)

detect = upload("/api/v1/detect", wav)
print(f"\ndetect:   label={detect['label']} p={detect['probability']:.4f}")

severity = upload("/api/v1/severity", wav)
dist = " ".join(f"{k}={v:.3f}" for k, v in severity["probabilities"].items())
print(f"severity: label={severity['label']}  {dist}")

gradcam = upload("/api/v1/gradcam", wav)
print(f"gradcam:  class={gradcam['target_class']} "
      f"layer={gradcam['source_layer']} "
      f"overlay={len(gradcam['overlay_ppm_base64'])} base64 chars")

translate = upload("/api/v1/translate", wav)
print(f"translate: spectrogram={len(translate['clean_spectrogram_pgm_base64'])} "
      f"base64 chars, audio={len(translate['audio_wav_base64'])} base64 chars")

server.should_exit = True
print("\nservice stopped")
