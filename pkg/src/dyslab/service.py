"""HTTP diagnosis service over the trained models.

Endpoints (multipart field "audio", WAV, at most 30 s after resampling):
  GET  /healthz                 -> "ok"
  POST /api/v1/detect           -> {probability, label, model_version}
  POST /api/v1/severity         -> {probabilities: {...}, label, model_version}
  POST /api/v1/gradcam?class=.. -> {overlay_ppm_base64, target_class, ...}
  POST /api/v1/translate        -> {clean_spectrogram_pgm_base64,
                                    audio_wav_base64, model_version}

Errors: 400 malformed/missing upload, 413 too long, 422 silent audio or
unknown class. Startup fails fast when any weight file or manifest is
missing or mismatched. Handlers share only immutable model state, so
identical uploads produce identical JSON, concurrently or serially.
"""

from __future__ import annotations

import base64
import os
import time
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, File, HTTPException, Query, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from . import __version__
from .audio_io import PIPELINE_RATE, decode_wav_bytes, encode_pgm, encode_ppm, \
    encode_wav_pcm16, resample
from .errors import DataError, ValueOutOfRange
from .features import (detector_input, mel_image_to_audio, severity_input,
                       unet_input)
from .interpret import grad_cam, overlay
from .models import (ModelGraph, SeverityLabel, argmax_label, build_detector,
                     build_severity, build_unet, decode_detection,
                     detect_probability, load_model, severity_probabilities,
                     translate_spectrogram)

MAX_SECONDS = 30.0
WEIGHT_FILES = {"detector": "detector.dysw", "severity": "severity.dysw",
                "unet": "unet.dysw"}


@dataclass(frozen=True)
class ServiceState:
    detector: ModelGraph
    severity: ModelGraph
    unet: ModelGraph
    version: str
    started_at: float


def load_service_state(model_dir) -> ServiceState:
    """Load and manifest-check all three models; raises on any problem."""
    builders = {"detector": build_detector, "severity": build_severity,
                "unet": build_unet}
    loaded = {}
    for key, fname in WEIGHT_FILES.items():
        path = os.path.join(model_dir, fname)
        loaded[key] = load_model(builders[key](), path)
    return ServiceState(detector=loaded["detector"],
                        severity=loaded["severity"], unet=loaded["unet"],
                        version=__version__, started_at=time.time())


def _clip_from_upload(audio: UploadFile | None):
    if audio is None:
        raise HTTPException(status_code=400, detail="missing multipart field 'audio'")
    data = audio.file.read()
    if not data:
        raise HTTPException(status_code=400, detail="empty upload")
    try:
        clip = decode_wav_bytes(data)
    except DataError as e:
        raise HTTPException(status_code=400, detail=f"malformed WAV: {e}") from e
    clip = resample(clip, PIPELINE_RATE)
    if clip.duration > MAX_SECONDS:
        raise HTTPException(status_code=413,
                            detail=f"clip is {clip.duration:.1f} s; limit is "
                                   f"{MAX_SECONDS:.0f} s")
    return clip


def _feature_or_422(clip, pipeline):
    feat = pipeline(clip)
    if not np.any(feat):
        raise HTTPException(status_code=422,
                            detail="silent audio: features are all zero")
    return feat


def create_app(model_dir, cors_origins=("*",)) -> FastAPI:
    state = load_service_state(model_dir)
    app = FastAPI(title="dyslab diagnosis service", version=state.version)
    app.add_middleware(CORSMiddleware, allow_origins=list(cors_origins),
                       allow_methods=["*"], allow_headers=["*"])

    @app.get("/healthz", response_class=PlainTextResponse)
    def healthz():
        return "ok"

    @app.post("/api/v1/detect")
    def detect(audio: UploadFile | None = File(None)):
        clip = _clip_from_upload(audio)
        feat = _feature_or_422(clip, detector_input)
        p = detect_probability(state.detector, feat)
        return {"probability": round(p, 6),
                "label": decode_detection(p),
                "model_version": state.version}

    @app.post("/api/v1/severity")
    def severity(audio: UploadFile | None = File(None)):
        clip = _clip_from_upload(audio)
        feat = _feature_or_422(clip, severity_input)
        probs = severity_probabilities(state.severity, feat)
        return {"probabilities": {label.key: round(float(p), 6)
                                  for label, p in zip(SeverityLabel, probs)},
                "label": argmax_label(probs).key,
                "model_version": state.version}

    @app.post("/api/v1/gradcam")
    def gradcam(audio: UploadFile | None = File(None),
                target: str | None = Query(None, alias="class")):
        clip = _clip_from_upload(audio)
        feat = _feature_or_422(clip, severity_input)
        if target is None:
            label = argmax_label(severity_probabilities(state.severity, feat))
        else:
            try:
                label = SeverityLabel.from_key(target)
            except ValueOutOfRange as e:
                raise HTTPException(status_code=422, detail=str(e)) from e
        cam = grad_cam(state.severity, feat, label)
        ppm = encode_ppm(overlay(cam, feat[0]))
        return {"overlay_ppm_base64": base64.b64encode(ppm).decode("ascii"),
                "target_class": label.key,
                "source_layer": cam.source_layer,
                "model_version": state.version}

    @app.post("/api/v1/translate")
    def translate(audio: UploadFile | None = File(None)):
        clip = _clip_from_upload(audio)
        feat = _feature_or_422(clip, unet_input)
        out = translate_spectrogram(state.unet, feat)[0]
        pgm = encode_pgm(np.flipud(out))  # low frequencies at the bottom
        wav = encode_wav_pcm16(mel_image_to_audio(out))
        return {"clean_spectrogram_pgm_base64":
                    base64.b64encode(pgm).decode("ascii"),
                "audio_wav_base64": base64.b64encode(wav).decode("ascii"),
                "model_version": state.version}

    return app
