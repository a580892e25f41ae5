"""HTTP-level tests for the diagnosis service.

A real ASGI app is built from freshly saved weight files and exercised
through fastapi's TestClient, so routing, multipart decoding, status codes,
and JSON schemas are all covered end to end.
"""

import base64
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import tone_wav_bytes
from dyslab import __version__
from dyslab.audio_io import AudioClip, decode_wav_bytes, encode_wav_pcm16
from dyslab.errors import ArchMismatch, MissingFile
from dyslab.models import build_detector, build_severity, build_unet, save_model
from dyslab.service import create_app, load_service_state

SEVERITY_KEYS = ("very_low", "low", "medium", "high")


def upload(data, name="clip.wav", mime="audio/wav"):
    return {"audio": (name, data, mime)}


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("served_models")
    save_model(build_detector(seed=3), d / "detector.dysw")
    save_model(build_severity(seed=5), d / "severity.dysw")
    save_model(build_unet(seed=2), d / "unet.dysw")
    return d


@pytest.fixture(scope="module")
def client(model_dir):
    app = create_app(str(model_dir))
    with TestClient(app) as c:
        yield c


@pytest.fixture(scope="module")
def wav_bytes():
    return tone_wav_bytes(seconds=1.0)


class TestStartup:
    def test_missing_weight_file_fails_fast(self, tmp_path):
        save_model(build_detector(seed=0), tmp_path / "detector.dysw")
        with pytest.raises(MissingFile):
            load_service_state(str(tmp_path))

    def test_mismatched_weights_fail_fast(self, tmp_path):
        save_model(build_severity(seed=0), tmp_path / "detector.dysw")
        save_model(build_severity(seed=0), tmp_path / "severity.dysw")
        save_model(build_unet(seed=0), tmp_path / "unet.dysw")
        with pytest.raises(ArchMismatch):
            create_app(str(tmp_path))

    def test_state_carries_package_version(self, model_dir):
        state = load_service_state(str(model_dir))
        assert state.version == __version__


class TestHealthz:
    def test_get_returns_ok(self, client):
        r = client.get("/healthz")
        assert r.status_code == 200
        assert r.text == "ok"

    def test_is_stable_across_requests(self, client):
        assert all(client.get("/healthz").text == "ok" for _ in range(5))

    def test_post_is_method_not_allowed(self, client):
        assert client.post("/healthz").status_code == 405


class TestDetectEndpoint:
    def test_schema_and_ranges(self, client, wav_bytes):
        r = client.post("/api/v1/detect", files=upload(wav_bytes))
        assert r.status_code == 200
        body = r.json()
        assert set(body) == {"probability", "label", "model_version"}
        assert 0.0 <= body["probability"] <= 1.0
        assert body["label"] in ("dysarthric", "non_dysarthric")
        assert body["model_version"] == __version__

    def test_label_matches_probability_threshold(self, client, wav_bytes):
        body = client.post("/api/v1/detect", files=upload(wav_bytes)).json()
        expected = "dysarthric" if body["probability"] >= 0.5 else "non_dysarthric"
        assert body["label"] == expected

    def test_missing_field_is_400(self, client):
        assert client.post("/api/v1/detect").status_code == 400

    def test_empty_upload_is_400(self, client):
        r = client.post("/api/v1/detect", files=upload(b""))
        assert r.status_code == 400

    def test_garbage_bytes_are_400(self, client):
        r = client.post("/api/v1/detect", files=upload(b"\x00\x01 not audio"))
        assert r.status_code == 400

    def test_text_file_is_400(self, client):
        r = client.post("/api/v1/detect",
                        files=upload(b"hello world", "notes.txt", "text/plain"))
        assert r.status_code == 400

    def test_over_30s_clip_is_413(self, client):
        r = client.post("/api/v1/detect",
                        files=upload(tone_wav_bytes(seconds=30.5)))
        assert r.status_code == 413

    def test_exactly_30s_clip_is_accepted(self, client):
        r = client.post("/api/v1/detect",
                        files=upload(tone_wav_bytes(seconds=30.0)))
        assert r.status_code == 200

    def test_duration_cap_applies_after_resampling(self, client):
        slow = tone_wav_bytes(seconds=40.0, rate=8000)
        assert client.post("/api/v1/detect", files=upload(slow)).status_code == 413
        fast = tone_wav_bytes(seconds=2.0, rate=48000)
        assert client.post("/api/v1/detect", files=upload(fast)).status_code == 200

    def test_silent_clip_is_422(self, client):
        silent = encode_wav_pcm16(
            AudioClip(samples=np.zeros(16000, dtype=np.float32),
                      sample_rate=16000))
        r = client.post("/api/v1/detect", files=upload(silent))
        assert r.status_code == 422


class TestSeverityEndpoint:
    def test_schema_and_distribution(self, client, wav_bytes):
        r = client.post("/api/v1/severity", files=upload(wav_bytes))
        assert r.status_code == 200
        body = r.json()
        assert set(body) == {"probabilities", "label", "model_version"}
        probs = body["probabilities"]
        assert set(probs) == set(SEVERITY_KEYS)
        assert abs(sum(probs.values()) - 1.0) < 1e-4
        assert all(0.0 <= p <= 1.0 for p in probs.values())

    def test_label_is_argmax_key(self, client, wav_bytes):
        body = client.post("/api/v1/severity", files=upload(wav_bytes)).json()
        probs = body["probabilities"]
        assert body["label"] == max(probs, key=probs.get)

    def test_silent_clip_is_422(self, client):
        silent = encode_wav_pcm16(
            AudioClip(samples=np.zeros(8000, dtype=np.float32),
                      sample_rate=16000))
        assert client.post("/api/v1/severity",
                           files=upload(silent)).status_code == 422

    def test_missing_field_is_400(self, client):
        assert client.post("/api/v1/severity").status_code == 400


class TestGradcamEndpoint:
    def test_overlay_decodes_to_128x128_ppm(self, client, wav_bytes):
        r = client.post("/api/v1/gradcam", files=upload(wav_bytes))
        assert r.status_code == 200
        body = r.json()
        assert set(body) == {"overlay_ppm_base64", "target_class",
                             "source_layer", "model_version"}
        ppm = base64.b64decode(body["overlay_ppm_base64"])
        header, dims, maxval, _ = ppm.split(b"\n", 3)
        assert header == b"P6"
        assert dims == b"128 128"
        assert maxval == b"255"
        assert body["target_class"] in SEVERITY_KEYS
        assert body["source_layer"] == "conv3"

    def test_payload_length_matches_dims(self, client, wav_bytes):
        body = client.post("/api/v1/gradcam", files=upload(wav_bytes)).json()
        ppm = base64.b64decode(body["overlay_ppm_base64"])
        payload = ppm.split(b"\n", 3)[3]
        assert len(payload) == 128 * 128 * 3

    def test_explicit_class_query(self, client, wav_bytes):
        r = client.post("/api/v1/gradcam?class=high", files=upload(wav_bytes))
        assert r.status_code == 200
        assert r.json()["target_class"] == "high"

    def test_unknown_class_is_422(self, client, wav_bytes):
        r = client.post("/api/v1/gradcam?class=bogus", files=upload(wav_bytes))
        assert r.status_code == 422

    def test_garbage_upload_is_400(self, client):
        r = client.post("/api/v1/gradcam", files=upload(b"nope"))
        assert r.status_code == 400


class TestTranslateEndpoint:
    def test_schema_and_payloads(self, client, wav_bytes):
        r = client.post("/api/v1/translate", files=upload(wav_bytes))
        assert r.status_code == 200
        body = r.json()
        assert set(body) == {"clean_spectrogram_pgm_base64",
                             "audio_wav_base64", "model_version"}
        pgm = base64.b64decode(body["clean_spectrogram_pgm_base64"])
        header, dims, maxval, payload = pgm.split(b"\n", 3)
        assert header == b"P5"
        assert dims == b"128 128"
        assert len(payload) == 128 * 128
        clip = decode_wav_bytes(base64.b64decode(body["audio_wav_base64"]))
        assert clip.sample_rate == 16000
        assert clip.samples.ndim == 1
        assert clip.samples.size > 0

    def test_silent_clip_is_422(self, client):
        silent = encode_wav_pcm16(
            AudioClip(samples=np.zeros(4000, dtype=np.float32),
                      sample_rate=16000))
        assert client.post("/api/v1/translate",
                           files=upload(silent)).status_code == 422

    def test_missing_field_is_400(self, client):
        assert client.post("/api/v1/translate").status_code == 400


class TestDeterminism:
    @pytest.mark.parametrize("endpoint", ["detect", "severity", "gradcam",
                                          "translate"])
    def test_identical_uploads_identical_json(self, client, wav_bytes,
                                              endpoint):
        first = client.post(f"/api/v1/{endpoint}", files=upload(wav_bytes))
        second = client.post(f"/api/v1/{endpoint}", files=upload(wav_bytes))
        assert first.status_code == second.status_code == 200
        assert first.content == second.content

    def test_concurrent_detects_match_serial(self, client, wav_bytes):
        serial = client.post("/api/v1/detect", files=upload(wav_bytes)).content

        def hit(_):
            return client.post("/api/v1/detect", files=upload(wav_bytes)).content

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(hit, range(8)))
        assert all(r == serial for r in results)

    def test_mixed_endpoints_under_concurrency(self, client, wav_bytes):
        expect = {
            ep: client.post(f"/api/v1/{ep}", files=upload(wav_bytes)).content
            for ep in ("detect", "severity")
        }

        def hit(ep):
            return ep, client.post(f"/api/v1/{ep}", files=upload(wav_bytes)).content

        jobs = ["detect", "severity"] * 4
        with ThreadPoolExecutor(max_workers=8) as pool:
            for ep, content in pool.map(hit, jobs):
                assert content == expect[ep]
