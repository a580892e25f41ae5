"""The three architectures: shapes, decoding, goldens, and weight manifests."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dyslab.errors import ArchMismatch, MissingFile, ShapeMismatch, ValueOutOfRange
from dyslab.models import (
    DETECT_NEGATIVE,
    DETECT_POSITIVE,
    SeverityLabel,
    argmax_label,
    build_detector,
    build_severity,
    build_unet,
    check_manifest,
    decode_detection,
    detect_probability,
    load_model,
    manifest_path,
    manifest_text,
    save_model,
    severity_probabilities,
    translate_spectrogram,
)
from dyslab.nn import WeightStore

# Parameter totals computed once from the layer shapes and frozen.
DETECTOR_PARAMS = 267_009
SEVERITY_PARAMS = 4_287_620
UNET_PARAMS = 8_629_921


def rng_image(shape, seed=0):
    return np.random.Generator(np.random.PCG64(seed)).random(shape).astype(np.float32)


class TestSeverityLabel:
    def test_fixed_index_mapping(self):
        assert [l.value for l in SeverityLabel] == [0, 1, 2, 3]
        assert SeverityLabel.VERY_LOW.key == "very_low"
        assert SeverityLabel.HIGH.key == "high"

    def test_key_round_trip(self):
        for label in SeverityLabel:
            assert SeverityLabel.from_key(label.key) is label

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueOutOfRange):
            SeverityLabel.from_key("extreme")


class TestBuilders:
    def test_detector_parameter_golden(self):
        assert build_detector().num_params() == DETECTOR_PARAMS

    def test_severity_parameter_golden(self):
        assert build_severity().num_params() == SEVERITY_PARAMS

    def test_unet_parameter_golden(self):
        assert build_unet().num_params() == UNET_PARAMS

    def test_same_seed_identical_weights(self):
        assert build_detector(5).snapshot().identical(build_detector(5).snapshot())

    def test_unet_zeros_keeps_shape(self):
        model = build_unet(seed=0, base_filters=4, input_hw=32)
        out = model.forward(np.zeros((1, 1, 32, 32), dtype=np.float32))
        assert out.shape == (1, 1, 32, 32)

    def test_unet_rejects_resolution_not_multiple_of_16(self):
        with pytest.raises(ValueOutOfRange):
            build_unet(input_hw=100)

    def test_unet_is_resolution_locked(self):
        model = build_unet(seed=0, base_filters=4, input_hw=32)
        with pytest.raises(ShapeMismatch):
            translate_spectrogram(model, rng_image((1, 64, 64)))


class TestDetector:
    def test_zeroed_weights_give_half(self):
        model = build_detector(0)
        zeros = WeightStore()
        for name, arr in model.snapshot().items():
            zeros.add(name, np.zeros_like(arr))
        model.set_weights(zeros)
        p = detect_probability(model, np.zeros((1, 64, 64), dtype=np.float32))
        assert p == 0.5

    def test_probability_in_open_interval(self):
        p = detect_probability(build_detector(1), rng_image((1, 64, 64)))
        assert 0.0 < p < 1.0

    def test_threshold_tie_goes_positive(self):
        assert decode_detection(0.5) == DETECT_POSITIVE
        assert decode_detection(0.499) == DETECT_NEGATIVE
        assert decode_detection(0.9) == DETECT_POSITIVE

    def test_input_shape_validated(self):
        with pytest.raises(ShapeMismatch):
            detect_probability(build_detector(1), rng_image((1, 32, 32)))

    def test_input_range_validated(self):
        img = np.full((1, 64, 64), 1.5, dtype=np.float32)
        with pytest.raises(ValueOutOfRange):
            detect_probability(build_detector(1), img)

    def test_tiny_numeric_slack_tolerated(self):
        img = np.zeros((1, 64, 64), dtype=np.float32)
        img[0, 0, 0] = -1e-7  # resize/normalize roundoff must not be fatal
        detect_probability(build_detector(1), img)


class TestSeverity:
    def test_fresh_model_emits_valid_distribution(self):
        probs = severity_probabilities(build_severity(3), rng_image((1, 128, 128)))
        assert probs.shape == (4,)
        assert abs(float(probs.sum()) - 1.0) < 1e-6
        assert np.all(probs > 0) and np.all(probs < 1)

    @given(st.integers(0, 2**31 - 1))
    def test_probabilities_sum_to_one(self, seed):
        model = TestSeverity._model()
        probs = severity_probabilities(model, rng_image((1, 128, 128), seed))
        assert abs(float(probs.sum()) - 1.0) < 1e-6
        assert np.all(probs > 0)

    _cached = None

    @classmethod
    def _model(cls):
        if cls._cached is None:
            cls._cached = build_severity(3)
        return cls._cached

    def test_argmax_oracle(self):
        assert argmax_label([0.1, 0.2, 0.4, 0.3]) is SeverityLabel.MEDIUM

    def test_argmax_tie_breaks_low(self):
        assert argmax_label([0.25, 0.25, 0.25, 0.25]) is SeverityLabel.VERY_LOW

    def test_argmax_needs_four_entries(self):
        with pytest.raises(ShapeMismatch):
            argmax_label([0.5, 0.5])

    @given(hnp.arrays(np.float64, (4,), elements=st.floats(-5, 5)),
           st.floats(0.1, 10), st.floats(-3, 3))
    def test_argmax_invariant_under_monotone_logit_rescale(self, logits,
                                                           scale, shift):
        from dyslab.nn import Softmax
        sm = Softmax("s")
        base = argmax_label(sm.forward(logits[None])[0])
        moved = argmax_label(sm.forward((logits * scale + shift)[None])[0])
        assert base is moved


class TestTranslate:
    MODEL = build_unet(seed=2, base_filters=4, input_hw=32)

    def test_output_in_open_unit_interval(self):
        out = translate_spectrogram(self.MODEL, rng_image((1, 32, 32)))
        assert out.shape == (1, 32, 32)
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_2d_input_gives_2d_output(self):
        out = translate_spectrogram(self.MODEL, rng_image((32, 32)))
        assert out.shape == (32, 32)

    def test_eval_mode_repeatable(self):
        img = rng_image((1, 32, 32), 9)
        a = translate_spectrogram(self.MODEL, img)
        b = translate_spectrogram(self.MODEL, img)
        assert np.array_equal(a, b)

    def test_input_range_validated(self):
        with pytest.raises(ValueOutOfRange):
            translate_spectrogram(self.MODEL, np.full((1, 32, 32), -0.2,
                                                      dtype=np.float32))


class TestManifests:
    def test_save_writes_weights_and_manifest(self, tmp_path):
        model = build_detector(4)
        path = tmp_path / "detector.dysw"
        save_model(model, path)
        assert path.exists()
        sidecar = manifest_path(path)
        assert sidecar == str(path) + ".manifest"
        text = open(sidecar).read()
        assert "arch detector" in text
        assert f"params {DETECTOR_PARAMS}" in text

    def test_load_round_trip_identical(self, tmp_path):
        model = build_detector(4)
        path = tmp_path / "detector.dysw"
        save_model(model, path)
        other = load_model(build_detector(5), path)
        assert other.snapshot().identical(model.snapshot())

    def test_manifest_arch_mismatch(self, tmp_path):
        path = tmp_path / "severity.dysw"
        save_model(build_severity(0), path)
        with pytest.raises(ArchMismatch):
            load_model(build_detector(0), path)

    def test_missing_manifest(self, tmp_path):
        model = build_detector(4)
        path = tmp_path / "bare.dysw"
        save_model(model, path)
        import os
        os.remove(manifest_path(path))
        with pytest.raises(MissingFile):
            load_model(build_detector(4), path)
        # explicit opt-out skips the check
        load_model(build_detector(4), path, require_manifest=False)

    def test_tampered_manifest_rejected(self, tmp_path):
        model = build_detector(4)
        path = tmp_path / "detector.dysw"
        save_model(model, path)
        sidecar = manifest_path(path)
        text = open(sidecar).read().replace("arch detector", "arch severity")
        open(sidecar, "w").write(text)
        with pytest.raises(ArchMismatch):
            check_manifest(build_detector(4), path)

    def test_manifest_text_fields(self):
        model = build_detector(4)
        lines = manifest_text(model).splitlines()
        keys = [line.split(" ", 1)[0] for line in lines]
        assert keys == ["arch", "config", "params"]

    def test_explicit_store_saved(self, tmp_path):
        model = build_detector(4)
        best = model.snapshot()
        best["dense2.bias"][:] = 0.125
        path = tmp_path / "best.dysw"
        save_model(model, path, store=best)
        loaded = load_model(build_detector(0), path)
        assert loaded.snapshot()["dense2.bias"].tolist() == [0.125]
