"""End-to-end tests for the dyslab command-line interface.

Each subcommand is exercised through cli.main(argv) so exit codes, stdout
formats, and file outputs are all checked exactly as a shell user sees them.
"""

import re

import numpy as np
import pytest

from conftest import make_tone
from dyslab import __version__, cli
from dyslab.audio_io import AudioClip, load_tensor, load_wav, write_wav_pcm16
from dyslab.models import build_detector, build_severity, build_unet, save_model


def write_tone_wav(path, freq=440.0, seconds=0.5, amplitude=0.5, rate=16000):
    clip = AudioClip(samples=make_tone(freq, seconds, rate, amplitude),
                     sample_rate=rate)
    write_wav_pcm16(clip, path)
    return path


@pytest.fixture(scope="module")
def wav_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("wavs")
    write_tone_wav(d / "tone.wav", seconds=1.0)
    return d


@pytest.fixture(scope="module")
def tone_path(wav_dir):
    return str(wav_dir / "tone.wav")


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory):
    """Freshly initialized (untrained) models saved with manifests."""
    d = tmp_path_factory.mktemp("models")
    save_model(build_detector(seed=3), d / "detector.dysw")
    save_model(build_severity(seed=5), d / "severity.dysw")
    save_model(build_unet(seed=2), d / "unet.dysw")
    return d


@pytest.fixture(scope="module")
def speech_root(tmp_path_factory):
    """Two-class WAV corpus: 8 clips per class, distinct tone ranges."""
    root = tmp_path_factory.mktemp("speech")
    rng = np.random.Generator(np.random.PCG64(11))
    for cls, base in (("control", 200.0), ("dysarthric", 1200.0)):
        sub = root / cls
        sub.mkdir()
        for i in range(8):
            freq = base + 40.0 * i + float(rng.uniform(0, 10))
            write_tone_wav(sub / f"clip{i}.wav", freq=freq, seconds=0.4)
    return root


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParserBasics:
    def test_no_subcommand_is_usage_error(self, capsys):
        code, _, err = run(capsys)
        assert code == 1
        assert "usage" in err.lower()

    def test_unknown_subcommand_is_usage_error(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 1
        assert err.startswith("dyslab:")

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_unknown_flag_is_usage_error(self, capsys):
        code, _, err = run(capsys, "eval-wer", "--bogus", "x")
        assert code == 1

    def test_missing_required_flag_names_it(self, capsys):
        code, _, err = run(capsys, "infer-detect", "--in", "whatever.wav")
        assert code == 1
        assert "--model" in err

    def test_error_text_goes_to_stderr_not_stdout(self, capsys):
        code, out, err = run(capsys, "eval-wer")
        assert code == 1
        assert out == ""
        assert err != ""


class TestExtract:
    def test_mfcc_writes_13_row_tensor(self, capsys, tone_path, tmp_path):
        out = tmp_path / "m.dyst"
        code, text, _ = run(capsys, "extract", "--in", tone_path,
                            "--out", str(out))
        assert code == 0
        tensor = load_tensor(out)
        assert tensor.shape[0] == 13
        assert tensor.dtype == np.float32
        dims = ", ".join(str(d) for d in tensor.shape)
        assert f"wrote {out} shape [{dims}]" in text

    def test_mel_writes_128_band_tensor(self, capsys, tone_path, tmp_path):
        out = tmp_path / "mel.dyst"
        code, _, _ = run(capsys, "extract", "--in", tone_path,
                         "--features", "mel", "--out", str(out))
        assert code == 0
        assert load_tensor(out).shape[0] == 128

    def test_detect_features_are_model_ready(self, capsys, tone_path, tmp_path):
        out = tmp_path / "d.dyst"
        code, _, _ = run(capsys, "extract", "--in", tone_path,
                         "--features", "detect", "--out", str(out))
        assert code == 0
        tensor = load_tensor(out)
        assert tensor.shape == (1, 64, 64)
        assert tensor.min() >= 0.0 and tensor.max() <= 1.0

    def test_severity_features_are_model_ready(self, capsys, tone_path,
                                               tmp_path):
        out = tmp_path / "s.dyst"
        code, _, _ = run(capsys, "extract", "--in", tone_path,
                         "--features", "severity", "--out", str(out))
        assert code == 0
        assert load_tensor(out).shape == (1, 128, 128)

    def test_pgm_render_matches_tensor_dims(self, capsys, tone_path, tmp_path):
        out, pgm = tmp_path / "d.dyst", tmp_path / "d.pgm"
        code, _, _ = run(capsys, "extract", "--in", tone_path,
                         "--features", "detect", "--out", str(out),
                         "--pgm", str(pgm))
        assert code == 0
        header = pgm.read_bytes().split(b"\n", 3)
        assert header[0] == b"P5"
        assert header[1] == b"64 64"

    def test_missing_out_flag_exits_1(self, capsys, tone_path):
        code, _, err = run(capsys, "extract", "--in", tone_path)
        assert code == 1
        assert "--out" in err

    def test_missing_input_file_exits_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "extract", "--in", str(tmp_path / "no.wav"),
                           "--out", str(tmp_path / "x.dyst"))
        assert code == 2
        assert "does not exist" in err

    def test_invalid_features_choice_exits_1(self, capsys, tone_path, tmp_path):
        code, _, _ = run(capsys, "extract", "--in", tone_path,
                         "--features", "plp", "--out", str(tmp_path / "x.dyst"))
        assert code == 1

    def test_garbage_wav_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"this is not audio")
        code, _, _ = run(capsys, "extract", "--in", str(bad),
                         "--out", str(tmp_path / "x.dyst"))
        assert code == 2


class TestConfigFiles:
    def test_config_supplies_flag_values(self, capsys, tone_path, tmp_path):
        out = tmp_path / "cfg.dyst"
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"in={tone_path}\nout={out}\nfeatures=mel\n")
        code, text, _ = run(capsys, "extract", "--config", str(cfg))
        assert code == 0
        assert load_tensor(out).shape[0] == 128

    def test_explicit_flag_beats_config(self, capsys, tone_path, tmp_path):
        cfg_out = tmp_path / "from_config.dyst"
        flag_out = tmp_path / "from_flag.dyst"
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"in={tone_path}\nout={cfg_out}\n")
        code, _, _ = run(capsys, "extract", "--config", str(cfg),
                         "--out", str(flag_out))
        assert code == 0
        assert flag_out.exists()
        assert not cfg_out.exists()

    def test_comments_and_blank_lines_ignored(self, capsys, tone_path,
                                              tmp_path):
        out = tmp_path / "c.dyst"
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"# a comment\n\nin={tone_path}\n  out = {out}  \n")
        code, _, _ = run(capsys, "extract", "--config", str(cfg))
        assert code == 0
        assert out.exists()

    def test_unknown_key_rejected(self, capsys, tone_path, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"in={tone_path}\nout=x.dyst\nwombat=3\n")
        code, _, err = run(capsys, "extract", "--config", str(cfg))
        assert code == 1
        assert "wombat" in err

    def test_untyped_value_for_typed_flag_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs=banana\n")
        code, _, err = run(capsys, "train-detect", "--config", str(cfg))
        assert code == 1
        assert "epochs" in err

    def test_bad_choice_value_rejected(self, capsys, tone_path, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("features=plp\n")
        code, _, err = run(capsys, "extract", "--config", str(cfg))
        assert code == 1

    def test_line_without_equals_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just some words\n")
        code, _, err = run(capsys, "extract", "--config", str(cfg))
        assert code == 1
        assert "key=value" in err

    def test_missing_config_file_exits_2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "extract", "--config",
                         str(tmp_path / "absent.cfg"))
        assert code == 2


class TestTrainDetectCommand:
    def test_end_to_end_writes_weights_and_reports(self, capsys, speech_root,
                                                   tmp_path):
        out = tmp_path / "run"
        code, text, _ = run(capsys, "train-detect",
                            "--data-root", str(speech_root),
                            "--out", str(out), "--epochs", "1",
                            "--seed", "7")
        assert code == 0
        for name in ("detector.dysw", "detector.best.dysw",
                     "detector.dysw.manifest", "detector_report.txt",
                     "detector_epochs.csv"):
            assert (out / name).exists(), name
        assert "trained detector on 11 clips (3 val, 2 test)" in text
        assert "weights " in text
        assert re.search(r"final epoch 1: train_loss \d+\.\d{4}", text)

    def test_env_var_supplies_data_root(self, capsys, speech_root, tmp_path,
                                        monkeypatch):
        monkeypatch.setenv("DYSLAB_DATA", str(speech_root))
        out = tmp_path / "envrun"
        code, _, _ = run(capsys, "train-detect", "--out", str(out),
                         "--epochs", "0")
        assert code == 0
        assert (out / "detector.dysw").exists()

    def test_flag_overrides_env_var(self, capsys, speech_root, tmp_path,
                                    monkeypatch):
        monkeypatch.setenv("DYSLAB_DATA", str(tmp_path / "nonexistent"))
        out = tmp_path / "flagrun"
        code, _, _ = run(capsys, "train-detect",
                         "--data-root", str(speech_root),
                         "--out", str(out), "--epochs", "0")
        assert code == 0

    def test_missing_data_root_exits_1(self, capsys, tmp_path, monkeypatch):
        monkeypatch.delenv("DYSLAB_DATA", raising=False)
        code, _, err = run(capsys, "train-detect", "--out", str(tmp_path))
        assert code == 1
        assert "--data-root" in err

    def test_nonexistent_data_root_exits_2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "train-detect",
                         "--data-root", str(tmp_path / "nope"),
                         "--out", str(tmp_path / "o"))
        assert code == 2

    def test_malformed_split_exits_1(self, capsys, speech_root, tmp_path):
        code, _, _ = run(capsys, "train-detect",
                         "--data-root", str(speech_root),
                         "--out", str(tmp_path / "o"),
                         "--split", "0.5,0.5")
        assert code == 1

    def test_split_fractions_not_summing_to_one_exit_2(self, capsys,
                                                       speech_root, tmp_path):
        code, _, _ = run(capsys, "train-detect",
                         "--data-root", str(speech_root),
                         "--out", str(tmp_path / "o"),
                         "--split", "0.5,0.4,0.2")
        assert code == 2


class TestInferCommands:
    def test_infer_detect_output_format(self, capsys, model_dir, tone_path):
        code, text, _ = run(capsys, "infer-detect",
                            "--model", str(model_dir / "detector.dysw"),
                            "--in", tone_path)
        assert code == 0
        line = text.strip().splitlines()[-1]
        assert re.fullmatch(r"(dysarthric|non_dysarthric) p=\d\.\d\d", line)

    def test_infer_severity_prints_distribution_and_label(self, capsys,
                                                          model_dir,
                                                          tone_path):
        code, text, _ = run(capsys, "infer-severity",
                            "--model", str(model_dir / "severity.dysw"),
                            "--in", tone_path)
        assert code == 0
        lines = text.strip().splitlines()
        assert len(lines) == 5
        probs = {}
        for line, key in zip(lines, ("very_low", "low", "medium", "high")):
            name, value = line.split()
            assert name == key
            probs[key] = float(value)
        assert abs(sum(probs.values()) - 1.0) < 1e-3
        label = lines[-1].split()[1]
        assert lines[-1].startswith("label ")
        assert label == max(probs, key=probs.get)

    def test_wrong_architecture_weights_exit_2(self, capsys, model_dir,
                                               tone_path):
        code, _, err = run(capsys, "infer-detect",
                           "--model", str(model_dir / "severity.dysw"),
                           "--in", tone_path)
        assert code == 2

    def test_missing_model_file_exits_2(self, capsys, tone_path, tmp_path):
        code, _, _ = run(capsys, "infer-detect",
                         "--model", str(tmp_path / "no.dysw"),
                         "--in", tone_path)
        assert code == 2


class TestGradcamCommand:
    def test_writes_ppm_and_reports_band_mass(self, capsys, model_dir,
                                              tone_path, tmp_path):
        out = tmp_path / "cam.ppm"
        code, text, _ = run(capsys, "gradcam",
                            "--model", str(model_dir / "severity.dysw"),
                            "--in", tone_path, "--out", str(out))
        assert code == 0
        header = out.read_bytes().split(b"\n", 3)
        assert header[0] == b"P6"
        assert header[1] == b"128 128"
        first = text.strip().splitlines()[0]
        assert re.fullmatch(r"class (very_low|low|medium|high) layer conv3",
                            first)
        masses = re.findall(r"\d\.\d{3}", text.splitlines()[1])
        assert len(masses) == 4
        assert abs(sum(float(m) for m in masses) - 1.0) < 5e-3

    def test_explicit_class_and_layer(self, capsys, model_dir, tone_path,
                                      tmp_path):
        out = tmp_path / "cam2.ppm"
        code, text, _ = run(capsys, "gradcam",
                            "--model", str(model_dir / "severity.dysw"),
                            "--in", tone_path, "--out", str(out),
                            "--class", "high", "--layer", "conv2")
        assert code == 0
        assert "class high layer conv2" in text

    def test_bogus_class_exits_2(self, capsys, model_dir, tone_path, tmp_path):
        code, _, _ = run(capsys, "gradcam",
                         "--model", str(model_dir / "severity.dysw"),
                         "--in", tone_path, "--out", str(tmp_path / "x.ppm"),
                         "--class", "catastrophic")
        assert code == 2

    def test_non_conv_layer_exits_2(self, capsys, model_dir, tone_path,
                                    tmp_path):
        code, _, _ = run(capsys, "gradcam",
                         "--model", str(model_dir / "severity.dysw"),
                         "--in", tone_path, "--out", str(tmp_path / "x.ppm"),
                         "--layer", "fc2")
        assert code == 2


class TestTranslateCommand:
    def test_writes_tensor_image_and_wav(self, capsys, model_dir, tone_path,
                                         tmp_path):
        out = tmp_path / "tr"
        code, text, _ = run(capsys, "translate",
                            "--model", str(model_dir / "unet.dysw"),
                            "--in", tone_path, "--out", str(out))
        assert code == 0
        tensor = load_tensor(out / "translated.dyst")
        assert tensor.shape == (128, 128)
        assert tensor.min() >= 0.0 and tensor.max() <= 1.0
        header = (out / "translated.pgm").read_bytes().split(b"\n", 3)
        assert header[0] == b"P5"
        assert header[1] == b"128 128"
        clip = load_wav(out / "translated.wav")
        assert clip.sample_rate == 16000
        assert clip.samples.ndim == 1
        assert re.search(r"\(\d+\.\d\d s\)", text)

    def test_wrong_architecture_exits_2(self, capsys, model_dir, tone_path,
                                        tmp_path):
        code, _, _ = run(capsys, "translate",
                         "--model", str(model_dir / "detector.dysw"),
                         "--in", tone_path, "--out", str(tmp_path / "t"))
        assert code == 2


class TestEvalWerCommand:
    def test_identical_pairs_score_zero(self, capsys, tmp_path):
        tsv = tmp_path / "pairs.tsv"
        tsv.write_text("hello world\thello world\n"
                       "the cat sat\tthe cat sat\n")
        code, text, _ = run(capsys, "eval-wer", "--pairs", str(tsv))
        assert code == 0
        assert text.strip() == "wer 0.0000"

    def test_mean_over_mixed_pairs(self, capsys, tmp_path):
        tsv = tmp_path / "pairs.tsv"
        tsv.write_text("a b c\ta b c\n"
                       "a b c\ta b d\n")
        code, text, _ = run(capsys, "eval-wer", "--pairs", str(tsv))
        assert code == 0
        assert text.strip() == "wer 0.1667"

    def test_missing_pairs_file_exits_2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "eval-wer",
                         "--pairs", str(tmp_path / "no.tsv"))
        assert code == 2

    def test_malformed_pairs_file_exits_2(self, capsys, tmp_path):
        tsv = tmp_path / "pairs.tsv"
        tsv.write_text("line without any tab\n")
        code, _, _ = run(capsys, "eval-wer", "--pairs", str(tsv))
        assert code == 2


class TestServeCommand:
    def test_missing_model_dir_flag_exits_1(self, capsys):
        code, _, err = run(capsys, "serve")
        assert code == 1
        assert "--model-dir" in err

    def test_nonexistent_model_dir_exits_2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "serve", "--model-dir",
                         str(tmp_path / "nothing"))
        assert code == 2
