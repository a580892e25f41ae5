"""Command-line interface: one executable, one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 data error (bad file, shape, or
missing path), 3 internal invariant violation. Config files are plain
`key=value` lines whose keys mirror the flag names; explicit flags win.
All randomized defaults use seed 1337 so documented outputs reproduce.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .audio_io import (load_wav, save_image_gray, save_image_rgb, save_tensor,
                       write_wav_pcm16)
from .dsp import amplitude_to_db, mel_spectrogram, mfcc, normalize_01
from .errors import DataError, DyslabError, MissingFile, UsageError
from .features import (PIPELINE_STFT, detector_input, mel_image_to_audio,
                       severity_input, unet_input)
from .interpret import default_cam_layer, grad_cam, heat_band_mass, overlay
from .metrics import confusion, load_transcript_pairs, mean_wer
from .models import (SeverityLabel, argmax_label, build_detector,
                     build_severity, build_unet, decode_detection,
                     detect_probability, load_model, save_model,
                     severity_probabilities, translate_spectrogram)
from .train import (SplitSpec, evaluate_classifier, evaluate_unet, finetune,
                    ingest_classification_dir, ingest_paired_dir, split,
                    train_classifier, train_unet, write_report)

DEFAULT_SEED = 1337


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exit-1 errors."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _split_type(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated fractions")
    return tuple(float(p) for p in parts)


def _add_common_training_flags(p, epochs, lr, batch):
    p.add_argument("--data-root", default=None,
                   help="dataset root (default: $DYSLAB_DATA)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--lr", type=float, default=lr)
    p.add_argument("--batch", type=int, default=batch)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--split", type=_split_type, default=(0.7, 0.2, 0.1),
                   help="train,val,test fractions (default 0.7,0.2,0.1)")


def build_parser():
    parser = _Parser(prog="dyslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("extract", help="feature extraction to DYST",
                       add_help=True)
    p.add_argument("--in", dest="in_path", default=None, help="input WAV")
    p.add_argument("--features", choices=["mfcc", "mel", "detect", "severity"],
                   default="mfcc")
    p.add_argument("--out", default=None, help="output .dyst path")
    p.add_argument("--pgm", default=None, help="optional PGM render path")

    p = sub.add_parser("train-detect", help="train the binary detector")
    _add_common_training_flags(p, epochs=50, lr=1e-3, batch=32)

    p = sub.add_parser("train-severity", help="train the severity grader")
    _add_common_training_flags(p, epochs=10, lr=1e-3, batch=32)

    p = sub.add_parser("train-s2s", help="train the translation U-Net")
    _add_common_training_flags(p, epochs=300, lr=1e-4, batch=8)

    p = sub.add_parser("finetune-s2s", help="finetune the U-Net from weights")
    _add_common_training_flags(p, epochs=50, lr=1e-4, batch=8)
    p.add_argument("--init-weights", default=None, help="pretrained .dysw path")

    p = sub.add_parser("infer-detect", help="detect dysarthria in one clip")
    p.add_argument("--model", default=None, help="detector .dysw path")
    p.add_argument("--in", dest="in_path", default=None, help="input WAV")

    p = sub.add_parser("infer-severity", help="grade severity of one clip")
    p.add_argument("--model", default=None, help="severity .dysw path")
    p.add_argument("--in", dest="in_path", default=None, help="input WAV")

    p = sub.add_parser("translate", help="translate one clip to clean speech")
    p.add_argument("--model", default=None, help="U-Net .dysw path")
    p.add_argument("--in", dest="in_path", default=None, help="input WAV")
    p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("gradcam", help="render a Grad-CAM overlay")
    p.add_argument("--model", default=None, help="severity .dysw path")
    p.add_argument("--in", dest="in_path", default=None, help="input WAV")
    p.add_argument("--out", default=None, help="output overlay .ppm path")
    p.add_argument("--layer", default=None, help="conv layer (default: deepest)")
    p.add_argument("--class", dest="target_class", default=None,
                   help="very_low|low|medium|high (default: predicted)")

    p = sub.add_parser("eval-wer", help="mean WER over a TSV of pairs")
    p.add_argument("--pairs", default=None, help="reference<TAB>hypothesis lines")

    p = sub.add_parser("serve", help="run the diagnosis HTTP service")
    p.add_argument("--model-dir", default=None,
                   help="directory holding detector/severity/unet .dysw files")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")

    for sp in sub.choices.values():
        sp.add_argument("--config", default=None,
                        help="key=value config file; flags override")
    return parser, dict(sub.choices)


REQUIRED = {
    "extract": ["in_path", "out"],
    "train-detect": ["data_root", "out"],
    "train-severity": ["data_root", "out"],
    "train-s2s": ["data_root", "out"],
    "finetune-s2s": ["data_root", "out", "init_weights"],
    "infer-detect": ["model", "in_path"],
    "infer-severity": ["model", "in_path"],
    "translate": ["model", "in_path", "out"],
    "gradcam": ["model", "in_path", "out"],
    "eval-wer": ["pairs"],
    "serve": ["model_dir"],
}

# Flags that name existing input files/dirs, checked before any work starts.
INPUT_PATHS = ["in_path", "model", "init_weights", "data_root", "pairs",
               "model_dir"]


def _read_config(path) -> dict:
    if not os.path.isfile(path):
        raise MissingFile(f"config file {path} not found")
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _config_defaults(subparser, path) -> dict:
    """Validate and type-convert config values into argparse defaults."""
    config = _read_config(path)
    actions = {a.dest: a for a in subparser._actions
               if a.dest not in ("help", "config")}
    alias = {"in": "in_path", "class": "target_class"}
    defaults = {}
    for key, raw in config.items():
        dest = alias.get(key, key.replace("-", "_"))
        if dest not in actions:
            raise UsageError(f"config key {key!r} is not a flag of this subcommand")
        action = actions[dest]
        try:
            value = action.type(raw) if action.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"config key {key!r}: {exc}")
        if action.choices and value not in action.choices:
            raise UsageError(f"config key {key!r}: {raw!r} not in "
                             f"{sorted(action.choices)}")
        defaults[dest] = value
    return defaults


def _check_required(command, args):
    for dest in REQUIRED[command]:
        if getattr(args, dest, None) is None:
            flag = "--" + {"in_path": "in", "data_root": "data-root",
                           "init_weights": "init-weights",
                           "model_dir": "model-dir"}.get(dest, dest)
            raise UsageError(f"dyslab {command}: missing required flag {flag}")
    for dest in INPUT_PATHS:
        value = getattr(args, dest, None)
        if value is not None and not os.path.exists(value):
            raise MissingFile(f"{value} does not exist")


# -- subcommand bodies -----------------------------------------------------------

def _cmd_extract(args) -> int:
    clip = load_wav(args.in_path)
    if args.features == "mfcc":
        tensor = mfcc(clip, PIPELINE_STFT).coeffs.astype(np.float32)
    elif args.features == "mel":
        mel = amplitude_to_db(mel_spectrogram(clip, PIPELINE_STFT))
        tensor = mel.data.astype(np.float32)
    elif args.features == "detect":
        tensor = detector_input(clip)
    else:
        tensor = severity_input(clip)
    save_tensor(tensor, args.out)
    if args.pgm:
        grid = tensor[0] if tensor.ndim == 3 else tensor
        save_image_gray(normalize_01(grid), args.pgm)
    print(f"wrote {args.out} shape [{', '.join(map(str, tensor.shape))}]")
    return 0


def _train_classifier_cmd(args, kind: str) -> int:
    builder = build_detector if kind == "detect" else build_severity
    ds = ingest_classification_dir(args.data_root, feature=kind)
    spec = SplitSpec(fractions=args.split, seed=args.seed)
    train_ds, val_ds, test_ds = split(ds, spec)
    model = builder(seed=args.seed)
    report, best = train_classifier(model, train_ds, val_ds,
                                    epochs=args.epochs, lr=args.lr,
                                    batch=args.batch, seed=args.seed)
    test_preds = None
    if len(test_ds):
        _, test_acc, test_preds = evaluate_classifier(model, test_ds)
        report.final_test_name = "accuracy"
        report.final_test = test_acc
    os.makedirs(args.out, exist_ok=True)
    stem = "detector" if kind == "detect" else "severity"
    save_model(model, os.path.join(args.out, f"{stem}.dysw"))
    save_model(model, os.path.join(args.out, f"{stem}.best.dysw"), store=best)
    write_report(report, args.out, stem=stem)
    print(f"trained {stem} on {len(train_ds)} clips "
          f"({len(val_ds)} val, {len(test_ds)} test)")
    if report.epochs:
        last = report.epochs[-1]
        print(f"final epoch {last.epoch}: train_loss {last.train_loss:.4f} "
              f"val_loss {last.val_loss:.4f} val_acc {last.val_metric:.4f}")
    if report.final_test is not None:
        print(f"test accuracy {report.final_test:.4f}")
        if kind == "severity" and test_preds is not None:
            labels = np.array([l for _, l in test_ds.items])
            print("confusion (rows true, cols predicted):")
            print(confusion(test_preds, labels, len(test_ds.class_names)))
    print(f"weights {os.path.join(args.out, stem + '.dysw')}")
    return 0


def _cmd_train_s2s(args) -> int:
    pairs = ingest_paired_dir(args.data_root)
    spec = SplitSpec(fractions=args.split, seed=args.seed)
    train_p, val_p, test_p = split(pairs, spec)
    model = build_unet(seed=args.seed)
    report, best = train_unet(model, train_p, epochs=args.epochs, lr=args.lr,
                              batch=args.batch, seed=args.seed, val_pairs=val_p)
    return _finish_unet(args, model, best, report, test_p)


def _cmd_finetune_s2s(args) -> int:
    pairs = ingest_paired_dir(args.data_root)
    spec = SplitSpec(fractions=args.split, seed=args.seed)
    train_p, val_p, test_p = split(pairs, spec)
    model = build_unet(seed=args.seed)
    report, best = finetune(model, args.init_weights, train_p,
                            epochs=args.epochs, lr=args.lr, val_data=val_p,
                            batch=args.batch, seed=args.seed)
    return _finish_unet(args, model, best, report, test_p)


def _finish_unet(args, model, best, report, test_p) -> int:
    if len(test_p):
        report.final_test_name = "l1"
        report.final_test = evaluate_unet(model, test_p)
    os.makedirs(args.out, exist_ok=True)
    save_model(model, os.path.join(args.out, "unet.dysw"))
    save_model(model, os.path.join(args.out, "unet.best.dysw"), store=best)
    write_report(report, args.out, stem="unet")
    print(f"trained unet ({report.mode}) for {len(report.epochs)} epochs")
    if report.epochs:
        print(f"final train L1 {report.epochs[-1].train_loss:.4f}")
    if report.final_test is not None:
        print(f"test L1 {report.final_test:.4f}")
    print(f"weights {os.path.join(args.out, 'unet.dysw')}")
    return 0


def _cmd_infer_detect(args) -> int:
    model = load_model(build_detector(), args.model)
    p = detect_probability(model, detector_input(load_wav(args.in_path)))
    print(f"{decode_detection(p)} p={p:.2f}")
    return 0


def _cmd_infer_severity(args) -> int:
    model = load_model(build_severity(), args.model)
    probs = severity_probabilities(model, severity_input(load_wav(args.in_path)))
    for label, p in zip(SeverityLabel, probs):
        print(f"{label.key} {p:.4f}")
    print(f"label {argmax_label(probs).key}")
    return 0


def _cmd_translate(args) -> int:
    model = load_model(build_unet(), args.model)
    image = unet_input(load_wav(args.in_path))
    out = translate_spectrogram(model, image)[0]
    os.makedirs(args.out, exist_ok=True)
    dyst = os.path.join(args.out, "translated.dyst")
    pgm = os.path.join(args.out, "translated.pgm")
    wav = os.path.join(args.out, "translated.wav")
    save_tensor(out.astype(np.float32), dyst)
    save_image_gray(np.flipud(out), pgm)  # low frequencies at the bottom
    clip = mel_image_to_audio(out)
    write_wav_pcm16(clip, wav)
    print(f"wrote {dyst}, {pgm}, {wav} ({clip.duration:.2f} s)")
    return 0


def _cmd_gradcam(args) -> int:
    model = load_model(build_severity(), args.model)
    image = severity_input(load_wav(args.in_path))
    if args.target_class is None:
        target = argmax_label(severity_probabilities(model, image))
    else:
        target = SeverityLabel.from_key(args.target_class)
    layer = args.layer or default_cam_layer(model)
    cam = grad_cam(model, image, target, layer=layer)
    rgb = overlay(cam, image[0])
    save_image_rgb(rgb, args.out)
    masses = heat_band_mass(cam)
    print(f"class {target.key} layer {layer}")
    print("heat mass by frequency band (low→high): "
          + " ".join(f"{m:.3f}" for m in masses[::-1]))
    print(f"wrote {args.out}")
    return 0


def _cmd_eval_wer(args) -> int:
    pairs = load_transcript_pairs(args.pairs)
    print(f"wer {mean_wer(pairs):.4f}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(args.model_dir)
    print(f"serving on http://{args.host}:{args.port} "
          f"(models from {args.model_dir})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


COMMANDS = {
    "extract": _cmd_extract,
    "train-detect": lambda a: _train_classifier_cmd(a, "detect"),
    "train-severity": lambda a: _train_classifier_cmd(a, "severity"),
    "train-s2s": _cmd_train_s2s,
    "finetune-s2s": _cmd_finetune_s2s,
    "infer-detect": _cmd_infer_detect,
    "infer-severity": _cmd_infer_severity,
    "translate": _cmd_translate,
    "gradcam": _cmd_gradcam,
    "eval-wer": _cmd_eval_wer,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser, sub_map = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage())
        if getattr(args, "config", None):
            sub_map[args.command].set_defaults(
                **_config_defaults(sub_map[args.command], args.config))
            args = parser.parse_args(argv)  # explicit flags still win
        if getattr(args, "data_root", "missing") is None:
            args.data_root = os.environ.get("DYSLAB_DATA")
        _check_required(args.command, args)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"dyslab: {e}", file=sys.stderr)
        return 1
    except (DataError, OSError) as e:
        print(f"dyslab: {e}", file=sys.stderr)
        return 2
    except DyslabError as e:
        print(f"dyslab: internal error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
