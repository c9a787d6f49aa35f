"""Command-line surface: melspec, pool, render, flops, demo.

Exit codes: 0 success, 1 domain error (too-short input, bad container),
2 usage or I/O error. Every subcommand accepts --json for
machine-readable output on stdout.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import container, flops as flops_mod, nn
from .audio import decode_wav
from .errors import ConfigError, InputTooShortError, SimpfError
from .features import SpectrogramConfig, log_mel
from .pooling import CompressionSpec, compress

DEFAULT_SEED = 7


def _spectrogram_config(args) -> SpectrogramConfig:
    return SpectrogramConfig(
        n_fft=args.n_fft,
        hop=args.hop,
        n_mels=args.n_mels,
        f_min=args.f_min,
        f_max=args.f_max,
        log_floor=args.log_floor,
    )


def _emit(args, payload: dict, text: str):
    if args.json:
        print(json.dumps(payload))
    else:
        print(text)


def cmd_melspec(args) -> int:
    cfg = _spectrogram_config(args)
    clip = decode_wav(Path(args.wav).read_bytes())
    spec = log_mel(clip, cfg)
    Path(args.out).write_bytes(container.write_mel(spec))
    _emit(
        args,
        {"n_mels": spec.n_mels, "n_frames": spec.n_frames,
         "out": str(args.out), "data": spec.data.tolist()},
        f"{spec.n_mels} x {spec.n_frames}",
    )
    return 0


def cmd_pool(args) -> int:
    spec = CompressionSpec.parse(args.spec)
    source = container.read_spectrogram(Path(args.input).read_bytes())
    comp = compress(source, spec)
    Path(args.out).write_bytes(container.write_compressed(comp))
    ratio = comp.n_frames / comp.original_frames
    _emit(
        args,
        {"method": spec.method, "denominator": spec.denominator,
         "n_mels": comp.n_mels, "n_frames": comp.n_frames,
         "original_frames": comp.original_frames, "ratio": ratio,
         "out": str(args.out), "data": comp.data.tolist()},
        f"{comp.n_mels} x {comp.n_frames} (ratio {ratio:.3f})",
    )
    return 0


def render_pgm(data: np.ndarray) -> bytes:
    """Grayscale P5 image, time on x, low mel bins at the bottom.

    Values are min-max normalized per image; a constant image maps to
    mid-gray (0.5).
    """
    lo, hi = float(data.min()), float(data.max())
    if hi > lo:
        norm = (data - lo) / (hi - lo)
    else:
        norm = np.full_like(data, 0.5)
    pixels = np.round(norm[::-1, :] * 255).astype(np.uint8)
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode() + pixels.tobytes()


def cmd_render(args) -> int:
    outdir = Path(args.outdir)
    if not outdir.is_dir():
        raise FileNotFoundError(f"output directory {outdir} does not exist")
    entries = []
    for path in args.inputs:
        spec = container.read_spectrogram(Path(path).read_bytes())
        pgm = render_pgm(spec.data)
        out = outdir / (Path(path).stem + ".pgm")
        out.write_bytes(pgm)
        entries.append({
            "input": str(path), "pgm": str(out),
            "width": spec.data.shape[1], "height": spec.data.shape[0],
            "min": float(spec.data.min()), "max": float(spec.data.max()),
            "mean": float(spec.data.mean()),
        })
    csv_path = outdir / "render_summary.csv"
    lines = ["file,pgm,n_mels,n_frames,min,max,mean"]
    for e in entries:
        lines.append(
            f"{e['input']},{e['pgm']},{e['height']},{e['width']},"
            f"{e['min']!r},{e['max']!r},{e['mean']!r}"
        )
    csv_path.write_text("\n".join(lines) + "\n")
    _emit(
        args,
        {"rendered": entries, "summary_csv": str(csv_path)},
        "\n".join(f"{e['input']} -> {e['pgm']} ({e['width']}x{e['height']})" for e in entries),
    )
    return 0


def cmd_flops(args) -> int:
    arch = flops_mod.load_arch(args.arch, n_mels=args.n_mels)
    specs = [CompressionSpec.parse(s) for s in args.specs]
    rows = flops_mod.compare_report(arch, args.frames, specs)
    payload = {
        "arch": arch.name,
        "n_mels": args.n_mels,
        "convention": flops_mod.CONVENTION,
        "rows": [
            {"label": r.label, "frames": r.n_frames, "flops": r.flops, "ratio": r.ratio}
            for r in rows
        ],
    }
    width = max(len(r.label) for r in rows)
    lines = [f"# counting convention: {flops_mod.CONVENTION}"]
    lines.append(f"{'front-end':<{width}}  {'frames':>7}  {'FLOPs':>15}  ratio")
    for r in rows:
        lines.append(f"{r.label:<{width}}  {r.n_frames:>7}  {r.flops:>15}  {r.ratio:.4f}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_demo(args) -> int:
    seed = args.seed
    spec = CompressionSpec.parse(args.spec) if args.spec else None

    train_set = nn.synth_dataset(nn.SynthDatasetSpec(
        clips_per_class=args.train_per_class, seed=seed))
    test_set = nn.synth_dataset(nn.SynthDatasetSpec(
        clips_per_class=args.test_per_class, seed=seed + 1))

    cfg = nn.TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=seed)
    model = nn.TinyCnnModel.init(n_classes=4, seed=seed)
    model, history = nn.train(model, train_set, spec, cfg, eval_dataset=test_set)
    test_acc = history[-1].test_acc

    baseline_frames = nn.prepare_inputs(test_set[:1])[0].shape[2]
    arch = flops_mod.tiny_cnn_arch(n_classes=4, n_mels=64)
    payload = {
        "seed": seed,
        "spec": str(spec) if spec else None,
        "epochs": args.epochs,
        "final_loss": history[-1].loss,
        "train_accuracy": history[-1].train_acc,
        "test_accuracy": test_acc,
        "history": [
            {"epoch": h.epoch, "loss": h.loss, "train_acc": h.train_acc,
             "test_acc": h.test_acc} for h in history
        ],
    }
    lines = [
        f"seed {seed}  front-end {spec if spec else 'none'}",
        f"train accuracy {history[-1].train_acc:.3f}  test accuracy {test_acc:.3f}",
    ]
    if spec is not None:
        compressed_frames = baseline_frames // spec.denominator
        base = flops_mod.model_flops(arch, baseline_frames).total
        comp = flops_mod.model_flops(arch, compressed_frames).total
        payload["flops_ratio"] = comp / base
        payload["baseline_frames"] = baseline_frames
        payload["compressed_frames"] = compressed_frames
        lines.append(
            f"model FLOPs ratio {comp / base:.4f} "
            f"({baseline_frames} -> {compressed_frames} frames)"
        )
    if args.history:
        Path(args.history).write_text(nn.history_to_csv(history))
        lines.append(f"history written to {args.history}")
        payload["history_csv"] = str(args.history)
    _emit(args, payload, "\n".join(lines))
    return 0


def _env_seed() -> int:
    raw = os.environ.get("SIMPF_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"SIMPF_SEED must be an integer, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simpf",
        description="Pooling front-ends for mel-spectrograms: features, "
        "compression, FLOPs accounting, and a desk-scale training demo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("melspec", help="compute a log-mel spectrogram from a WAV file")
    p.add_argument("wav")
    p.add_argument("out", help="output spectrogram container path")
    p.add_argument("--n-fft", type=int, default=1024)
    p.add_argument("--hop", type=int, default=320)
    p.add_argument("--n-mels", type=int, default=64)
    p.add_argument("--f-min", type=float, default=0.0)
    p.add_argument("--f-max", type=float, default=None)
    p.add_argument("--log-floor", type=float, default=1e-10)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_melspec)

    p = sub.add_parser("pool", help="compress a spectrogram container along time")
    p.add_argument("input")
    p.add_argument("spec", help="method:denominator, e.g. spectral:2")
    p.add_argument("out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("render", help="render containers as PGM images plus a summary CSV")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--outdir", default=".")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("flops", help="FLOPs table for an arch file at given frame counts")
    p.add_argument("arch")
    p.add_argument("frames", type=int)
    p.add_argument("specs", nargs="*", help="compression specs, e.g. avg:2 spectral:4")
    p.add_argument("--n-mels", type=int, default=64)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("demo", help="train the tiny CNN on synthetic audio")
    p.add_argument("--seed", type=int, default=None,
                   help="defaults to $SIMPF_SEED, then 7")
    p.add_argument("--spec", default=None, help="optional front-end, e.g. avg:2")
    p.add_argument("--train-per-class", type=int, default=100)
    p.add_argument("--test-per-class", type=int, default=50)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--history", default=None, help="write per-epoch CSV here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "seed", None) is None and args.command == "demo":
        try:
            args.seed = _env_seed()
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        # Bad spec strings / malformed containers are caller mistakes.
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InputTooShortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SimpfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
