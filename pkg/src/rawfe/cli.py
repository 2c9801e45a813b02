"""Command-line surface: one binary, nine subcommands.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.
stdout carries machine-parseable key=value lines; prose goes to stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from rawfe import analysis, dsp, fixed, formats, neural, train
from rawfe.errors import RawFeError, UnknownPreset


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting with code 2."""

    def error(self, message):
        raise _UsageError(message)


def _fmt(x) -> str:
    return f"{x:.6g}"


def humanize_count(n: int) -> str:
    """Parameter totals at catalog precision: 4071168 -> '4.1M', 25700 -> '26k'."""
    if n >= 1_000_000:
        return f"{round(n / 1e6, 1):.1f}M"
    return f"{round(n / 1e3)}k"


def _resolve_spec(preset: str):
    """Names accepted by --preset: the w2v catalog plus 'sc' / 'sc<channels>'."""
    if preset == "sc":
        return "sc", neural.ScConfig()
    if preset.startswith("sc") and preset[2:].isdigit():
        return "sc", neural.ScConfig(fb_channels=int(preset[2:]))
    return "w2v", neural.preset_config(preset)


def _load_model(args) -> neural.FeModel:
    if getattr(args, "weights", None):
        return formats.load_weights(args.weights)
    if getattr(args, "preset", None):
        kind, config = _resolve_spec(args.preset)
        return neural.init_model(kind, config, args.seed)
    raise _UsageError("need --weights or --preset")


def _fixed_extractor(name: str):
    """Fixed front-ends for probing keep channel identity: the log mel probe
    skips utterance normalization and the gammatone probe stops before the DCT."""
    if name == "logmel":
        return lambda wav: fixed.logmel_extract(wav, normalize=False)
    return fixed.gammatone_envelopes


# --- subcommands ---

def _cmd_extract(args) -> int:
    wav = formats.read_wav(args.input)
    if args.fe == "logmel":
        feats = fixed.logmel_extract(wav)
    elif args.fe == "gammatone":
        feats = fixed.gammatone_extract(wav)
    else:
        model = _load_model(args)
        if model.kind != args.fe:
            raise RawFeError(f"archive holds a '{model.kind}' model, not '{args.fe}'")
        feats = neural.forward(model, dsp.normalize_waveform(wav))
    out = Path(args.output)
    fmt = args.format or ("csv" if out.suffix == ".csv" else "bin")
    if fmt == "csv":
        formats.write_matrix_csv(feats.values, {"shift_ms": feats.frame_shift_ms},
                                 out)
    else:
        formats.write_feature_binary(feats, out)
    print(f"frames={feats.n_frames} dims={feats.n_dims} out={out}")
    return 0


def _cmd_audit(args) -> int:
    if args.weights:
        model = formats.load_weights(args.weights)
        rf, rf_ms, shift, shift_ms = neural.audit_geometry(model)
    elif args.preset:
        kind, config = _resolve_spec(args.preset)
        rf, rf_ms, shift, shift_ms = neural.audit_geometry(config)
    else:
        raise _UsageError("need --preset or --weights")
    print(f"rf={rf} samples ({rf_ms:.1f} ms), shift={shift} ({shift_ms:.1f} ms)")
    return 0


def _cmd_params(args) -> int:
    if not args.fe and not args.preset:
        raise _UsageError("need --preset or --fe")
    if args.fe == "logmel":
        n = fixed.MEL.weights.size
    elif args.fe == "gammatone":
        n = fixed.GAMMATONE_BANK.kernels.size
    elif args.fe == "sc" and not args.preset:
        n = neural.count_params(neural.zero_model("sc", neural.ScConfig()))
    else:
        kind, config = _resolve_spec(args.preset)
        model = neural.zero_model(kind, config)
        if args.no_projection:
            if kind != "w2v":
                raise _UsageError("--no-projection only applies to conv stacks")
            model = neural.zero_model(kind, replace(config, include_projection=False))
        n = neural.count_params(model)
    print(f"{n} (~{humanize_count(n)})")
    return 0


def _cmd_respond(args) -> int:
    if args.fe == "gammatone":
        bank = fixed.GAMMATONE_BANK
    elif args.weights or args.preset:
        bank = _load_model(args).first_layer_bank()
    else:
        raise _UsageError("need --fe gammatone, --weights, or --preset")
    fr = analysis.frequency_response(bank, args.nfft)
    order = analysis.sort_filters(fr)
    matrix = fr.magnitudes[order]
    if args.scale == "db":
        matrix = 20.0 * np.log10(matrix + dsp.LOG_FLOOR)
    formats.write_matrix_csv(matrix, {"bin_hz": fr.bin_hz, "scale": args.scale},
                             args.out)
    print(f"filters={fr.n_filters} bins={matrix.shape[1]} out={args.out}")
    return 0


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise _UsageError(f"--grid wants lo:hi:step, got '{text}'") from None
    if step <= 0 or lo > hi:
        raise _UsageError(f"bad grid '{text}'")
    return np.arange(lo, hi + step / 2, step)


def _cmd_probe(args) -> int:
    if args.fe in ("logmel", "gammatone"):
        extractor = _fixed_extractor(args.fe)
    else:
        extractor = analysis.model_extractor(_load_model(args))
    freqs = _parse_grid(args.grid)
    probe = analysis.sine_probe(extractor, freqs, duration_s=args.duration)
    meta = {"f_lo": freqs[0], "f_hi": freqs[-1],
            "f_step": freqs[1] - freqs[0] if len(freqs) > 1 else 0.0,
            "duration_s": args.duration}
    formats.write_matrix_csv(probe.matrix, meta, args.out)
    print(f"rows={probe.matrix.shape[0]} cols={probe.matrix.shape[1]} out={args.out}")
    return 0


def _cmd_mask(args) -> int:
    model = formats.load_weights(args.weights)
    ranking = analysis.ranking_for_masking(model)
    masked = neural.mask_filters(model, neural.MaskSpec(args.mode, args.n), ranking)
    formats.save_weights(masked, args.out)
    print(f"masked={args.n} mode={args.mode} out={args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    kind, config = _resolve_spec(args.preset)
    model = neural.init_model(kind, config, args.seed)
    rng = np.random.default_rng(args.seed)
    wav = dsp.normalize_waveform(
        dsp.Waveform(rng.standard_normal(args.length)))
    err = train.finite_diff_check(model, wav, eps=args.eps,
                                  max_checked=args.samples, seed=args.seed)
    ok = err < args.tolerance
    print(f"max_rel_error={_fmt(err)} tolerance={_fmt(args.tolerance)} "
          f"status={'ok' if ok else 'fail'}")
    return 0 if ok else 3


def _cmd_train(args) -> int:
    corpus_dir = Path(args.corpus)
    paths = sorted(corpus_dir.glob("*.wav"))
    if not paths:
        raise RawFeError(f"no .wav files under {corpus_dir}")
    corpus = [formats.read_wav(p) for p in paths]
    if args.weights:
        model = formats.load_weights(args.weights)
    else:
        kind, config = _resolve_spec(args.preset or args.fe)
        model = neural.init_model(kind, config, args.seed)
    cfg = train.TrainConfig(steps=args.steps, peak_lr=args.peak_lr,
                            schedule=args.schedule, seed=args.seed,
                            batch_utterances=args.batch)
    result = train.train_distill(model, corpus, cfg)
    train.write_loss_curve(args.out, result.curve)
    print(f"steps={args.steps} utterances={len(corpus)} "
          f"initial_loss={_fmt(result.curve[0, 2])} "
          f"final_loss={_fmt(result.curve[-1, 2])} out={args.out}")
    return 0


def _cmd_weights(args) -> int:
    if args.action == "export":
        if not args.preset or not args.out:
            raise _UsageError("weights export needs --preset and --out")
        kind, config = _resolve_spec(args.preset)
        model = neural.init_model(kind, config, args.seed)
        formats.save_weights(model, args.out)
        print(f"kind={kind} params={neural.count_params(model)} out={args.out}")
        return 0
    if not args.weights:
        raise _UsageError("weights inspect needs --weights")
    model = formats.load_weights(args.weights)
    print(f"kind={model.kind}")
    if model.kind == "w2v":
        print(f"layers={len(model.config.layers)}")
    else:
        print(f"channels={model.config.fb_channels}")
    print(f"params={neural.count_params(model)}")
    for name in sorted(model.params):
        shape = "x".join(str(d) for d in model.params[name].shape)
        print(f"tensor={name} shape={shape}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="rawfe",
                     description="Raw-waveform front-end lab: extraction, "
                                 "analysis, masking, and desk-scale training.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_flags(p, with_fe=True):
        if with_fe:
            p.add_argument("--fe", choices=("logmel", "gammatone", "w2v", "sc"),
                           required=True)
        p.add_argument("--preset", help="catalog name (w2v*) or sc / sc<channels>")
        p.add_argument("--weights", help="RFE1 weight archive")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("extract", help="waveform file -> feature file")
    add_model_flags(p)
    p.add_argument("--format", choices=("csv", "bin"))
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("audit", help="receptive field and frame shift")
    p.add_argument("--preset")
    p.add_argument("--weights")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("params", help="learnable parameter totals")
    p.add_argument("--preset")
    p.add_argument("--fe", choices=("logmel", "gammatone", "sc"))
    p.add_argument("--no-projection", action="store_true")
    p.set_defaults(func=_cmd_params)

    p = sub.add_parser("respond", help="sorted first-layer frequency responses")
    p.add_argument("--fe", choices=("gammatone", "w2v", "sc"), default=None)
    p.add_argument("--preset")
    p.add_argument("--weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nfft", type=int, default=analysis.RESPONSE_NFFT)
    p.add_argument("--scale", choices=("db", "linear"), default="db")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_respond)

    p = sub.add_parser("probe", help="sine-sweep response of a front-end")
    add_model_flags(p)
    p.add_argument("--grid", default="50:7950:50", help="lo:hi:step in Hz")
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("mask", help="zero ranked first-layer filters")
    p.add_argument("--weights", required=True)
    p.add_argument("--mode", choices=("sharp", "soft"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--preset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--length", type=int, default=4000)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("train", help="distill a neural front-end to log mel")
    p.add_argument("--fe", choices=("w2v", "sc"), default="sc")
    p.add_argument("--preset")
    p.add_argument("--weights")
    p.add_argument("--corpus", required=True, help="directory of 16 kHz wav files")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--peak-lr", type=float, required=True, dest="peak_lr")
    p.add_argument("--schedule", choices=("constant", "one-cycle"),
                   default="one-cycle")
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("weights", help="export random-init archives, inspect any")
    p.add_argument("action", choices=("export", "inspect"))
    p.add_argument("--preset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_weights)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except UnknownPreset as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except RawFeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
