"""Command-line entry point: ``simulate``, ``construct`` and ``decode-one``."""

import argparse
import json
import sys

import numpy as np

from .channel import modulate, sample_channel, snr_db_to_n0, transmit
from .joint import joint_decode
from .sim import PRESETS, SimConfig, _metric_config, build_code, paper_preset, run_sweep, trial_rng


def _snr_list(text):
    return tuple(float(v) for v in text.replace(" ", ",").split(",") if v)


def _add_config_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--config", help="key=value file named after SimConfig fields")
    p.add_argument("--snr-db", type=_snr_list, help="comma-separated SNR points in dB")
    p.add_argument("--list-size", type=int)
    p.add_argument("--detector", choices=("vblast", "mmse"))
    p.add_argument("--metric", choices=("exact", "approx"))
    p.add_argument("--construction", choices=("dfs", "crc"))
    p.add_argument("--frames", type=int, help="max frames per SNR point")
    p.add_argument("--min-errors", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cache-dir", help="reuse reliability profiles and codes")


def _load_config(args):
    cfg = paper_preset(args.preset) if args.preset else SimConfig.from_file(args.config)
    over = {
        "snr_points": args.snr_db,
        "list_size": args.list_size,
        "detector": args.detector,
        "metric": args.metric,
        "construction": args.construction,
        "max_frames": args.frames,
        "min_frame_errors": args.min_errors,
        "master_seed": args.seed,
    }
    return cfg.replace(**{k: v for k, v in over.items() if v is not None})


def _simulate(args):
    cfg = _load_config(args)

    def progress(snr, frames, errors):
        if args.verbose:
            print(f"  {snr:g} dB: {errors} errors / {frames} frames", file=sys.stderr)

    res = run_sweep(cfg, workers=args.workers, cache_dir=args.cache_dir,
                    timing=not args.no_timing, progress=progress)
    text = res.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def _construct(args):
    cfg = _load_config(args)
    snr = cfg.snr_points[0] if cfg.reliability_snr_db is None else cfg.reliability_snr_db
    spec = build_code(cfg, snr, 0, args.cache_dir)
    text = spec.to_text()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _decode_one(args):
    cfg = _load_config(args)
    snr = cfg.snr_points[0]
    spec = build_code(cfg, snr, 0, args.cache_dir)
    mcfg = _metric_config(cfg)
    rng = trial_rng(cfg.master_seed, 0, args.trial)
    if cfg.construction == "crc":
        payload = rng.integers(0, 2, cfg.k - cfg.crc_len, dtype=np.uint8)
        info = mcfg.crc.attach(payload)
    else:
        payload = info = rng.integers(0, 2, cfg.k, dtype=np.uint8)
    chan = sample_channel(rng, cfg.n_slots, cfg.n_rx, cfg.n_tx, float(snr_db_to_n0(snr)))
    y = transmit(modulate(spec.encode(info), cfg.m), chan, rng)
    res = joint_decode(y, chan, spec, mcfg)
    out = {
        "snr_db": snr,
        "trial": args.trial,
        "bit_errors": int(np.count_nonzero(res.info[: payload.size] != payload)),
        **res.diagnostics(),
    }
    out["frame_error"] = out["bit_errors"] > 0
    print(json.dumps(out, indent=2))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polarmimo", description="Polar-coded MIMO link simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="FER sweep over SNR, written as CSV")
    _add_config_args(p)
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true",
                   help="write 0 in the seconds column for reproducible files")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("construct", help="build a code and print its spec file")
    _add_config_args(p)
    p.add_argument("--out")
    p.set_defaults(func=_construct)

    p = sub.add_parser("decode-one", help="decode one seeded frame, print diagnostics")
    _add_config_args(p)
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=_decode_one)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
