"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 data/grammar error, 4 internal
invariant violation.
"""

import argparse
import json
import sys
from pathlib import Path

from . import synth
from .beats import build_measures, load_beats, save_beats, synth_beats
from .dataset import (
    InputError,
    ManifestEntry,
    ToolConfig,
    build_dataset,
    check_files,
    eval_table,
    load_manifest,
    style_table,
)
from .exceptions import GrammarViolation, PianoCoverError
from .notes import load_midi, save_midi
from .style import load_edges
from .tokens import bars_to_text, decode, encode, text_to_bars

EXIT_OK, EXIT_INPUT, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


def _require(*paths):
    for p in paths:
        if not Path(p).is_file():
            raise InputError(f"file not found: {p}")


def _config(args):
    return ToolConfig.load(
        getattr(args, "config", None),
        hop=getattr(args, "hop", None),
        kmeans_k=getattr(args, "kmeans_k", None),
        ngram_n=getattr(args, "ngram_n", None),
        ioi_merge_ms=getattr(args, "ioi_merge_ms", None),
        ioi_cap_s=getattr(args, "ioi_cap_s", None),
        bin_edges_path=getattr(args, "bin_edges", None),
    )


def cmd_encode(args):
    _require(args.midi, args.beats)
    config = _config(args)
    notes = load_midi(args.midi)
    bars = encode(notes, build_measures(load_beats(args.beats)), config.duration_table)
    Path(args.out).write_text(bars_to_text(bars, header=f"source={Path(args.midi).name} " + config.header()))
    return EXIT_OK


def cmd_decode(args):
    _require(args.tokens, args.beats)
    framework = load_beats(args.beats)
    bars, lines = text_to_bars(Path(args.tokens).read_text())
    try:
        notes = decode(bars, build_measures(framework))
    except GrammarViolation as exc:
        line = lines[exc.bar] if exc.bar is not None else "?"
        raise GrammarViolation(f"{args.tokens}:{line}: {exc}") from None
    save_midi(notes, framework, args.out)
    return EXIT_OK


def cmd_synth_beats(args):
    try:
        num, _, den = args.meter.partition("/")
        beats_per_measure = int(num)
        if den and int(den) <= 0:
            raise ValueError
    except ValueError:
        raise InputError(f"meter must look like 4/4, got {args.meter!r}") from None
    if args.bars < 1:
        raise InputError("--bars must be at least 1")
    try:
        framework = synth_beats(args.bpm, beats_per_measure, args.bars)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    save_beats(framework, args.out)
    return EXIT_OK


def cmd_synth_pairs(args):
    if args.n < 1 or args.bars < 2:
        raise InputError("need --n >= 1 and --bars >= 2")
    synth.write_synthetic_corpus(args.outdir, args.n, seed=args.seed, n_measures=args.bars)
    return EXIT_OK


def cmd_dataset_build(args):
    config = _config(args)
    entries = load_manifest(args.manifest)
    check_files(entries)
    if config.bin_edges_path:
        _require(config.bin_edges_path)
    summary = build_dataset(entries, config, args.outdir, jobs=args.jobs)
    print(
        f"{summary['pairs_kept']}/{summary['pairs_total']} pairs kept, "
        f"{summary['windows_emitted']} windows written to {args.outdir}"
    )
    return EXIT_OK


def _pair_entries(args, require_beats):
    if args.manifest:
        entries = load_manifest(args.manifest, require_beats=require_beats)
    elif args.source and args.cover:
        entries = [ManifestEntry("pair", args.source, args.cover, getattr(args, "beats", "") or "")]
    else:
        raise InputError("give either --manifest or both --source and --cover")
    check_files(entries, require_beats=require_beats)
    return entries


def cmd_eval(args):
    config = _config(args)
    entries = _pair_entries(args, require_beats=False)
    Path(args.out).write_text(eval_table(entries, config, jobs=args.jobs))
    return EXIT_OK


def cmd_style_extract(args):
    config = _config(args)
    entries = _pair_entries(args, require_beats=True)
    edges = None
    if config.bin_edges_path:
        _require(config.bin_edges_path)
        edges = load_edges(config.bin_edges_path)
    Path(args.out).write_text(style_table(entries, config, edges, jobs=args.jobs))
    return EXIT_OK


def _metric_flags(p):
    p.add_argument("--hop", type=float, help="feature hop in seconds (default 0.1)")
    p.add_argument("--kmeans-k", type=int, help="IOI clusters (default 8)")
    p.add_argument("--ngram-n", type=int, help="IOI n-gram length (default 4)")
    p.add_argument("--ioi-merge-ms", type=float, help="onset merge threshold (default 25)")
    p.add_argument("--ioi-cap-s", type=float, help="longest IOI kept for RGC (default 2.0)")


def build_parser():
    parser = argparse.ArgumentParser(prog="pianocover", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="MIDI + beats -> token text")
    p.add_argument("--midi", required=True)
    p.add_argument("--beats", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="token text + beats -> MIDI")
    p.add_argument("--tokens", required=True)
    p.add_argument("--beats", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("dataset-build", help="manifest -> filtered, aligned training corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--config")
    p.add_argument("--bin-edges")
    p.add_argument("--jobs", type=int, default=1)
    _metric_flags(p)
    p.set_defaults(func=cmd_dataset_build)

    p = sub.add_parser("eval", help="WPD / RGC / IPE for one pair or a manifest")
    p.add_argument("--manifest")
    p.add_argument("--source")
    p.add_argument("--cover")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--jobs", type=int, default=1)
    _metric_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("style-extract", help="per-bar-pair style attributes and bins as CSV")
    p.add_argument("--manifest")
    p.add_argument("--source")
    p.add_argument("--cover")
    p.add_argument("--beats")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--bin-edges")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_style_extract)

    p = sub.add_parser("synth-beats", help="constant-tempo beat file")
    p.add_argument("--bpm", type=float, required=True)
    p.add_argument("--meter", default="4/4")
    p.add_argument("--bars", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_beats)

    p = sub.add_parser("synth-pairs", help="synthetic source/cover/beats corpus with manifest")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--bars", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_synth_pairs)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PianoCoverError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AssertionError, RuntimeError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
