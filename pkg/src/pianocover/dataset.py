"""Manifest-driven batch processing: pair filtering, alignment, encoding, windowing."""

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from itertools import repeat
from pathlib import Path

from . import align
from .barmix import MAX_LEN, BuildStats, export_corpus, pad_bars, training_windows
from .beats import DURATION_TABLE, BeatFramework, build_measures, load_beats
from .exceptions import InsufficientData, PianoCoverError
from .metrics import CAP_SECONDS, DEFAULT_K, DEFAULT_N, MERGE_SECONDS, evaluate
from .notes import load_midi
from .style import ATTRIBUTES, assign_bins, bar_stats, fit_bins, load_edges, relative_attributes, save_edges
from .tokens import Vocab, encode


class InputError(PianoCoverError, ValueError):
    """Missing files, bad manifests or out-of-range configuration."""


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    source_midi_path: str
    cover_midi_path: str
    beats_path: str = ""


def load_manifest(path, require_beats=True):
    """Read a manifest; relative paths resolve against the manifest's directory."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"manifest not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"manifest {path} is not valid JSON: {exc}") from None
    items = data.get("entries") if isinstance(data, dict) else data
    if not isinstance(items, list):
        raise InputError("manifest must be a list or an object with an 'entries' list")
    base = path.parent
    entries, seen = [], set()
    for item in items:
        try:
            entry = ManifestEntry(
                str(item["id"]),
                str(item["source_midi_path"]),
                str(item["cover_midi_path"]),
                str(item.get("beats_path", "")),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise InputError(f"manifest entry {item!r} is missing {exc}") from None
        if entry.id in seen:
            raise InputError(f"duplicate manifest id {entry.id!r}")
        seen.add(entry.id)
        needed = ["source_midi_path", "cover_midi_path"] + (["beats_path"] if require_beats else [])
        resolved = {}
        for name in needed:
            value = getattr(entry, name)
            if not value:
                raise InputError(f"manifest entry {entry.id!r} has an empty {name}")
            resolved[name] = str(base / value)
        entries.append(replace(entry, **resolved))
    return entries


def check_files(entries, require_beats=True):
    for e in entries:
        for p in (e.source_midi_path, e.cover_midi_path) + ((e.beats_path,) if require_beats else ()):
            if not Path(p).is_file():
                raise InputError(f"file not found: {p}")


@dataclass(frozen=True)
class ToolConfig:
    bin_edges_path: str | None = None
    hop: float = align.DEFAULT_HOP
    kmeans_k: int = DEFAULT_K
    ngram_n: int = DEFAULT_N
    ioi_merge_ms: float = MERGE_SECONDS * 1000
    ioi_cap_s: float = CAP_SECONDS
    duration_table: tuple = DURATION_TABLE
    max_length_diff_s: float = align.MAX_LENGTH_DIFF
    max_wp_std_s: float = align.MAX_WP_STD
    max_window_tokens: int = MAX_LEN

    def __post_init__(self):
        object.__setattr__(self, "duration_table", tuple(int(v) for v in self.duration_table))
        checks = [
            (0 < self.hop <= 1.0, "hop must be in (0, 1] seconds"),
            (1 <= self.kmeans_k <= 64, "kmeans_k must be in [1, 64]"),
            (1 <= self.ngram_n <= 16, "ngram_n must be in [1, 16]"),
            (0 < self.ioi_merge_ms <= 200, "ioi_merge_ms must be in (0, 200]"),
            (self.ioi_merge_ms / 1000 < self.ioi_cap_s <= 60, "ioi_cap_s must exceed the merge threshold and be <= 60"),
            (self.max_length_diff_s >= 0, "max_length_diff_s must be >= 0"),
            (self.max_wp_std_s >= 0, "max_wp_std_s must be >= 0"),
            (8 <= self.max_window_tokens <= 1 << 20, "max_window_tokens out of range"),
        ]
        for ok, message in checks:
            if not ok:
                raise InputError(message)
        try:
            Vocab(self.duration_table)
        except ValueError as exc:
            raise InputError(str(exc)) from None

    @classmethod
    def load(cls, path=None, **overrides):
        """Config file values, then non-``None`` overrides (flags win)."""
        values = {}
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise InputError(f"config file not found: {p}")
            try:
                values = json.loads(p.read_text())
            except json.JSONDecodeError as exc:
                raise InputError(f"config {p} is not valid JSON: {exc}") from None
            known = {f.name for f in fields(cls)}
            unknown = set(values) - known
            if unknown:
                raise InputError(f"unknown config keys: {sorted(unknown)}")
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**values)
        except TypeError as exc:
            raise InputError(str(exc)) from None

    def header(self):
        d = asdict(self)
        d["duration_table"] = ",".join(map(str, self.duration_table))
        return "params: " + " ".join(f"{k}={v}" for k, v in d.items())


@dataclass
class PairResult:
    id: str
    keep: bool
    length_diff: float | None = None
    wp_std: float | None = None
    reasons: list = field(default_factory=list)
    x_bars: list = field(default_factory=list)
    y_bars: list = field(default_factory=list)
    attributes: list = field(default_factory=list)


def cover_framework(framework, path, hop):
    """Source beats carried onto the cover timeline through the warp path."""
    times = align.map_times([t for t, _ in framework.beats], path, hop)
    return BeatFramework(tuple(zip(times, (d for _, d in framework.beats))))


def process_pair(entry, config):
    """Filter, align and encode one manifest entry."""
    try:
        source = load_midi(entry.source_midi_path)
        cover = load_midi(entry.cover_midi_path)
        framework = load_beats(entry.beats_path)
    except (PianoCoverError, ValueError, OSError) as exc:
        return PairResult(entry.id, False, reasons=[f"invalid: {exc}"])
    if len(source) == 0 or len(cover) == 0:
        return PairResult(entry.id, False, reasons=["empty"])
    last_beat = framework.beats[-1][0]
    result = align.filter_pair(
        source,
        cover,
        hop=config.hop,
        source_end=last_beat + config.hop,
        max_length_diff=config.max_length_diff_s,
        max_wp_std=config.max_wp_std_s,
    )
    out = PairResult(entry.id, result.keep, result.length_diff, result.wp_std, list(result.reasons))
    if not result.keep:
        return out
    src_measures = build_measures(framework)
    cov_measures = build_measures(cover_framework(framework, result.path, config.hop))
    x_bars = encode(source, src_measures, config.duration_table)
    y_bars = encode(cover, cov_measures, config.duration_table)
    x_bars, y_bars = pad_bars(x_bars, y_bars)
    vocab = Vocab(config.duration_table)
    slots = [m.n_slots for m in src_measures]
    slots += [slots[-1]] * (len(x_bars) - len(slots))
    out.x_bars, out.y_bars = x_bars, y_bars
    out.attributes = [
        relative_attributes(bar_stats(x, s, vocab), bar_stats(y, s, vocab))
        for x, y, s in zip(x_bars, y_bars, slots)
    ]
    return out


def run_pairs(func, entries, config, jobs=1):
    """Apply ``func(entry, config)`` to each entry; results keep manifest order."""
    if jobs <= 1 or len(entries) <= 1:
        return [func(e, config) for e in entries]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, entries, repeat(config)))


def _fmt(v):
    return "" if v is None else f"{v:.6f}"


def _csv_text(header_comment, columns, rows):
    buf = io.StringIO()
    buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def build_dataset(entries, config, outdir, jobs=1):
    """Full dataset build; returns a summary dict.

    Writes ``corpus.jsonl``, ``build_stats.json``, ``pairs.csv`` and
    ``bin_edges.json`` (the latter only when edges could be fitted or were
    supplied).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results = run_pairs(process_pair, entries, config, jobs)
    kept = [r for r in results if r.keep]

    edges, edge_note = None, ""
    if config.bin_edges_path:
        edges = load_edges(config.bin_edges_path)
    else:
        try:
            edges = fit_bins([a for r in kept for a in r.attributes])
        except InsufficientData as exc:
            edge_note = str(exc)
    vocab = Vocab(config.duration_table)
    windows, stats = [], BuildStats()
    if edges is not None:
        save_edges(edges, outdir / "bin_edges.json")
        for r in kept:
            bins = [assign_bins(a, edges).as_tuple() for a in r.attributes]
            w, s = training_windows(
                r.x_bars, r.y_bars, bins, song_id=r.id, max_len=config.max_window_tokens, vocab=vocab
            )
            windows += w
            stats.merge(s)
    export_corpus(windows, outdir / "corpus.jsonl")

    summary = {
        "params": asdict(config) | {"duration_table": list(config.duration_table)},
        "pairs_total": len(results),
        "pairs_kept": len(kept),
        "bin_edges": "fitted" if edges is not None and not config.bin_edges_path else (
            "loaded" if edges is not None else f"not fitted: {edge_note}"
        ),
    } | stats.to_dict()
    (outdir / "build_stats.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")

    rows = [
        [r.id, int(r.keep), _fmt(r.length_diff), _fmt(r.wp_std), ";".join(r.reasons), len(r.x_bars)]
        for r in results
    ]
    (outdir / "pairs.csv").write_text(
        _csv_text(config.header(), ["id", "keep", "length_diff_s", "wp_std_s", "reasons", "n_bars"], rows)
    )
    return summary


def style_table(entries, config, edges=None, jobs=1):
    """Per-bar-pair attribute and bin rows for every kept pair."""
    results = [r for r in run_pairs(process_pair, entries, config, jobs) if r.keep]
    if edges is None:
        edges = fit_bins([a for r in results for a in r.attributes])
    rows = []
    for r in results:
        for i, a in enumerate(r.attributes):
            rows.append([r.id, i, *(_fmt(v) for v in a.as_tuple()), *assign_bins(a, edges).as_tuple()])
    columns = ["pair_id", "bar"] + [f"rel_{k}" for k in ("polyphony", "rhythm_intensity", "sustain")]
    columns += [f"{k}_bin" for k in ATTRIBUTES]
    return _csv_text(config.header(), columns, rows)


def evaluate_entry(entry, config):
    source = load_midi(entry.source_midi_path)
    cover = load_midi(entry.cover_midi_path)
    report = evaluate(
        source,
        cover,
        hop=config.hop,
        k=config.kmeans_k,
        n=config.ngram_n,
        merge=config.ioi_merge_ms / 1000,
        cap=config.ioi_cap_s,
    )
    return entry.id, report


EVAL_COLUMNS = ["id", "wpd", "rgc", "ipe", "tau", "hop", "kmeans_k", "ngram_n", "ioi_merge_ms", "ioi_cap_s"]


def eval_table(entries, config, jobs=1):
    rows = []
    for pair_id, rep in run_pairs(evaluate_entry, entries, config, jobs):
        rows.append(
            [pair_id, _fmt(rep.wpd), _fmt(rep.rgc), _fmt(rep.ipe), _fmt(rep.tau),
             rep.hop, rep.kmeans_k, rep.ngram_n, rep.ioi_merge_ms, rep.ioi_cap_s]
        )
    return _csv_text(config.header(), EVAL_COLUMNS, rows)
