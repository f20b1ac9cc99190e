"""Synthetic songs, covers and manifests for tests and demos.

Everything here is driven by an explicit seed so outputs are reproducible.
"""

import json
from pathlib import Path

import numpy as np

from .beats import build_measures, position_to_time, save_beats, slot_span, synth_beats
from .beats import GridPosition
from .notes import NoteEvent, NoteSequence, save_midi

# triads as pitch-class offsets from a root, major and minor
_QUALITIES = ((0, 4, 7), (0, 3, 7))
_RHYTHMS = (
    (4, 4, 4, 4),
    (2, 2, 4, 4, 4),
    (4, 2, 2, 4, 4),
    (6, 2, 4, 4),
    (3, 3, 2, 4, 4),
    (8, 4, 2, 2),
    (2, 2, 2, 2, 4, 4),
)


def _fit_rhythm(rhythm, n_slots):
    out, total = [], 0
    for d in rhythm * 4:
        if total + d > n_slots:
            break
        out.append(d)
        total += d
    if total < n_slots:
        out.append(n_slots - total)
    return out


def make_song(seed, bpm=120.0, beats_per_measure=4, n_measures=16):
    """Random on-grid piano piece: a chord per measure plus a melody.

    Returns ``(notes, framework)``. Chords change every measure and the
    melody is drawn fresh per measure, so no two measures repeat exactly.
    """
    rng = np.random.default_rng(seed)
    framework = synth_beats(bpm, beats_per_measure, n_measures)
    measures = build_measures(framework)[:n_measures]
    notes = []
    prev_root = None
    for m in measures:
        root = int(rng.integers(0, 12))
        while root == prev_root:
            root = int(rng.integers(0, 12))
        prev_root = root
        quality = _QUALITIES[int(rng.integers(0, 2))]
        chord = [48 + (root + q) % 12 for q in quality]
        n_slots = m.n_slots
        # left hand: bass on each half measure, chord held
        bass = 36 + root
        for start in range(0, n_slots, max(4, n_slots // 2)):
            length = min(max(4, n_slots // 2), n_slots - start)
            t = position_to_time(GridPosition(m.index, start), measures)
            notes.append(NoteEvent(t, slot_span(GridPosition(m.index, start), length, measures), bass))
        t0 = position_to_time(GridPosition(m.index, 0), measures)
        for p in chord:
            notes.append(NoteEvent(t0, slot_span(GridPosition(m.index, 0), n_slots, measures), p))
        # right hand melody from chord and scale tones
        scale = sorted({(root + s) % 12 for s in (0, 2, 4, 5, 7, 9, 11)})
        pos = 0
        for d in _fit_rhythm(_RHYTHMS[int(rng.integers(0, len(_RHYTHMS)))], n_slots):
            pc = scale[int(rng.integers(0, len(scale)))]
            pitch = 72 + pc + 12 * int(rng.integers(0, 2)) - 12 * (pc > 7)
            gp = GridPosition(m.index, pos)
            notes.append(NoteEvent(position_to_time(gp, measures), slot_span(gp, d, measures), pitch))
            pos += d
    return NoteSequence(notes), framework


def make_cover(source, seed, stretch=1.0, density=0.5):
    """A piano-cover-like rearrangement of ``source``.

    The top voice of every onset is kept; other notes are thinned or moved
    an octave and occasionally doubled. ``stretch`` scales all times.
    """
    rng = np.random.default_rng(seed)
    by_onset = {}
    for n in source:
        by_onset.setdefault(n.onset, []).append(n)
    out = []
    for onset in sorted(by_onset):
        group = sorted(by_onset[onset], key=lambda n: n.pitch)
        top = group[-1]
        out.append(top)
        for n in group[:-1]:
            r = rng.random()
            if r < density:
                out.append(n)
            elif r < density + 0.25 and n.pitch - 12 >= 21:
                out.append(NoteEvent(n.onset, n.duration, n.pitch - 12))
        if rng.random() < 0.2 and top.pitch + 12 <= 108:
            out.append(NoteEvent(top.onset, top.duration, top.pitch + 12))
    cover = NoteSequence(out)
    return cover.scaled(stretch) if stretch != 1.0 else cover


def duplicate_section(notes, measures, start, length):
    """Repeat measures ``[start, start + length)`` right after themselves."""
    a = measures[start].start
    b = measures[start + length].start
    span = b - a
    out = []
    for n in notes:
        if n.onset < a:
            out.append(n)
        elif n.onset < b:
            out.append(n)
            out.append(NoteEvent(n.onset + span, n.duration, n.pitch))
        else:
            out.append(NoteEvent(n.onset + span, n.duration, n.pitch))
    return NoteSequence(out)


def jitter(notes, eps, rng):
    """Shift every onset by uniform noise in ``[-eps, eps]`` (clamped at 0)."""
    return NoteSequence(
        NoteEvent(max(0.0, n.onset + rng.uniform(-eps, eps)), n.duration, n.pitch) for n in notes
    )


def write_synthetic_corpus(outdir, n_songs, seed=0, n_measures=16):
    """Write ``n_songs`` source/cover/beats triples plus ``manifest.json``.

    Tempi and meters vary per song; covers are mild re-arrangements with
    small global tempo deviations.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for k in range(n_songs):
        bpm = float(rng.choice([84.0, 96.0, 108.0, 120.0, 132.0]))
        meter = int(rng.choice([3, 4, 4]))
        song_seed = int(rng.integers(0, 2**31))
        source, framework = make_song(song_seed, bpm, meter, n_measures)
        cover = make_cover(source, song_seed + 1, stretch=float(rng.choice([1.0, 1.0, 1.01])))
        sid = f"song{k:03d}"
        save_midi(source, framework, outdir / f"{sid}_source.mid")
        save_midi(cover, framework, outdir / f"{sid}_cover.mid")
        save_beats(framework, outdir / f"{sid}_beats.json")
        entries.append(
            {
                "id": sid,
                "source_midi_path": f"{sid}_source.mid",
                "cover_midi_path": f"{sid}_cover.mid",
                "beats_path": f"{sid}_beats.json",
            }
        )
    manifest = outdir / "manifest.json"
    manifest.write_text(json.dumps({"entries": entries}, indent=1) + "\n")
    return manifest
