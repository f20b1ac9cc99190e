import io
import random

import mido
import pytest

from pianocover.beats import BeatFramework, GridPosition, build_measures, position_to_time, slot_span
from pianocover.notes import NoteEvent, NoteSequence


def smf_bytes(tracks, ppq=480, fmt=1):
    """Raw SMF from lists of ``(abs_tick, message)``, built with mido alone."""
    mf = mido.MidiFile(type=fmt, ticks_per_beat=ppq)
    for events in tracks:
        track = mido.MidiTrack()
        now = 0
        for tick, msg in sorted(events, key=lambda e: e[0]):
            track.append(msg.copy(time=tick - now))
            now = tick
        mf.tracks.append(track)
    buf = io.BytesIO()
    mf.save(file=buf)
    return buf.getvalue()


def random_framework(rng, n_measures=None, allow_pickup=True):
    """Random beats: meters 3..6 beats, tempi 60..200 BPM, per-beat tempo drift, optional pickup."""
    n_measures = n_measures or rng.randint(2, 6)
    beats = []
    t = rng.uniform(0.0, 1.0)
    bpm = rng.uniform(60, 200)
    if allow_pickup and rng.random() < 0.3:
        for _ in range(rng.randint(1, 2)):
            beats.append((t, False))
            t += 60.0 / bpm
    for _ in range(n_measures):
        meter = rng.randint(3, 6)
        if rng.random() < 0.4:
            bpm = min(200.0, max(60.0, bpm * rng.uniform(0.8, 1.25)))
        for b in range(meter):
            beats.append((t, b == 0))
            t += 60.0 / bpm * rng.uniform(0.97, 1.03)
    beats.append((t, True))
    return BeatFramework(tuple(beats))


def random_on_grid_score(rng, measures, table=(1, 2, 3, 4, 6, 8, 12, 16, 24, 32), density=0.3):
    """Notes exactly on slot boundaries with allowed durations, one per (slot, pitch)."""
    notes = []
    for m in measures:
        for pos in range(m.n_slots):
            if rng.random() > density:
                continue
            gp = GridPosition(m.index, pos)
            for pitch in rng.sample(range(21, 109), rng.randint(1, 3)):
                d = rng.choice(table)
                notes.append(NoteEvent(position_to_time(gp, measures), slot_span(gp, d, measures), pitch))
    return NoteSequence(notes)


@pytest.fixture
def rng():
    return random.Random(1234)
