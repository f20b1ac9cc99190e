"""Note stream data model and Standard MIDI File reading/writing."""

import io
import warnings
from bisect import bisect_right
from dataclasses import dataclass

import mido

from ._validation import check_non_negative, check_positive
from .exceptions import DanglingNoteOnWarning, MalformedFile, UnsupportedFormat

PITCH_MIN = 21
PITCH_MAX = 108
PPQ = 960
DEFAULT_VELOCITY = 80
DEFAULT_TEMPO = 500000  # µs per quarter note


@dataclass(frozen=True, order=True)
class NoteEvent:
    onset: float
    duration: float
    pitch: int

    def __post_init__(self):
        object.__setattr__(self, "onset", check_non_negative(self.onset, "onset"))
        object.__setattr__(self, "duration", check_positive(self.duration, "duration"))
        if isinstance(self.pitch, bool) or int(self.pitch) != self.pitch:
            raise TypeError(f"pitch must be an integer, got {self.pitch!r}")
        object.__setattr__(self, "pitch", int(self.pitch))
        if not PITCH_MIN <= self.pitch <= PITCH_MAX:
            raise ValueError(f"pitch {self.pitch} outside piano range [{PITCH_MIN}, {PITCH_MAX}]")

    @property
    def offset(self):
        return self.onset + self.duration


def _sort_key(n):
    return (n.onset, n.pitch, n.duration)


class NoteSequence:
    """Immutable note list kept sorted by (onset, pitch)."""

    __slots__ = ("_notes",)

    def __init__(self, notes=()):
        notes = [n if isinstance(n, NoteEvent) else NoteEvent(*n) for n in notes]
        notes.sort(key=_sort_key)
        self._notes = tuple(notes)

    @property
    def notes(self):
        return self._notes

    def __len__(self):
        return len(self._notes)

    def __iter__(self):
        return iter(self._notes)

    def __getitem__(self, i):
        return self._notes[i]

    def __eq__(self, other):
        return isinstance(other, NoteSequence) and self._notes == other._notes

    def __hash__(self):
        return hash(self._notes)

    def __repr__(self):
        return f"NoteSequence({len(self)} notes)"

    @property
    def onsets(self):
        return [n.onset for n in self._notes]

    @property
    def end_time(self):
        return max((n.offset for n in self._notes), default=0.0)

    def scaled(self, factor):
        check_positive(factor, "factor")
        return NoteSequence(
            NoteEvent(n.onset * factor, n.duration * factor, n.pitch) for n in self._notes
        )

    def shifted(self, seconds):
        return NoteSequence(
            NoteEvent(n.onset + seconds, n.duration, n.pitch) for n in self._notes
        )


def allclose(a, b, atol=1e-3):
    """True when both sequences hold the same pitches with onsets/durations within ``atol``."""
    if len(a) != len(b):
        return False
    # re-sort with a tolerance-free key: the sort order of nearly equal onsets may differ
    ka = sorted(a, key=lambda n: (round(n.onset / atol), n.pitch))
    kb = sorted(b, key=lambda n: (round(n.onset / atol), n.pitch))
    return all(
        x.pitch == y.pitch
        and abs(x.onset - y.onset) <= atol
        and abs(x.duration - y.duration) <= atol
        for x, y in zip(ka, kb)
    )


class _TempoMap:
    """Piecewise-constant tempo map over ticks."""

    def __init__(self, changes, ppq):
        # changes: sorted (tick, µs per quarter); last change at a tick wins
        ticks, tempos = [0], [DEFAULT_TEMPO]
        for tick, tempo in changes:
            if tick == ticks[-1]:
                tempos[-1] = tempo
            else:
                ticks.append(tick)
                tempos.append(tempo)
        seconds = [0.0]
        for i in range(1, len(ticks)):
            seconds.append(seconds[-1] + (ticks[i] - ticks[i - 1]) * tempos[i - 1] / (ppq * 1e6))
        self.ticks, self.tempos, self.seconds, self.ppq = ticks, tempos, seconds, ppq

    def to_seconds(self, tick):
        i = bisect_right(self.ticks, tick) - 1
        return self.seconds[i] + (tick - self.ticks[i]) * self.tempos[i] / (self.ppq * 1e6)


def _parse(data):
    try:
        return mido.MidiFile(file=io.BytesIO(bytes(data)))
    except (OSError, EOFError, ValueError, KeyError, IndexError) as exc:
        raise MalformedFile(f"cannot parse MIDI data: {exc}") from None


def read_smf(data):
    """Parse SMF bytes (format 0 or 1) into a :class:`NoteSequence`.

    Tracks are merged and velocity is discarded. A note-on at a pitch that is
    already sounding ends the earlier note. Note-ons never switched off are
    ended at their track's last event and reported through
    :class:`DanglingNoteOnWarning`.
    """
    if len(data) < 14 or bytes(data[:4]) != b"MThd":
        raise MalformedFile("missing MThd header chunk")
    midi = _parse(data)
    if midi.type == 2:
        raise UnsupportedFormat("format 2 (asynchronous tracks) is not supported")
    if midi.ticks_per_beat <= 0:
        raise UnsupportedFormat("SMPTE time division is not supported")

    events = []  # (tick, order, track, msg)
    track_end = []
    order = 0
    for ti, track in enumerate(midi.tracks):
        tick = 0
        for msg in track:
            tick += msg.time
            events.append((tick, order, ti, msg))
            order += 1
        track_end.append(tick)

    tempo_changes = sorted(
        ((tick, msg.tempo) for tick, _, _, msg in events if msg.type == "set_tempo"),
        key=lambda c: c[0],
    )
    tmap = _TempoMap(tempo_changes, midi.ticks_per_beat)

    # at equal ticks, note-offs resolve before note-ons
    def key(e):
        tick, order, _, msg = e
        is_on = msg.type == "note_on" and msg.velocity > 0
        return (tick, is_on, order)

    active = {}  # pitch -> (start tick, track)
    spans = []
    for tick, _, ti, msg in sorted(events, key=key):
        if msg.type not in ("note_on", "note_off"):
            continue
        if msg.type == "note_on" and msg.velocity > 0:
            if msg.note in active:
                spans.append((active.pop(msg.note)[0], tick, msg.note))
            active[msg.note] = (tick, ti)
        elif msg.note in active:
            spans.append((active.pop(msg.note)[0], tick, msg.note))
    if active:
        for pitch, (start, ti) in active.items():
            spans.append((start, track_end[ti], pitch))
        warnings.warn(DanglingNoteOnWarning(len(active)), stacklevel=2)

    notes = []
    for start, end, pitch in spans:
        if not PITCH_MIN <= pitch <= PITCH_MAX or end <= start:
            continue
        on = tmap.to_seconds(start)
        notes.append(NoteEvent(on, tmap.to_seconds(end) - on, pitch))
    return NoteSequence(notes)


def _beat_ticks(framework, ppq):
    """Tempo segments (tick, µs per quarter) placing every beat on a quarter note.

    Beat times are rounded to whole microseconds first so rounding errors in
    the per-beat tempo never accumulate.
    """
    times = [t for t, _ in framework.beats]
    us = [round(t * 1e6) for t in times]
    segments = []
    tick = 0
    if us[0] > 0:
        first = us[1] - us[0]
        lead = max(1, round(us[0] / first * ppq))
        segments.append((0, round(us[0] * ppq / lead)))
        tick = lead
    beat_ticks = []
    for i in range(len(us)):
        beat_ticks.append(tick + i * ppq)
        if i + 1 < len(us):
            segments.append((tick + i * ppq, us[i + 1] - us[i]))
    return segments, beat_ticks


def write_smf(notes, framework, ppq=PPQ):
    """Render notes as a format-0 SMF whose tempo map follows ``framework``.

    Each framework beat becomes one quarter note; a tempo event is written
    wherever the beat spacing changes and a time signature wherever the
    number of beats per measure changes. Velocity is fixed at 80.
    """
    from .beats import build_measures

    segments, beat_ticks = _beat_ticks(framework, ppq)
    tmap = _TempoMap(segments, ppq)

    def to_tick(t):
        # invert the piecewise-linear map, extrapolating the last tempo
        i = bisect_right(tmap.seconds, t) - 1
        i = max(i, 0)
        return tmap.ticks[i] + (t - tmap.seconds[i]) * ppq * 1e6 / tmap.tempos[i]

    meta = []
    last = None
    for tick, tempo in segments:
        if tempo != last:
            meta.append((tick, 0, mido.MetaMessage("set_tempo", tempo=min(tempo, 0xFFFFFF))))
            last = tempo

    beat_index = {t: i for i, (t, _) in enumerate(framework.beats)}
    last_sig = None
    for m in build_measures(framework):
        if m.beats_in_measure != last_sig:
            sig = mido.MetaMessage("time_signature", numerator=m.beats_in_measure, denominator=4)
            meta.append((beat_ticks[beat_index[m.start]], 1, sig))
            last_sig = m.beats_in_measure

    body = []
    for n in notes:
        exact = to_tick(n.onset)
        on = round(exact)
        # shift the offset by the onset's rounding so the duration is rounded once
        off = max(round(to_tick(n.offset) - (exact - on)), on + 1)
        body.append((on, 3, mido.Message("note_on", note=n.pitch, velocity=DEFAULT_VELOCITY)))
        body.append((off, 2, mido.Message("note_off", note=n.pitch, velocity=0)))

    track = mido.MidiTrack()
    now = 0
    for tick, _, msg in sorted(meta + body, key=lambda e: (e[0], e[1])):
        track.append(msg.copy(time=tick - now))
        now = tick
    track.append(mido.MetaMessage("end_of_track", time=0))

    out = mido.MidiFile(type=0, ticks_per_beat=ppq)
    out.tracks.append(track)
    buf = io.BytesIO()
    out.save(file=buf)
    return buf.getvalue()


def load_midi(path):
    with open(path, "rb") as fh:
        return read_smf(fh.read())


def save_midi(notes, framework, path):
    with open(path, "wb") as fh:
        fh.write(write_smf(notes, framework))
