"""Beat framework, measure construction and the sixteenth-note slot grid.

A :class:`BeatFramework` holds timestamped beats with downbeat flags and is
treated as fixed ground truth. :func:`build_measures` turns it into a list of
:class:`Measure` objects whose beat intervals are each split into four equal
slots, so tempo changes inside a measure are followed exactly.
"""

import bisect
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_positive, round_half_up
from .exceptions import InvalidMeter, NoDownbeat, NonMonotoneBeats, PositionOutOfRange

SLOTS_PER_BEAT = 4
MAX_BEATS_PER_MEASURE = 12
MAX_POS = SLOTS_PER_BEAT * MAX_BEATS_PER_MEASURE  # 48 positions, 0..47

DURATION_TABLE = (1, 2, 3, 4, 6, 8, 12, 16, 24, 32)


@dataclass(frozen=True)
class BeatFramework:
    """Ordered beats as ``(time, is_downbeat)`` pairs."""

    beats: tuple

    def __post_init__(self):
        beats = tuple((float(t), bool(d)) for t, d in self.beats)
        object.__setattr__(self, "beats", beats)
        if len(beats) < 2:
            raise NonMonotoneBeats("a beat framework needs at least 2 beats")
        times = [t for t, _ in beats]
        if not all(math.isfinite(t) for t in times):
            raise NonMonotoneBeats("beat times must be finite")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise NonMonotoneBeats("beat times must be strictly increasing")
        if not any(d for _, d in beats):
            raise NoDownbeat("beat framework contains no downbeat")

    @classmethod
    def from_arrays(cls, times, downbeats):
        return cls(tuple(zip(times, downbeats)))

    @property
    def times(self):
        return np.array([t for t, _ in self.beats])

    @property
    def downbeats(self):
        return np.array([d for _, d in self.beats], dtype=bool)

    def to_json(self):
        return json.dumps([{"time": t, "downbeat": d} for t, d in self.beats], indent=1)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError("beat file must contain a JSON array")
        try:
            return cls(tuple((item["time"], item["downbeat"]) for item in data))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"beat entries need 'time' and 'downbeat' keys: {exc}") from None


def load_beats(path):
    return BeatFramework.from_json(Path(path).read_text())


def save_beats(framework, path):
    Path(path).write_text(framework.to_json() + "\n")


def synth_beats(bpm, beats_per_measure, n_measures, start=0.0):
    """Constant-tempo framework with ``n_measures`` full measures."""
    check_positive(bpm, "bpm")
    if not 1 <= beats_per_measure <= MAX_BEATS_PER_MEASURE:
        raise InvalidMeter(f"beats per measure must be in [1, 12], got {beats_per_measure}")
    if n_measures < 1:
        raise ValueError("need at least one measure")
    n = beats_per_measure * n_measures
    if n < 2:
        n = 2
    period = 60.0 / bpm
    return BeatFramework(
        tuple((start + i * period, i % beats_per_measure == 0) for i in range(n))
    )


@dataclass(frozen=True)
class Measure:
    index: int
    start: float
    end: float
    beats_in_measure: int
    slot_boundaries: tuple
    is_pickup: bool = False
    is_synthetic: bool = False

    @property
    def n_slots(self):
        return SLOTS_PER_BEAT * self.beats_in_measure

    def slot_width(self, pos):
        return self.slot_boundaries[pos + 1] - self.slot_boundaries[pos]


@dataclass(frozen=True, order=True)
class GridPosition:
    measure_index: int
    pos: int


def _subdivide(beat_times):
    out = []
    for a, b in zip(beat_times, beat_times[1:]):
        w = (b - a) / SLOTS_PER_BEAT
        out.extend(a + k * w for k in range(SLOTS_PER_BEAT))
    out.append(beat_times[-1])
    return tuple(out)


def _make_measure(index, beat_times, **flags):
    n = len(beat_times) - 1
    if n > MAX_BEATS_PER_MEASURE:
        raise InvalidMeter(
            f"measure {index} spans {n} beats; at most {MAX_BEATS_PER_MEASURE} are supported"
        )
    return Measure(index, beat_times[0], beat_times[-1], n, _subdivide(beat_times), **flags)


def build_measures(framework):
    """Split a framework into measures, including pickup and trailing measures.

    Beats before the first downbeat form a pickup measure. After the last
    downbeat one synthetic measure is appended; beats observed there are kept
    and the rest are extrapolated at the last inter-beat interval.
    """
    times = [t for t, _ in framework.beats]
    down = [i for i, (_, d) in enumerate(framework.beats) if d]
    if not down:
        raise NoDownbeat("beat framework contains no downbeat")
    measures = []
    if down[0] > 0:
        measures.append(_make_measure(0, times[: down[0] + 1], is_pickup=True))
    for a, b in zip(down, down[1:]):
        measures.append(_make_measure(len(measures), times[a : b + 1]))

    observed = times[down[-1] :]
    full = [m for m in measures if not m.is_pickup]
    if full:
        n_beats = max(full[-1].beats_in_measure, len(observed) - 1)
    else:
        pickup = measures[0].beats_in_measure if measures else 0
        n_beats = max(len(observed) - 1, pickup, 1)
    last_interval = times[-1] - times[-2]
    tail = list(observed)
    while len(tail) < n_beats + 1:
        tail.append(tail[-1] + last_interval)
    measures.append(_make_measure(len(measures), tail, is_synthetic=True))
    return measures


class MeasureGrid:
    """Flattened slot boundaries of a measure list, for fast lookups.

    Every public function in this module accepts either a list of
    :class:`Measure` or a prebuilt grid.
    """

    def __init__(self, measures):
        measures = list(measures)
        if not measures:
            raise ValueError("measure list is empty")
        self.measures = measures
        starts, slot_measure, slot_pos, first_slot = [], [], [], []
        for m in measures:
            first_slot.append(len(starts))
            starts.extend(m.slot_boundaries[:-1])
            slot_measure.extend([m.index] * m.n_slots)
            slot_pos.extend(range(m.n_slots))
        starts.append(measures[-1].end)
        self.boundaries = starts
        self.slot_measure = slot_measure
        self.slot_pos = slot_pos
        self.first_slot = first_slot
        self.n_slots = len(starts) - 1
        self.last_width = starts[-1] - starts[-2]

    def slot_index(self, position):
        m, pos = position.measure_index, position.pos
        if not 0 <= m < len(self.measures):
            raise PositionOutOfRange(f"measure {m} does not exist ({len(self.measures)} measures)")
        if not 0 <= pos < self.measures[m].n_slots:
            raise PositionOutOfRange(
                f"pos {pos} out of range for measure {m} with {self.measures[m].n_slots} slots"
            )
        return self.first_slot[m] + pos

    def position(self, slot):
        return GridPosition(self.slot_measure[slot], self.slot_pos[slot])

    def time_at(self, slot):
        """Boundary time of a (possibly extrapolated) slot index."""
        if slot <= self.n_slots:
            return self.boundaries[slot]
        return self.boundaries[-1] + (slot - self.n_slots) * self.last_width

    def nearest_slot(self, t):
        b = self.boundaries
        if t <= b[0]:
            return 0
        k = bisect.bisect_left(b, t)
        if k > self.n_slots:
            return self.n_slots - 1
        # ties go to the later boundary
        if t - b[k - 1] < b[k] - t:
            k -= 1
        return min(k, self.n_slots - 1)

    def fractional_slots(self, slot, d):
        """Number of slots (fractional) covered by ``d`` seconds from ``slot``."""
        b = self.boundaries
        end = b[slot] + d
        if end >= b[-1]:
            return self.n_slots + (end - b[-1]) / self.last_width - slot
        k = bisect.bisect_right(b, end) - 1
        return k + (end - b[k]) / (b[k + 1] - b[k]) - slot


def as_grid(measures):
    return measures if isinstance(measures, MeasureGrid) else MeasureGrid(measures)


def quantize_time(t, measures):
    """Grid position of the slot boundary nearest to ``t``.

    A measure's end boundary is reported as position 0 of the next measure;
    times past the end of the last measure clamp to its final slot.
    """
    grid = as_grid(measures)
    return grid.position(grid.nearest_slot(t))


def snap_duration(count, table=DURATION_TABLE):
    """Nearest allowed duration; ties resolve to the shorter value."""
    best = table[0]
    for v in table:
        if abs(v - count) < abs(best - count):
            best = v
    return best


def quantize_duration(d, at, measures, table=DURATION_TABLE):
    """Duration in sixteenths, snapped to ``table``; 0 flags a grace candidate.

    The slot count is measured along the grid starting at ``at``, so a note
    crossing a tempo change is counted in the slots it actually covers.
    """
    check_positive(d, "duration")
    grid = as_grid(measures)
    count = round_half_up(grid.fractional_slots(grid.slot_index(at), d))
    if count <= 0:
        return 0
    return snap_duration(count, table)


def position_to_time(p, measures):
    grid = as_grid(measures)
    return grid.boundaries[grid.slot_index(p)]


def slot_span(p, count, measures):
    """Seconds covered by ``count`` slots starting at ``p``, extrapolating past the end."""
    grid = as_grid(measures)
    s = grid.slot_index(p)
    return grid.time_at(s + count) - grid.time_at(s)


def measure_boundaries(measures):
    """Measure start times followed by the end of the last measure."""
    return [m.start for m in measures] + [measures[-1].end]
