import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pianocover.beats import (
    BeatFramework,
    GridPosition,
    MeasureGrid,
    build_measures,
    load_beats,
    position_to_time,
    quantize_duration,
    quantize_time,
    save_beats,
    slot_span,
    synth_beats,
)
from pianocover.exceptions import InvalidMeter, NoDownbeat, NonMonotoneBeats, PositionOutOfRange

from conftest import random_framework


@pytest.fixture
def m120():
    return build_measures(synth_beats(120, 4, 4))


@pytest.fixture
def ritardando():
    return build_measures(BeatFramework(((0.0, True), (0.6, False), (1.0, True))))


def test_constant_4_4_measures(m120):
    assert all(m.end - m.start == pytest.approx(2.0) for m in m120)
    m = m120[0]
    assert m.n_slots == 16
    widths = [b - a for a, b in zip(m.slot_boundaries, m.slot_boundaries[1:])]
    assert widths == pytest.approx([0.125] * 16)


def test_three_beat_measure_has_12_slots():
    ms = build_measures(synth_beats(90, 3, 2))
    assert [m.n_slots for m in ms] == [12, 12]
    assert ms[0].end == pytest.approx(2.0)


def test_ritardando_slot_boundaries(ritardando):
    # hand-computed: 0..0.6 split in 4, 0.6..1.0 split in 4
    expected = [0.0, 0.15, 0.3, 0.45, 0.6, 0.7, 0.8, 0.9, 1.0]
    assert list(ritardando[0].slot_boundaries) == pytest.approx(expected)
    assert position_to_time(GridPosition(0, 4), ritardando) == pytest.approx(0.6)


def test_trailing_measure_extrapolates_last_interval(ritardando):
    tail = ritardando[-1]
    assert tail.is_synthetic
    assert tail.start == 1.0
    assert tail.beats_in_measure == 2
    assert tail.end == pytest.approx(1.8)


def test_pickup_measure():
    fw = BeatFramework(((0.0, False), (0.5, True), (1.0, False), (1.5, True), (2.0, False)))
    ms = build_measures(fw)
    assert ms[0].is_pickup and ms[0].index == 0 and ms[0].beats_in_measure == 1
    assert [m.start for m in ms] == [0.0, 0.5, 1.5]
    assert ms[-1].end == pytest.approx(2.5)


def test_trailing_observed_beats_kept():
    fw = BeatFramework(((0.0, True), (0.5, False), (1.0, True), (1.4, False)))
    tail = build_measures(fw)[-1]
    assert tail.beats_in_measure == 2
    assert tail.slot_boundaries[4] == 1.4
    assert tail.end == pytest.approx(1.8)


def test_framework_errors():
    with pytest.raises(NoDownbeat):
        BeatFramework(((0.0, False), (1.0, False)))
    with pytest.raises(NonMonotoneBeats):
        BeatFramework(((0.0, True), (0.0, False)))
    with pytest.raises(NonMonotoneBeats):
        BeatFramework(((0.0, True),))
    too_long = [(i * 0.1, i == 0 or i == 13) for i in range(15)]
    with pytest.raises(InvalidMeter):
        build_measures(BeatFramework(tuple(too_long)))


@pytest.mark.parametrize(
    "t, expected",
    [(0.130, (0, 1)), (0.0, (0, 0)), (1.99, (1, 0)), (2.0, (1, 0)), (0.0625, (0, 1)), (0.062, (0, 0))],
)
def test_quantize_time_examples(m120, t, expected):
    assert quantize_time(t, m120) == GridPosition(*expected)


def test_quantize_time_clamps(m120):
    assert quantize_time(-1.0, m120) == GridPosition(0, 0)
    last = len(m120) - 1
    assert quantize_time(100.0, m120) == GridPosition(last, 15)
    assert quantize_time(m120[-1].end - 0.01, m120) == GridPosition(last, 15)


@pytest.mark.parametrize("d, expected", [(0.5, 4), (0.04, 0), (0.7, 6), (0.125 * 5, 4), (0.125 * 7, 6), (20.0, 32)])
def test_quantize_duration_examples(m120, d, expected):
    assert quantize_duration(d, GridPosition(0, 0), m120) == expected


def test_quantize_duration_follows_tempo_change(ritardando):
    # 2 slots of 0.15 s then 2 slots of 0.1 s from pos 2
    assert quantize_duration(0.5, GridPosition(0, 2), ritardando) == 4


def test_snap_ties_go_shorter(m120):
    from pianocover.beats import snap_duration

    assert snap_duration(5) == 4
    assert snap_duration(7) == 6
    assert snap_duration(10) == 8
    assert snap_duration(28) == 24


def test_position_to_time_examples(m120):
    assert position_to_time(GridPosition(0, 0), m120) == m120[0].start
    assert position_to_time(GridPosition(1, 4), m120) == pytest.approx(2.5)
    with pytest.raises(PositionOutOfRange):
        position_to_time(GridPosition(0, 16), m120)
    with pytest.raises(PositionOutOfRange):
        position_to_time(GridPosition(99, 0), m120)


def test_slot_span_crosses_measures_and_extrapolates(m120):
    assert slot_span(GridPosition(0, 8), 32, m120) == pytest.approx(4.0)
    last = len(m120) - 1
    assert slot_span(GridPosition(last, 12), 8, m120) == pytest.approx(1.0)


def test_beats_json_roundtrip(tmp_path):
    fw = synth_beats(100, 3, 3)
    save_beats(fw, tmp_path / "b.json")
    data = json.loads((tmp_path / "b.json").read_text())
    assert data[0] == {"time": 0.0, "downbeat": True}
    assert load_beats(tmp_path / "b.json") == fw


def test_synth_beats_examples():
    fw = synth_beats(120, 4, 2)
    assert len(fw.beats) == 8
    assert [t for t, d in fw.beats if d] == [0.0, 2.0]
    fw = synth_beats(90, 3, 2)
    assert fw.beats[1][0] - fw.beats[0][0] == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        synth_beats(120, 4, 0)


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_quantize_inverts_position_to_time(seed):
    ms = build_measures(random_framework(random.Random(seed)))
    grid = MeasureGrid(ms)
    for m in ms:
        for pos in range(m.n_slots):
            p = GridPosition(m.index, pos)
            assert quantize_time(position_to_time(p, grid), grid) == p


@settings(max_examples=80, deadline=None)
@given(seeds, st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20))
def test_quantization_error_bounded_by_half_slot(seed, fractions):
    ms = build_measures(random_framework(random.Random(seed)))
    grid = MeasureGrid(ms)
    lo, hi = grid.boundaries[0], grid.boundaries[-1]
    for f in fractions:
        t = lo + f * (hi - lo)
        s = grid.nearest_slot(t)
        err = abs(position_to_time(quantize_time(t, grid), grid) - t)
        widths = [grid.boundaries[k + 1] - grid.boundaries[k] for k in range(max(0, s - 1), min(grid.n_slots, s + 1))]
        # t past the final boundary's midpoint clamps to the last slot
        if t <= grid.boundaries[-1] - (grid.boundaries[-1] - grid.boundaries[-2]) / 2:
            assert err <= max(widths) / 2 + 1e-12


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_measures_tile_without_gaps(seed):
    fw = random_framework(random.Random(seed))
    ms = build_measures(fw)
    assert ms[0].start == fw.beats[0][0]
    for a, b in zip(ms, ms[1:]):
        assert a.end == b.start
    for m in ms:
        sb = m.slot_boundaries
        assert len(sb) == 4 * m.beats_in_measure + 1
        assert sb[0] == m.start and sb[-1] == m.end
        assert all(y > x for x, y in zip(sb, sb[1:]))
        assert 1 <= m.beats_in_measure <= 12
    last_down = max(t for t, d in fw.beats if d)
    assert ms[-1].start == last_down
