import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pianocover.barmix import (
    SRC,
    TGT,
    BuildStats,
    MixedSequence,
    export_corpus,
    interleave,
    pad_bars,
    read_corpus,
    training_windows,
)
from pianocover.tokens import VOCAB, token_id

EMPTY = ["BarBOS", "BarEOS"]


def note_bar(n, pos=0, pitch=60, span=40):
    bar = ["BarBOS", f"Pos_{pos}"]
    for k in range(n):
        bar += [f"Note_{pitch + k % span}", "Dur_1"]
    return bar + ["BarEOS"]


def tagged_bars(n, seed):
    """Bars whose first note pitch encodes (side, index) so provenance is checkable."""
    r = random.Random(seed)
    xs = [note_bar(r.randint(0, 4), pitch=21 + i % 40) for i in range(n)]
    ys = [note_bar(r.randint(0, 4), pitch=70 + i % 38) for i in range(n)]
    return xs, ys


def ids(bar):
    return [token_id(t) for t in bar]


def test_interleave_two_bars():
    x = [note_bar(1), EMPTY]
    y = [note_bar(2), note_bar(1, pos=4)]
    tokens, classes = interleave(x, y)
    assert tokens == ids(x[0]) + ids(y[0]) + ids(x[1]) + ids(y[1])
    assert classes == [SRC] * 5 + [TGT] * 7 + [SRC] * 2 + [TGT] * 5


def test_interleave_empty_and_padding():
    assert interleave([], []) == ([], [])
    x, y = pad_bars([note_bar(1)] * 3, [note_bar(1)] * 2)
    assert y[2] == EMPTY and len(x) == 3


def test_window_at_zero_and_five():
    xs, ys = tagged_bars(8, 0)
    bins = [(i % 5, 0, 4) for i in range(8)]
    windows, stats = training_windows(xs, ys, bins, song_id="s")
    assert stats.emitted == 8 and not stats.skipped
    w0 = windows[0]
    assert list(w0.token_ids) == ids(xs[0]) + ids(ys[0])
    assert list(w0.loss_mask) == [0] * len(xs[0]) + [1] * len(ys[0])
    w5 = windows[5]
    expected = []
    for k in range(1, 6):
        expected += ids(xs[k]) + ids(ys[k])
    assert list(w5.token_ids) == expected
    assert sum(w5.loss_mask) == len(ys[5])
    assert w5.loss_mask[-len(ys[5]):] == (1,) * len(ys[5])
    assert w5.style_ids[0] == bins[1] and w5.style_ids[-1] == bins[5]


def test_giant_pair_skipped():
    xs = [note_bar(2), note_bar(549), note_bar(2)]  # 1 + 1 + 549*2 + 1 = 1101 tokens
    ys = [note_bar(1)] * 3
    windows, stats = training_windows(xs, ys, [(2, 2, 2)] * 3, song_id="g")
    assert [w.target_index for w in windows] == [0, 2]
    assert stats.skipped == [("g", 1, len(xs[1]) + len(ys[1]))]
    assert stats.to_dict()["windows_skipped"] == 1
    # dropping oldest-first removes pair 0 before the giant pair 1
    assert list(windows[1].token_ids) == ids(xs[2]) + ids(ys[2])
    assert stats.truncated == 1


def test_front_truncation_drops_oldest_first():
    xs = [note_bar(150) for _ in range(6)]  # 303 tokens each
    ys = [EMPTY] * 6
    windows, stats = training_windows(xs, ys, [(0, 0, 0)] * 6)
    w = windows[5]
    assert len(w) == 3 * 305  # three pairs fit, the oldest two are dropped
    assert stats.truncated == 3  # windows 3, 4, 5 lost context


def test_bins_length_mismatch():
    with pytest.raises(ValueError):
        training_windows([EMPTY], [EMPTY], [])


def test_export(tmp_path):
    export_corpus([], tmp_path / "e.jsonl")
    assert (tmp_path / "e.jsonl").read_bytes() == b""
    xs, ys = tagged_bars(6, 1)
    windows, _ = training_windows(xs, ys, [(1, 2, 3)] * 6, song_id="b")
    more, _ = training_windows(xs, ys, [(1, 2, 3)] * 6, song_id="a")
    export_corpus(windows + more, tmp_path / "1.jsonl")
    export_corpus(list(reversed(more + windows)), tmp_path / "2.jsonl")
    assert (tmp_path / "1.jsonl").read_bytes() == (tmp_path / "2.jsonl").read_bytes()
    rows = read_corpus(tmp_path / "1.jsonl")
    assert len(rows) == 12
    for row in rows:
        assert set(row) == {"tokens", "class", "style", "loss"}
        assert len({len(v) for v in row.values()}) == 1
    assert rows[0]["tokens"] == list(more[0].token_ids)


def test_mixed_sequence_rejects_ragged():
    with pytest.raises(ValueError):
        MixedSequence((1, 2), (0,), ((0, 0, 0),) * 2, (0, 0))


def test_build_stats_merge():
    a = BuildStats(2, 1, [("a", 0, 2000)])
    a.merge(BuildStats(3, 0, [("b", 4, 1500)]))
    assert a.emitted == 5 and len(a.skipped) == 2


bar_sizes = st.lists(st.tuples(st.integers(0, 300), st.integers(0, 300)), min_size=0, max_size=14)


@settings(max_examples=150, deadline=None)
@given(bar_sizes, st.integers(0, 2**31))
def test_window_structure(sizes, seed):
    r = random.Random(seed)
    # X bars use low pitches, Y bars high ones so each token's origin is identifiable
    xs = [note_bar(a, pitch=21) if a else EMPTY for a, _ in sizes]
    ys = [note_bar(b, pitch=61) if b else EMPTY for _, b in sizes]
    bins = [tuple(r.randint(0, 4) for _ in range(3)) for _ in sizes]
    windows, stats = training_windows(xs, ys, bins, song_id="f")
    assert stats.emitted + len(stats.skipped) == len(sizes)
    x_ids = {token_id(f"Note_{p}") for p in range(21, 61)}
    y_ids = {token_id(f"Note_{p}") for p in range(61, 109)}
    for w in windows:
        i = w.target_index
        assert len(w) <= 1024
        assert sum(w.loss_mask) == len(ys[i])
        assert w.loss_mask[-len(ys[i]):] == (1,) * len(ys[i])
        assert w.token_ids[-len(ys[i]) - len(xs[i]):] == tuple(ids(xs[i]) + ids(ys[i]))
        for tok, cls in zip(w.token_ids, w.class_ids):
            if tok in x_ids:
                assert cls == SRC
            if tok in y_ids:
                assert cls == TGT
        # BarBOS alternates SRC/TGT, starting with SRC
        bos = [c for t, c in zip(w.token_ids, w.class_ids) if t == token_id("BarBOS")]
        assert bos == [SRC, TGT] * (len(bos) // 2)
        assert w.style_ids[-1] == bins[i]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 12), st.integers(0, 2**31))
def test_reconstruct_y_bars(n, seed):
    xs, ys = tagged_bars(n, seed)
    windows, _ = training_windows(xs, ys, [(2, 2, 2)] * n)
    recovered = [
        [VOCAB.id_token(t) for t, m in zip(w.token_ids, w.loss_mask) if m] for w in windows
    ]
    assert recovered == ys
