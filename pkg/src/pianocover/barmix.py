"""Bar-wise mixed training sequences and the JSONL corpus format.

A window for target bar ``i`` is ``X_{i-4} Y_{i-4} ... X_{i-1} Y_{i-1} X_i Y_i``
with a parallel class id (SRC/TGT), the style bins of each token's own bar
pair, and a loss mask covering only ``Y_i``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .tokens import BAR_BOS, BAR_EOS, VOCAB

SRC = 0
TGT = 1
MAX_LEN = 1024
CONTEXT_BARS = 4
EMPTY_BAR = (BAR_BOS, BAR_EOS)


@dataclass(frozen=True)
class MixedSequence:
    token_ids: tuple
    class_ids: tuple
    style_ids: tuple
    loss_mask: tuple
    song_id: str = ""
    target_index: int = 0

    def __post_init__(self):
        n = len(self.token_ids)
        if not len(self.class_ids) == len(self.style_ids) == len(self.loss_mask) == n:
            raise ValueError("parallel streams must have equal length")

    def __len__(self):
        return len(self.token_ids)

    def to_json(self):
        return json.dumps(
            {
                "tokens": list(self.token_ids),
                "class": list(self.class_ids),
                "style": [list(s) for s in self.style_ids],
                "loss": list(self.loss_mask),
            },
            separators=(",", ":"),
        )


@dataclass
class BuildStats:
    emitted: int = 0
    truncated: int = 0
    skipped: list = field(default_factory=list)  # (song id, target index, length)

    def merge(self, other):
        self.emitted += other.emitted
        self.truncated += other.truncated
        self.skipped.extend(other.skipped)
        return self

    def to_dict(self):
        return {
            "windows_emitted": self.emitted,
            "windows_skipped": len(self.skipped),
            "windows_truncated": self.truncated,
            "skipped": [
                {"song": s, "target_index": i, "length": n} for s, i, n in self.skipped
            ],
        }


def pad_bars(x_bars, y_bars):
    """Pad the shorter side with empty bars."""
    n = max(len(x_bars), len(y_bars))
    x = list(x_bars) + [list(EMPTY_BAR)] * (n - len(x_bars))
    y = list(y_bars) + [list(EMPTY_BAR)] * (n - len(y_bars))
    return x, y


def _ids(bar, vocab):
    return [t if isinstance(t, int) else vocab.token_id(t) for t in bar]


def interleave(x_bars, y_bars, vocab=VOCAB):
    """``[X_1, Y_1, X_2, Y_2, ...]`` as token ids with a parallel class-id list."""
    x_bars, y_bars = pad_bars(x_bars, y_bars)
    tokens, classes = [], []
    for x, y in zip(x_bars, y_bars):
        xi, yi = _ids(x, vocab), _ids(y, vocab)
        tokens += xi + yi
        classes += [SRC] * len(xi) + [TGT] * len(yi)
    return tokens, classes


def training_windows(
    x_bars, y_bars, bins, song_id="", max_len=MAX_LEN, context=CONTEXT_BARS, vocab=VOCAB
):
    """Build one :class:`MixedSequence` per target bar.

    ``bins[i]`` is the ``(polyphony, rhythm, sustain)`` bin triple of pair ``i``.
    Over-long windows lose their oldest context pairs first; a window whose
    own pair exceeds ``max_len`` is skipped and reported in the returned
    :class:`BuildStats`.
    """
    x_bars, y_bars = pad_bars(x_bars, y_bars)
    if len(bins) != len(x_bars):
        raise ValueError(f"got {len(bins)} bin triples for {len(x_bars)} bar pairs")
    xs = [_ids(b, vocab) for b in x_bars]
    ys = [_ids(b, vocab) for b in y_bars]
    sizes = [len(x) + len(y) for x, y in zip(xs, ys)]
    windows, stats = [], BuildStats()
    for i in range(len(xs)):
        if sizes[i] > max_len:
            stats.skipped.append((song_id, i, sizes[i]))
            continue
        first = max(0, i - context)
        while sum(sizes[first : i + 1]) > max_len:
            first += 1
        if first > max(0, i - context):
            stats.truncated += 1
        tokens, classes, styles, loss = [], [], [], []
        for k in range(first, i + 1):
            style = tuple(int(b) for b in bins[k])
            for part, cls in ((xs[k], SRC), (ys[k], TGT)):
                tokens += part
                classes += [cls] * len(part)
                styles += [style] * len(part)
                loss += [1 if (k == i and cls == TGT) else 0] * len(part)
        windows.append(
            MixedSequence(tuple(tokens), tuple(classes), tuple(styles), tuple(loss), song_id, i)
        )
        stats.emitted += 1
    return windows, stats


def export_corpus(windows, path):
    """Write windows as JSONL ordered by (song id, target index)."""
    ordered = sorted(windows, key=lambda w: (w.song_id, w.target_index))
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        for w in ordered:
            fh.write(w.to_json() + "\n")
    return len(ordered)


def read_corpus(path):
    with open(Path(path), encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
