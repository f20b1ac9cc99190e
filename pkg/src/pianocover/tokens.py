"""Tiny-REMI vocabulary and the beat-anchored encoder/decoder.

A bar is encoded as::

    BarBOS (Pos_p ([GraceUp|GraceDown] Note_k Dur_v)+)* BarEOS

Positions count sixteenth-note slots from the start of the measure. Onsets
and durations are resolved against the slot grid of the measure list, so the
token stream itself carries no tempo or meter.
"""

from collections import defaultdict

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import round_half_up
from .beats import DURATION_TABLE, MAX_POS, MeasureGrid, as_grid, build_measures, snap_duration
from .exceptions import GrammarViolation, PositionOutOfRange, UnknownId
from .notes import PITCH_MAX, PITCH_MIN, NoteEvent, NoteSequence

PAD = "Pad"
BAR_BOS = "BarBOS"
BAR_EOS = "BarEOS"
GRACE_UP = "GraceUp"
GRACE_DOWN = "GraceDown"
GRACE_SECONDS = 0.06


class Vocab:
    """Bijection between token spellings and integer ids."""

    def __init__(self, duration_table=DURATION_TABLE):
        table = tuple(int(v) for v in duration_table)
        if len(table) != 10 or any(b <= a for a, b in zip(table, table[1:])) or table[0] < 1:
            raise ValueError("duration table must hold 10 strictly increasing positive integers")
        self.duration_table = table
        self.tokens = (
            [PAD, BAR_BOS, BAR_EOS]
            + [f"Pos_{p}" for p in range(MAX_POS)]
            + [f"Note_{k}" for k in range(PITCH_MIN, PITCH_MAX + 1)]
            + [f"Dur_{v}" for v in table]
            + [GRACE_UP, GRACE_DOWN]
        )
        self.ids = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def token_id(self, token):
        try:
            return self.ids[token]
        except KeyError:
            raise UnknownId(f"unknown token {token!r}") from None

    def id_token(self, i):
        if isinstance(i, bool) or not isinstance(i, int) or not 0 <= i < len(self.tokens):
            raise UnknownId(f"unknown token id {i!r}")
        return self.tokens[i]


VOCAB = Vocab()


def token_id(token):
    return VOCAB.token_id(token)


def id_token(i):
    return VOCAB.id_token(i)


def split_token(token):
    """``'Pos_8' -> ('Pos', 8)``; value-less tokens give ``(token, None)``."""
    kind, sep, value = token.partition("_")
    if not sep:
        return token, None
    try:
        return kind, int(value)
    except ValueError:
        raise GrammarViolation(f"malformed token {token!r}") from None


def _as_strings(bar, vocab):
    return [vocab.id_token(t) if not isinstance(t, str) else t for t in bar]


def encode(notes, measures, duration_table=DURATION_TABLE):
    """Encode notes into one token list per measure.

    Notes whose quantized duration is zero are grace candidates: when a note
    one semitone away sits at the same position, the candidate becomes a
    Grace token in front of that note (GraceUp for an ornament above it);
    otherwise it is kept as an ordinary note of one sixteenth.
    """
    grid = as_grid(measures)
    mains = defaultdict(dict)  # slot -> {pitch: sixteenths}
    candidates = defaultdict(set)
    for n in notes:
        slot = grid.nearest_slot(n.onset)
        count = round_half_up(grid.fractional_slots(slot, n.duration))
        if count <= 0:
            candidates[slot].add(n.pitch)
        else:
            dur = snap_duration(count, duration_table)
            mains[slot][n.pitch] = max(dur, mains[slot].get(n.pitch, 0))

    graces = defaultdict(dict)  # slot -> {main pitch: token}
    for slot, pitches in candidates.items():
        group = mains[slot]
        leftovers = []
        for g in sorted(pitches):
            if g in group:
                continue
            for main, token in ((g - 1, GRACE_UP), (g + 1, GRACE_DOWN)):
                if main in group and main not in graces[slot]:
                    graces[slot][main] = token
                    break
            else:
                leftovers.append(g)
        for g in leftovers:
            group.setdefault(g, duration_table[0])

    bars = [[BAR_BOS] for _ in grid.measures]
    for slot in sorted(s for s, g in mains.items() if g):
        pos = grid.position(slot)
        bar = bars[pos.measure_index]
        bar.append(f"Pos_{pos.pos}")
        for pitch in sorted(mains[slot]):
            if pitch in graces[slot]:
                bar.append(graces[slot][pitch])
            bar.append(f"Note_{pitch}")
            bar.append(f"Dur_{mains[slot][pitch]}")
    for bar in bars:
        bar.append(BAR_EOS)
    return bars


def parse_bar(bar, vocab=VOCAB, bar_index=None):
    """Parse one bar into ``(pos, pitch, sixteenths, grace)`` tuples.

    Raises :class:`GrammarViolation` for decreasing positions, a Note without
    its Dur, a Grace not followed by a Note, or misplaced tokens.
    """
    toks = _as_strings(bar, vocab)
    if len(toks) < 2 or toks[0] != BAR_BOS or toks[-1] != BAR_EOS:
        raise GrammarViolation("bar must start with BarBOS and end with BarEOS", bar_index)
    events = []
    pos, grace, pitch = None, None, None
    for tok in toks[1:-1]:
        kind, value = split_token(tok)
        if kind == "Pos":
            if not 0 <= value < MAX_POS:
                raise GrammarViolation(f"unknown position token {tok}", bar_index)
            if pitch is not None:
                raise GrammarViolation("Note without Dur", bar_index)
            if grace is not None:
                raise GrammarViolation("dangling Grace", bar_index)
            if pos is not None and value < pos:
                raise GrammarViolation(f"position decreases from {pos} to {value}", bar_index)
            pos = value
        elif kind in (GRACE_UP, GRACE_DOWN):
            if pos is None or grace is not None or pitch is not None:
                raise GrammarViolation(f"misplaced {kind}", bar_index)
            grace = kind
        elif kind == "Note":
            if pos is None:
                raise GrammarViolation("Note before any Pos", bar_index)
            if pitch is not None:
                raise GrammarViolation("Note without Dur", bar_index)
            if not PITCH_MIN <= value <= PITCH_MAX:
                raise GrammarViolation(f"pitch out of range in {tok}", bar_index)
            pitch = value
        elif kind == "Dur":
            if pitch is None:
                raise GrammarViolation("Dur without Note", bar_index)
            if value not in vocab.duration_table:
                raise GrammarViolation(f"unknown duration token {tok}", bar_index)
            events.append((pos, pitch, value, grace))
            pitch, grace = None, None
        else:
            raise GrammarViolation(f"unexpected token {tok!r} inside bar", bar_index)
    if pitch is not None:
        raise GrammarViolation("Note without Dur", bar_index)
    if grace is not None:
        raise GrammarViolation("dangling Grace", bar_index)
    return events


def check_grammar(bar, vocab=VOCAB):
    """Strict check of the canonical encoder output form.

    On top of :func:`parse_bar`: positions strictly increase (one Pos per
    occupied position), every Pos owns at least one note, and pitches ascend
    inside a position group.
    """
    toks = _as_strings(bar, vocab)
    events = parse_bar(toks, vocab)
    n_pos = sum(1 for t in toks if t.startswith("Pos_"))
    if n_pos != len({e[0] for e in events}):
        raise GrammarViolation("repeated or empty Pos group")
    for a, b in zip(events, events[1:]):
        if a[0] == b[0] and b[1] <= a[1]:
            raise GrammarViolation("pitches must ascend within a position group")
    return True


def decode(bars, measures, vocab=VOCAB):
    """Render per-bar tokens back to absolute-time notes.

    Bar ``i`` is placed in measure ``i``; measures without a bar stay silent.
    Durations follow the slot grid from the onset and may run into later
    measures. A Grace token adds a 60 ms note one semitone from its main note,
    starting just before it but never before the measure start.
    """
    grid = as_grid(measures)
    if len(bars) > len(grid.measures):
        raise PositionOutOfRange(f"{len(bars)} bars but only {len(grid.measures)} measures")
    out = []
    for i, bar in enumerate(bars):
        measure = grid.measures[i]
        for pos, pitch, dur, grace in parse_bar(bar, vocab, bar_index=i):
            if pos >= measure.n_slots:
                raise PositionOutOfRange(
                    f"bar {i}: Pos_{pos} beyond {measure.n_slots} slots of this measure"
                )
            slot = grid.first_slot[i] + pos
            onset = grid.time_at(slot)
            out.append(NoteEvent(onset, grid.time_at(slot + dur) - onset, pitch))
            if grace is not None:
                g = pitch + 1 if grace == GRACE_UP else pitch - 1
                if PITCH_MIN <= g <= PITCH_MAX:
                    lead = min(GRACE_SECONDS, measure.slot_width(pos) / 2)
                    out.append(NoteEvent(max(onset - lead, measure.start), GRACE_SECONDS, g))
    return NoteSequence(out)


def bars_to_text(bars, header=None):
    lines = [f"# {header}"] if header else []
    lines.extend(" ".join(bar) for bar in bars)
    return "\n".join(lines) + "\n"


def text_to_bars(text):
    """Parse the one-bar-per-line text format.

    Returns ``(bars, line_numbers)``; ``#`` comment lines and blank lines are
    skipped.
    """
    bars, lines = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        bars.append(line.split())
        lines.append(lineno)
    return bars, lines


def bars_to_ids(bars, vocab=VOCAB):
    return [[vocab.token_id(t) for t in bar] for bar in bars]


class TinyREMITokenizer(TransformerMixin, BaseEstimator):
    """Estimator wrapper binding the encoder/decoder to one beat framework.

    ``transform`` maps a :class:`NoteSequence` to per-bar token lists and
    ``inverse_transform`` maps them back.
    """

    def __init__(self, framework=None, duration_table=DURATION_TABLE):
        self.framework = framework
        self.duration_table = duration_table

    def fit(self, X=None, y=None):
        if self.framework is None:
            raise ValueError("TinyREMITokenizer needs a beat framework")
        self.vocab_ = Vocab(self.duration_table)
        self.measures_ = build_measures(self.framework)
        self.grid_ = MeasureGrid(self.measures_)
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        return encode(X, self.grid_, self.vocab_.duration_table)

    def inverse_transform(self, X):
        check_is_fitted(self, "grid_")
        return decode(X, self.grid_, self.vocab_)
