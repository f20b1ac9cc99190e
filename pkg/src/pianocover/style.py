"""Relative style attributes of (source bar, target bar) pairs and their binning.

Each attribute is a ratio target/source of a per-bar quantity:

* polyphony: notes per occupied position
* rhythm intensity: occupied positions per slot
* sustain: mean duration in sixteenths

Ratios are undefined (``None`` in dataclasses, ``NaN`` in arrays) when the
source quantity is zero or the target bar has no notes.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import InsufficientData
from .tokens import VOCAB, parse_bar

ATTRIBUTES = ("polyphony", "rhythm", "sustain")
N_BINS = 5
DEFAULT_BIN = 2
PERCENTILES = (20, 40, 60, 80)


@dataclass(frozen=True)
class BarStats:
    note_count: int
    unique_positions: int
    slot_count: int
    mean_duration: float

    @property
    def polyphony(self):
        return self.note_count / self.unique_positions if self.unique_positions else 0.0

    @property
    def rhythm_intensity(self):
        return self.unique_positions / self.slot_count

    @property
    def sustain(self):
        return self.mean_duration


@dataclass(frozen=True)
class StyleAttributes:
    rel_polyphony: float | None
    rel_rhythm_intensity: float | None
    rel_sustain: float | None

    def as_tuple(self):
        return (self.rel_polyphony, self.rel_rhythm_intensity, self.rel_sustain)

    def as_array(self):
        return np.array([np.nan if v is None else v for v in self.as_tuple()], dtype=float)


@dataclass(frozen=True)
class StyleBins:
    polyphony_bin: int
    rhythm_bin: int
    sustain_bin: int

    def as_tuple(self):
        return (self.polyphony_bin, self.rhythm_bin, self.sustain_bin)


def bar_stats(bar, slot_count, vocab=VOCAB):
    """Count notes, occupied positions and mean duration of one token bar.

    Grace tokens are ornaments and do not count.
    """
    if slot_count < 1:
        raise ValueError("slot_count must be >= 1")
    events = parse_bar(bar, vocab)
    if not events:
        return BarStats(0, 0, slot_count, 0.0)
    durations = [e[2] for e in events]
    return BarStats(
        note_count=len(events),
        unique_positions=len({e[0] for e in events}),
        slot_count=slot_count,
        mean_duration=sum(durations) / len(durations),
    )


def _ratio(num, den):
    return num / den if den > 0 else None


def relative_attributes(x, y):
    """Style of target bar ``y`` relative to source bar ``x``.

    Count ratios are formed by integer cross-multiplication and a single
    division, so scaling a count by ``k`` gives exactly ``k``.
    """
    if y.note_count == 0 or x.note_count == 0:
        return StyleAttributes(None, None, None)
    return StyleAttributes(
        _ratio(y.note_count * x.unique_positions, y.unique_positions * x.note_count),
        _ratio(y.unique_positions * x.slot_count, y.slot_count * x.unique_positions),
        _ratio(y.mean_duration, x.mean_duration),
    )


def nearest_rank(sorted_values, p):
    """Nearest-rank ``p``-th percentile of an ascending sequence (``p`` integer in 1..100)."""
    n = len(sorted_values)
    rank = max(1, (p * n + 99) // 100)
    return sorted_values[rank - 1]


def fit_edges(values, percentiles=PERCENTILES):
    """Interior bin edges of one attribute; undefined values are ignored."""
    defined = sorted(float(v) for v in values if v is not None and not math.isnan(v))
    if len(defined) < len(percentiles) + 1:
        raise InsufficientData(
            f"need at least {len(percentiles) + 1} defined values, got {len(defined)}"
        )
    return [nearest_rank(defined, p) for p in percentiles]


def fit_bins(corpus):
    """Fit per-attribute quantile edges on a list of :class:`StyleAttributes`."""
    corpus = list(corpus)
    return {
        name: fit_edges([a.as_tuple()[k] for a in corpus]) for k, name in enumerate(ATTRIBUTES)
    }


def bin_value(value, edges):
    """Number of edges strictly below ``value``; undefined maps to the median bin."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return DEFAULT_BIN
    return sum(1 for e in edges if e < value)


def assign_bins(attrs, edges):
    return StyleBins(*(bin_value(v, edges[name]) for v, name in zip(attrs.as_tuple(), ATTRIBUTES)))


def save_edges(edges, path):
    Path(path).write_text(json.dumps({k: list(edges[k]) for k in ATTRIBUTES}, indent=1) + "\n")


def load_edges(path):
    data = json.loads(Path(path).read_text())
    try:
        edges = {k: [float(v) for v in data[k]] for k in ATTRIBUTES}
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bin edge file {path} is malformed: {exc}") from None
    for k, e in edges.items():
        if len(e) != N_BINS - 1 or any(b < a for a, b in zip(e, e[1:])):
            raise ValueError(f"bin edges for {k} must be {N_BINS - 1} non-decreasing values")
    return edges


class StyleBinner(TransformerMixin, BaseEstimator):
    """Quantile binning of relative style attributes.

    ``X`` is an ``(n_pairs, 3)`` array of ratios with NaN marking undefined
    values. ``fit`` learns nearest-rank quintile edges per column and
    ``transform`` returns integer bin ids in ``[0, 4]``.
    """

    def __init__(self, percentiles=PERCENTILES):
        self.percentiles = percentiles

    def fit(self, X, y=None):
        X = check_array(X, ensure_all_finite="allow-nan", dtype=float)
        if X.shape[1] != len(ATTRIBUTES):
            raise ValueError(f"expected {len(ATTRIBUTES)} columns, got {X.shape[1]}")
        self.edges_ = {
            name: fit_edges(X[:, k], self.percentiles) for k, name in enumerate(ATTRIBUTES)
        }
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "edges_")
        X = check_array(X, ensure_all_finite="allow-nan", dtype=float)
        out = np.empty(X.shape, dtype=int)
        for k, name in enumerate(ATTRIBUTES):
            out[:, k] = [bin_value(v, self.edges_[name]) for v in X[:, k]]
        return out
