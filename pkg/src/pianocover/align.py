"""Symbolic chroma features, DTW, WP-std pair filtering and measure mapping."""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive
from .exceptions import BoundaryOutOfRange, EmptyInput

DEFAULT_HOP = 0.1
MAX_LENGTH_DIFF = 30.0
MAX_WP_STD = 1.0
_ZERO_COST = 1e-12


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    frames: np.ndarray  # (n_frames, 12)
    hop: float = DEFAULT_HOP

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=float).reshape(-1, 12)
        check_positive(self.hop, "hop")
        if np.any(frames < 0):
            raise ValueError("chroma frames must be non-negative")
        object.__setattr__(self, "frames", frames)

    def __len__(self):
        return self.frames.shape[0]


def chroma_features(notes, hop=DEFAULT_HOP, n_frames=None):
    """Pitch-class sounding time per frame, L2-normalized per frame.

    Frame ``f`` covers ``[f*hop, (f+1)*hop)``. ``n_frames`` pads (or cuts)
    the matrix to a fixed length.
    """
    hop = check_positive(hop, "hop")
    end = max((n.offset for n in notes), default=0.0)
    if n_frames is None:
        n_frames = max(0, math.ceil(end / hop - 1e-9))
    frames = np.zeros((n_frames, 12))
    for n in notes:
        lo, hi = n.onset, n.offset
        f0 = int(lo // hop)
        f1 = min(n_frames - 1, int(math.ceil(hi / hop - 1e-9)) - 1)
        for f in range(f0, f1 + 1):
            overlap = min(hi, (f + 1) * hop) - max(lo, f * hop)
            if overlap > 0:
                frames[f, n.pitch % 12] += overlap
    norms = np.linalg.norm(frames, axis=1, keepdims=True)
    np.divide(frames, norms, out=frames, where=norms > 0)
    return FeatureMatrix(frames, hop)


def cost_matrix(a, b):
    """``1 - cosine`` between frames; zero vs nonzero costs 1, zero vs zero costs 0."""
    A = a.frames if isinstance(a, FeatureMatrix) else np.asarray(a, dtype=float)
    B = b.frames if isinstance(b, FeatureMatrix) else np.asarray(b, dtype=float)
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    za, zb = na == 0, nb == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = (A @ B.T) / np.outer(na, nb)
    cost = 1.0 - cos
    cost[za[:, None] ^ zb[None, :]] = 1.0
    cost[za[:, None] & zb[None, :]] = 0.0
    cost = np.clip(cost, 0.0, 1.0)
    # identical directions otherwise leave ~1e-16 residue
    cost[cost < _ZERO_COST] = 0.0
    return cost


@dataclass(frozen=True)
class WarpPath:
    pairs: tuple
    cost: float = 0.0

    def __len__(self):
        return len(self.pairs)

    @property
    def i(self):
        return np.array([p[0] for p in self.pairs])

    @property
    def j(self):
        return np.array([p[1] for p in self.pairs])


def accumulate(cost, band=None):
    """Accumulated DTW cost with a one-cell padded border.

    Anti-diagonals are filled as vectors; each cell still applies the scalar
    recurrence ``c + min(diag, up, left)``, so sums are bit-identical to a
    cell-by-cell loop.
    """
    n, m = cost.shape
    c = cost
    if band is not None:
        ii, jj = np.indices((n, m))
        centre = ii * ((m - 1) / (n - 1) if n > 1 else 0.0)
        c = np.where(np.abs(jj - centre) <= band, cost, np.inf)
    D = np.full((n + 1, m + 1), np.inf)
    D[0, 0] = 0.0
    for d in range(n + m - 1):
        i = np.arange(max(0, d - m + 1), min(n - 1, d) + 1)
        j = d - i
        prev = np.minimum(np.minimum(D[i, j], D[i, j + 1]), D[i + 1, j])
        D[i + 1, j + 1] = c[i, j] + prev
    return D


def dtw(a, b, band=None):
    """Optimal monotone alignment under steps (1,0), (0,1), (1,1).

    ``band`` is an optional Sakoe-Chiba radius in frames around the straight
    line joining the two corners. Returns a :class:`WarpPath` carrying the
    total cost.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptyInput("dtw needs two non-empty feature matrices")
    cost = cost_matrix(a, b)
    D = accumulate(cost, band)
    n, m = cost.shape
    if not np.isfinite(D[n, m]):
        raise ValueError("band too narrow: no admissible path")
    slope = (m - 1) / (n - 1) if n > 1 else 0.0
    i, j = n - 1, m - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        # among equal-cost predecessors take the one nearest the corner-to-corner
        # line, then diagonal, vertical, horizontal; plateaus of identical frames
        # otherwise let the path drift arbitrarily
        options = [
            (D[i, j], abs(j - 1 - (i - 1) * slope), 0, i - 1, j - 1),
            (D[i, j + 1], abs(j - (i - 1) * slope), 1, i - 1, j),
            (D[i + 1, j], abs(j - 1 - i * slope), 2, i, j - 1),
        ]
        best = min(options)
        i, j = best[3], best[4]
        path.append((i, j))
    path.reverse()
    return WarpPath(tuple((int(p), int(q)) for p, q in path), float(D[n, m]))


def wp_std(path, hop=DEFAULT_HOP):
    """Spread of the path around a unit-slope line, in seconds."""
    diff = path.j - path.i
    return float(np.std(diff - np.median(diff)) * hop)


def map_times(times, path, hop=DEFAULT_HOP):
    """Map source times to cover times through the path (median j per source frame)."""
    i, j = path.i, path.j
    last = int(i.max())
    out = []
    for t in times:
        f = int(math.floor(t / hop + 0.5))
        if f > last + 1 or t < 0:
            raise BoundaryOutOfRange(f"time {t:.3f}s lies outside the aligned source span")
        f = min(f, last)
        out.append(float(np.median(j[i == f])) * hop)
    # keep strictly increasing: each at least one hop after the previous
    for k in range(1, len(out)):
        out[k] = max(out[k], out[k - 1] + hop)
    return out


def map_measures(measures, path, hop=DEFAULT_HOP):
    """Cover-side measure boundary times (measure starts plus the final end)."""
    bounds = [m.start for m in measures] + [measures[-1].end]
    return map_times(bounds, path, hop)


@dataclass
class FilterResult:
    keep: bool
    length_diff: float
    wp_std: float
    reasons: list = field(default_factory=list)
    path: WarpPath | None = None


def filter_decision(length_diff, wp_std_value, max_length_diff=MAX_LENGTH_DIFF, max_wp_std=MAX_WP_STD):
    reasons = []
    if length_diff > max_length_diff:
        reasons.append("length")
    if wp_std_value > max_wp_std:
        reasons.append("wpstd")
    return FilterResult(not reasons, length_diff, wp_std_value, reasons)


def _frame_count(end, hop):
    return max(1, math.ceil(end / hop - 1e-9))


def filter_pair(source, cover, hop=DEFAULT_HOP, source_end=None, **limits):
    """Keep/reject a (source, cover) pair on length difference and WP-std."""
    src_end = source.end_time if source_end is None else max(source_end, source.end_time)
    length_diff = abs(source.end_time - cover.end_time)
    a = chroma_features(source, hop, n_frames=_frame_count(src_end, hop))
    b = chroma_features(cover, hop, n_frames=_frame_count(cover.end_time, hop))
    path = dtw(a, b)
    result = filter_decision(length_diff, wp_std(path, hop), **limits)
    result.path = path
    return result
