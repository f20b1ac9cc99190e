"""Objective cover metrics: warp path deviation, rhythmic grid coherence, IOI pattern entropy."""

import math
from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .align import DEFAULT_HOP, chroma_features, dtw
from .exceptions import DegeneratePath, EmptyInput, InsufficientOnsets

DEFAULT_K = 8
DEFAULT_N = 4
MERGE_SECONDS = 0.025
CAP_SECONDS = 2.0
HIST_BIN = 0.01


# --- warp path deviation -------------------------------------------------

def path_deviation(path, hop=DEFAULT_HOP):
    """Std of residuals of the least-squares line j ~ a*i + b through the path, in seconds."""
    if len(path) < 3:
        raise DegeneratePath(f"warp path has {len(path)} pairs; at least 3 are needed")
    # centred closed form: a diagonal or offset path leaves exactly zero residual
    i = path.i.astype(float)
    j = path.j.astype(float)
    ic, jc = i - i.mean(), j - j.mean()
    var = ic @ ic
    slope = (ic @ jc) / var if var > 0 else 0.0
    return float(np.std(jc - slope * ic) * hop)


def wpd(source_features, cover_features, band=None):
    """Warp path deviation between two feature matrices."""
    if len(source_features) == 0 or len(cover_features) == 0:
        raise EmptyInput("wpd needs two non-empty feature matrices")
    path = dtw(source_features, cover_features, band=band)
    return path_deviation(path, source_features.hop)


# --- inter-onset intervals ---------------------------------------------

def onset_events(notes, merge=MERGE_SECONDS):
    """Distinct onset times; onsets closer than ``merge`` to an event's first onset join it."""
    events = []
    for t in sorted(n.onset for n in notes):
        if not events or t - events[-1] >= merge:
            events.append(t)
    return events


def ioi_sequence(notes, merge=MERGE_SECONDS):
    return np.diff(np.asarray(onset_events(notes, merge), dtype=float))


def base_unit(iois, cap=CAP_SECONDS, bin_width=HIST_BIN, low=MERGE_SECONDS):
    """Centre of the most populated histogram bin (bins aligned to multiples of ``bin_width``).

    Ties go to the shortest bin.
    """
    iois = [v for v in iois if low <= v <= cap]
    if not iois:
        raise InsufficientOnsets("no inter-onset interval inside the histogram range")
    counts = Counter(int(math.floor(v / bin_width + 1e-9)) for v in iois)
    best = min(counts, key=lambda b: (-counts[b], b))
    return (2 * best + 1) * bin_width / 2


def grid_deviation(v, tau):
    """Distance from ``v`` to the nearest multiple (>= 1) of ``tau``, in units of ``tau``, capped at 0.5."""
    steps = max(1, math.floor(v / tau + 0.5))
    return min(abs(v - tau * steps) / tau, 0.5)


def rgc_details(notes, merge=MERGE_SECONDS, cap=CAP_SECONDS, bin_width=HIST_BIN):
    """Return ``(rgc, tau)``."""
    events = onset_events(notes, merge)
    if len(events) < 3:
        raise InsufficientOnsets(f"need at least 3 distinct onsets, got {len(events)}")
    iois = [v for v in np.diff(events) if v <= cap]
    tau = base_unit(iois, cap, bin_width, merge)
    return float(np.mean([grid_deviation(v, tau) for v in iois])), tau


def rgc(notes, merge=MERGE_SECONDS, cap=CAP_SECONDS, bin_width=HIST_BIN):
    """Rhythmic grid coherence: mean normalized deviation of IOIs from the base-unit grid."""
    return rgc_details(notes, merge, cap, bin_width)[0]


# --- IOI pattern entropy -----------------------------------------------

class IOIKMeans(ClusterMixin, BaseEstimator):
    """Deterministic one-dimensional k-means.

    Initialization is farthest-point starting from the smallest value, with
    values closer than ``tol`` treated as identical. Cluster labels are
    ordered by ascending centre.
    """

    def __init__(self, n_clusters=DEFAULT_K, max_iter=100, tol=1e-6):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.tol = tol

    @staticmethod
    def _as_1d(X):
        x = np.asarray(X, dtype=float)
        if x.ndim == 2 and x.shape[1] == 1:
            x = x[:, 0]
        if x.ndim != 1:
            raise ValueError(f"expected one-dimensional data, got shape {x.shape}")
        if x.size and not np.all(np.isfinite(x)):
            raise ValueError("input contains non-finite values")
        return x

    def _distinct(self, x):
        vals = np.sort(x)
        keep = [vals[0]]
        for v in vals[1:]:
            if v - keep[-1] > self.tol:
                keep.append(v)
        return np.array(keep)

    def fit(self, X, y=None):
        x = self._as_1d(X)
        if x.size == 0:
            raise ValueError("cannot cluster an empty sample")
        distinct = self._distinct(x)
        k = min(self.n_clusters, len(distinct))
        centres = [distinct[0]]
        while len(centres) < k:
            gap = np.min(np.abs(distinct[:, None] - np.array(centres)[None, :]), axis=1)
            centres.append(distinct[int(np.argmax(gap))])
        centres = np.sort(np.array(centres))
        labels = None
        for it in range(1, self.max_iter + 1):
            new = np.argmin(np.abs(x[:, None] - centres[None, :]), axis=1)
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            for c in range(k):
                members = x[labels == c]
                if members.size:
                    centres[c] = members.mean()
            order = np.argsort(centres, kind="stable")
            if np.any(order != np.arange(k)):
                centres = centres[order]
                labels = np.argsort(order)[labels]
        self.cluster_centers_ = centres
        self.labels_ = labels
        self.n_iter_ = it
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        x = self._as_1d(X)
        return np.argmin(np.abs(x[:, None] - self.cluster_centers_[None, :]), axis=1)


def ngram_entropy(symbols, n=DEFAULT_N):
    """Shannon entropy (bits) of overlapping ``n``-grams."""
    symbols = list(symbols)
    if len(symbols) < n:
        raise InsufficientOnsets(f"need at least {n} symbols, got {len(symbols)}")
    grams = Counter(tuple(symbols[i : i + n]) for i in range(len(symbols) - n + 1))
    total = sum(grams.values())
    h = -sum((c / total) * math.log2(c / total) for c in grams.values())
    return h if h > 0 else 0.0


def ioi_symbols(notes, k=DEFAULT_K, merge=MERGE_SECONDS):
    iois = ioi_sequence(notes, merge)
    if iois.size == 0:
        return np.array([], dtype=int)
    return IOIKMeans(n_clusters=k).fit(np.log(iois)).labels_


def ipe(notes, k=DEFAULT_K, n=DEFAULT_N, merge=MERGE_SECONDS):
    """IOI pattern entropy in bits."""
    iois = ioi_sequence(notes, merge)
    if iois.size < n:
        raise InsufficientOnsets(f"need at least {n} inter-onset intervals, got {iois.size}")
    return ngram_entropy(ioi_symbols(notes, k, merge), n)


# --- report ------------------------------------------------------------

@dataclass
class MetricReport:
    wpd: float | None
    rgc: float | None
    ipe: float | None
    tau: float | None
    hop: float = DEFAULT_HOP
    kmeans_k: int = DEFAULT_K
    ngram_n: int = DEFAULT_N
    ioi_merge_ms: float = MERGE_SECONDS * 1000
    ioi_cap_s: float = CAP_SECONDS

    def as_dict(self):
        return asdict(self)


def _frames(notes, hop, end):
    return chroma_features(notes, hop, n_frames=max(0, math.ceil(end / hop - 1e-9)))


def evaluate(source, cover, hop=DEFAULT_HOP, k=DEFAULT_K, n=DEFAULT_N,
             merge=MERGE_SECONDS, cap=CAP_SECONDS):
    """All three metrics for one pair; a metric that cannot be computed is ``None``."""
    try:
        value_wpd = wpd(_frames(source, hop, source.end_time), _frames(cover, hop, cover.end_time))
    except (EmptyInput, DegeneratePath):
        value_wpd = None
    try:
        value_rgc, tau = rgc_details(cover, merge, cap)
    except InsufficientOnsets:
        value_rgc, tau = None, None
    try:
        value_ipe = ipe(cover, k, n, merge)
    except InsufficientOnsets:
        value_ipe = None
    return MetricReport(value_wpd, value_rgc, value_ipe, tau, hop, k, n, merge * 1000, cap)
