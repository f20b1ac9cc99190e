"""Beat-anchored piano cover toolkit.

Tiny-REMI tokenization against a fixed beat framework, style attributes of
bar pairs, bar-wise mixed training windows, DTW pair alignment and the WPD /
RGC / IPE cover metrics.
"""

from .align import FeatureMatrix, WarpPath, chroma_features, dtw, filter_pair, map_measures, wp_std
from .barmix import MixedSequence, export_corpus, interleave, training_windows
from .beats import (
    BeatFramework,
    GridPosition,
    Measure,
    build_measures,
    position_to_time,
    quantize_duration,
    quantize_time,
    synth_beats,
)
from .metrics import IOIKMeans, MetricReport, evaluate, ipe, rgc, wpd
from .notes import NoteEvent, NoteSequence, read_smf, write_smf
from .style import (
    BarStats,
    StyleAttributes,
    StyleBinner,
    StyleBins,
    assign_bins,
    bar_stats,
    fit_bins,
    relative_attributes,
)
from .tokens import TinyREMITokenizer, decode, encode, id_token, token_id

__version__ = "0.1.0"
