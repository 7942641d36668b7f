"""diarseg: speaker-diarization segment-label toolkit.

Manipulates and evaluates who-spoke-when labels on a continuous
timeline: interval algebra and morphological closing, exact DER with
collar tolerance and optimal speaker mapping, tightening of loose
segment boundaries from token alignments, closing-width fitting between
label sets, and offline-vs-streaming sliding-window aggregation.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import FormatError, PairingError
from .formats import (
    AlignedToken,
    RttmDocument,
    WindowActivity,
    emit_alignment,
    emit_rttm,
    emit_uem,
    emit_window_activity,
    group_windows,
    parse_alignment,
    parse_rttm,
    parse_uem,
    parse_window_activity,
)
from .metrics import (
    CollarSpec,
    CorpusReport,
    DERReport,
    OverlapMatrix,
    aggregate_reports,
    collar_sweep,
    collar_sweep_corpus,
    closing_sweep,
    closing_sweep_corpus,
    corpus_report_csv,
    corpus_report_json,
    der,
    der_corpus,
    optimal_mapping,
    overlap_matrix,
    scoring_regions,
)
from .resegment import (
    DEFAULT_DELTA_GRID,
    DeltaFit,
    ResegmentOutcome,
    ResegmentParams,
    fit_delta,
    reconstruction_check,
    resegment,
    resegment_tokens,
)
from .streaming import (
    StreamingComparison,
    WindowGeometry,
    aggregate_offline,
    aggregate_streaming,
    streaming_degradation,
)
from .timeline import (
    TIME_EPS,
    ClosingParams,
    Interval,
    RecordingAnnotation,
    SpeakerTimeline,
    close_annotation,
    normalize,
    normalize_regions,
    overlap_duration,
)

__version__ = "0.1.0"

__all__ = [
    "AlignedToken",
    "ClosingParams",
    "CollarSpec",
    "CorpusReport",
    "DERReport",
    "DeltaFit",
    "DEFAULT_DELTA_GRID",
    "FormatError",
    "Interval",
    "KERNEL_BACKEND",
    "OverlapMatrix",
    "PairingError",
    "RecordingAnnotation",
    "ResegmentOutcome",
    "ResegmentParams",
    "RttmDocument",
    "SpeakerTimeline",
    "StreamingComparison",
    "TIME_EPS",
    "WindowActivity",
    "WindowGeometry",
    "aggregate_offline",
    "aggregate_reports",
    "aggregate_streaming",
    "close_annotation",
    "closing_sweep",
    "closing_sweep_corpus",
    "collar_sweep",
    "collar_sweep_corpus",
    "corpus_report_csv",
    "corpus_report_json",
    "der",
    "der_corpus",
    "emit_alignment",
    "emit_rttm",
    "emit_uem",
    "emit_window_activity",
    "fit_delta",
    "group_windows",
    "normalize",
    "normalize_regions",
    "optimal_mapping",
    "overlap_duration",
    "overlap_matrix",
    "parse_alignment",
    "parse_rttm",
    "parse_uem",
    "parse_window_activity",
    "reconstruction_check",
    "resegment",
    "resegment_tokens",
    "scoring_regions",
    "streaming_degradation",
]
