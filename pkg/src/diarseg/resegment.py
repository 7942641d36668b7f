"""Tightening loose segment labels from token alignments.

Loose, sentence-level segments keep pauses inside the span; given the
token-level timestamps of each segment, :func:`resegment` splits at
every inter-token pause of at least ``min_pause`` seconds (the split is
strict: a pause exactly equal to the threshold splits).  The resulting
boundaries always coincide with token starts/ends.

:func:`fit_delta` goes the other way: given two label sets it finds the
closing width that best explains one as a pause-filled version of the
other, by minimizing the pooled DER of ``close(tight, w)`` against the
anchor over a width grid.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal
from typing import Mapping, Sequence

from .errors import PairingError
from .formats import AlignedToken
from .metrics import CollarSpec, DERReport, RegionSpec, check_paired, der, der_corpus
from .timeline import TIME_EPS, Interval, RecordingAnnotation, SpeakerTimeline


@dataclass(frozen=True, slots=True)
class ResegmentParams:
    """Minimum pause length (seconds) that splits a segment."""

    min_pause: float = 0.200

    def __post_init__(self) -> None:
        if not self.min_pause > 0:
            raise ValueError("min_pause must be positive")


DEFAULT_PARAMS = ResegmentParams()


def _grid(start: str, stop: str, step: str) -> tuple[float, ...]:
    values = []
    v, hi, inc = Decimal(start), Decimal(stop), Decimal(step)
    while v <= hi:
        values.append(float(v))
        v += inc
    return tuple(values)


DEFAULT_DELTA_GRID = _grid("0", "1", "0.01")
"""Default width grid for :func:`fit_delta`: 0 to 1 s in 0.01 s steps."""


@dataclass(frozen=True, slots=True)
class DeltaFit:
    """Result of a closing-width fit.

    ``curve`` holds one pooled report per grid width in grid order;
    ``delta`` is the width minimizing DER, ties broken toward the
    smaller width.
    """

    delta: float
    der_at_delta: float
    curve: tuple[tuple[float, DERReport], ...]


@dataclass(frozen=True, slots=True)
class ResegmentOutcome:
    annotations: dict[str, RecordingAnnotation]
    cross_segment_merges: dict[str, int]
    """Merges between intervals that originated in different source
    segments of one speaker (adjacency/overlap found at normalization)."""


def _merge_segment_tokens(
    tokens: list[AlignedToken], min_pause: float
) -> list[tuple[float, float]]:
    tokens = sorted(tokens, key=lambda t: (t.start, t.end))
    spans: list[tuple[float, float]] = []
    run_start, run_end = tokens[0].start, tokens[0].end
    for tok in tokens[1:]:
        # Strict threshold: a pause of exactly min_pause splits.  The
        # epsilon keeps decimal inputs whose float gap lands a hair
        # under the threshold on the split side.
        if tok.start - run_end < min_pause - TIME_EPS:
            run_end = max(run_end, tok.end)
        else:
            spans.append((run_start, run_end))
            run_start, run_end = tok.start, tok.end
    spans.append((run_start, run_end))
    return spans


def resegment_tokens(
    tokens: Sequence[AlignedToken], params: ResegmentParams = DEFAULT_PARAMS
) -> ResegmentOutcome:
    """Tighten every recording found in ``tokens``.

    Within each (speaker, segment) group, consecutive tokens merge while
    the gap between them is below ``min_pause``; the per-speaker results
    of all segments are then normalized together, which can merge spans
    across source segments when they overlap or touch.  Those merges are
    counted per recording in the outcome.
    """
    grouped: dict[str, dict[str, dict[str, list[AlignedToken]]]] = {}
    for tok in tokens:
        grouped.setdefault(tok.recording, {}).setdefault(tok.speaker, {}).setdefault(
            tok.segment_id, []
        ).append(tok)

    annotations: dict[str, RecordingAnnotation] = {}
    merges: dict[str, int] = {}
    for rec in sorted(grouped):
        timelines = []
        crossed = 0
        for speaker in sorted(grouped[rec]):
            spans: list[tuple[float, float]] = []
            for segment_tokens in grouped[rec][speaker].values():
                spans.extend(_merge_segment_tokens(segment_tokens, params.min_pause))
            tl = SpeakerTimeline(speaker, spans)
            # Within one segment the runs are separated by >= min_pause,
            # so any merge during normalization crossed segments.
            crossed += len(spans) - len(tl)
            timelines.append(tl)
        annotations[rec] = RecordingAnnotation(rec, timelines)
        merges[rec] = crossed
    return ResegmentOutcome(annotations, merges)


def resegment(
    tokens: Sequence[AlignedToken], params: ResegmentParams = DEFAULT_PARAMS
) -> RecordingAnnotation:
    """Tighten the labels of a single recording."""
    outcome = resegment_tokens(tokens, params)
    if not outcome.annotations:
        return RecordingAnnotation("")
    if len(outcome.annotations) > 1:
        raise ValueError(
            "tokens span multiple recordings: "
            + ", ".join(sorted(outcome.annotations))
        )
    return next(iter(outcome.annotations.values()))


def reconstruction_check(
    original: RecordingAnnotation,
    tight: RecordingAnnotation,
    width: float,
    collar: float | CollarSpec = 0.0,
    uem: RegionSpec = None,
) -> DERReport:
    """Score how well closing the tight labels at ``width`` reconstructs
    the original loose labels (original as reference)."""
    return der(original, tight.close(float(width)), collar, uem)


def fit_delta(
    anchors: Mapping[str, RecordingAnnotation],
    tights: Mapping[str, RecordingAnnotation],
    grid: Sequence[float] = DEFAULT_DELTA_GRID,
    collar: float | CollarSpec = 0.0,
    uems: Mapping[str, Sequence[Interval]] | None = None,
    jobs: int = 1,
) -> DeltaFit:
    """Closing width that minimizes pooled DER of the closed tight labels
    against the anchor labels.

    Seconds are pooled across recordings before the objective is
    computed, giving one delta per dataset.  Grid points are independent
    and evaluated concurrently when ``jobs > 1``; ties break toward the
    smaller width.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    check_paired(anchors, tights)
    widths = [float(w) for w in grid]

    def evaluate(width: float) -> DERReport:
        closed = {rec: ann.close(width) for rec, ann in tights.items()}
        return der_corpus(anchors, closed, collar, uems).aggregate

    if jobs > 1 and len(widths) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(evaluate, widths))
    else:
        reports = [evaluate(w) for w in widths]

    curve = tuple(zip(widths, reports))
    delta, best = curve[0]
    for width, report in curve[1:]:
        if report.der < best.der:
            delta, best = width, report
    return DeltaFit(delta=delta, der_at_delta=best.der, curve=curve)
