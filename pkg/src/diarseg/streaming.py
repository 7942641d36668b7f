"""Offline vs streaming aggregation of sliding-window diarization output.

Offline aggregation averages, for every frame, the activity of all
windows covering that frame, then binarizes.  Streaming aggregation
models an online system: each window contributes only its trailing
``emit_tail`` seconds, binarized per frame with no cross-window
averaging, so late evidence inside a window cannot be diluted away.

Frames of every window must sit on one global grid anchored at time 0
(``window_start`` a multiple of ``frame_step``); output boundaries are
therefore always grid-aligned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FormatError
from .formats import WindowActivity
from .metrics import CollarSpec, DERReport, RegionSpec, der
from .timeline import RecordingAnnotation, SpeakerTimeline


@dataclass(frozen=True, slots=True)
class WindowGeometry:
    """Sliding-window layout: width and shift describe the inference
    windows, ``emit_tail`` is the trailing span a streaming system
    emits from each window."""

    width: float = 10.0
    shift: float = 1.0
    emit_tail: float = 1.0

    def __post_init__(self) -> None:
        if not (0 < self.shift <= self.width):
            raise ValueError("shift must satisfy 0 < shift <= width")
        if not (0 < self.emit_tail <= self.width):
            raise ValueError("emit_tail must satisfy 0 < emit_tail <= width")


DEFAULT_GEOMETRY = WindowGeometry()

_GRID_TOL = 1e-6


@dataclass(frozen=True, slots=True)
class StreamingComparison:
    """Offline and streaming scores of one recording against a reference."""

    offline: DERReport
    streaming: DERReport

    @property
    def der_delta(self) -> float:
        """Streaming DER minus offline DER."""
        return self.streaming.der - self.offline.der


def _check_windows(windows: Sequence[WindowActivity]) -> tuple[str, float]:
    if not windows:
        raise ValueError("no windows to aggregate")
    recordings = sorted({w.recording for w in windows})
    if len(recordings) > 1:
        raise ValueError(
            "windows span multiple recordings: " + ", ".join(recordings)
        )
    step = windows[0].frame_step
    for w in windows:
        if abs(w.frame_step - step) > _GRID_TOL * step:
            raise FormatError(
                f"conflicting frame_step {w.frame_step:g} vs {step:g} "
                f"in recording {w.recording!r}"
            )
    return recordings[0], step


def _start_index(w: WindowActivity, step: float) -> int:
    k = round(w.window_start / step)
    if abs(k * step - w.window_start) > _GRID_TOL * step:
        raise FormatError(
            f"window start {w.window_start:g} of {w.recording!r} is not aligned "
            f"to the frame grid (step {step:g})"
        )
    return int(k)


def _speaker_index(windows: Sequence[WindowActivity]) -> dict[str, int]:
    labels = sorted({label for w in windows for label in w.speaker_map})
    return {label: i for i, label in enumerate(labels)}


def _runs_to_annotation(
    recording: str, speech: np.ndarray, speakers: Sequence[str], step: float
) -> RecordingAnnotation:
    timelines = []
    for row, speaker in zip(speech, speakers):
        if not row.any():
            continue
        padded = np.concatenate(([False], row, [False]))
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        starts = edges[0::2] * step
        ends = edges[1::2] * step
        timelines.append(SpeakerTimeline(speaker, zip(starts, ends)))
    return RecordingAnnotation(recording, timelines)


def aggregate_offline(
    windows: Sequence[WindowActivity],
    geometry: WindowGeometry = DEFAULT_GEOMETRY,
    threshold: float = 0.5,
) -> RecordingAnnotation:
    """Average window activity per frame, binarize, emit intervals.

    Every window covering a frame contributes to that frame's average;
    a window that does not list some speaker contributes zero activity
    for that speaker.  A frame is speech when its average is strictly
    above ``threshold``; frames outside every window are silence.
    """
    recording, step = _check_windows(windows)
    spk_index = _speaker_index(windows)
    n_frames = max(_start_index(w, step) + w.n_frames for w in windows)
    totals = np.zeros((len(spk_index), n_frames))
    cover = np.zeros(n_frames, np.int64)
    for w in windows:
        k0 = _start_index(w, step)
        cover[k0 : k0 + w.n_frames] += 1
        for row, label in zip(w.activities, w.speaker_map):
            totals[spk_index[label], k0 : k0 + w.n_frames] += row
    averages = totals / np.maximum(cover, 1)
    speech = averages > threshold
    speakers = sorted(spk_index)
    return _runs_to_annotation(recording, speech, speakers, step)


def aggregate_streaming(
    windows: Sequence[WindowActivity],
    geometry: WindowGeometry = DEFAULT_GEOMETRY,
    threshold: float = 0.5,
    first_window_full: bool = True,
) -> RecordingAnnotation:
    """Union of the per-window trailing emissions, binarized per frame.

    With tail-only emission the first ``width - emit_tail`` seconds of a
    recording would be structurally silent, so by default the earliest
    window emits its full span; pass ``first_window_full=False`` for the
    pure tail-only behavior.
    """
    recording, step = _check_windows(windows)
    spk_index = _speaker_index(windows)
    ordered = sorted(windows, key=lambda w: w.window_start)
    n_frames = max(_start_index(w, step) + w.n_frames for w in ordered)
    speech = np.zeros((len(spk_index), n_frames), dtype=bool)
    for pos, w in enumerate(ordered):
        k0 = _start_index(w, step)
        if pos == 0 and first_window_full:
            emitted = np.ones(w.n_frames, dtype=bool)
        else:
            frame_starts = (k0 + np.arange(w.n_frames)) * step
            emitted = frame_starts >= w.end - geometry.emit_tail - _GRID_TOL * step
        for row, label in zip(w.activities, w.speaker_map):
            active = emitted & (row > threshold)
            speech[spk_index[label], k0 : k0 + w.n_frames] |= active
    speakers = sorted(spk_index)
    return _runs_to_annotation(recording, speech, speakers, step)


def streaming_degradation(
    windows: Sequence[WindowActivity],
    ref: RecordingAnnotation,
    geometry: WindowGeometry = DEFAULT_GEOMETRY,
    threshold: float = 0.5,
    collar: float | CollarSpec = 0.0,
    uem: RegionSpec = None,
    first_window_full: bool = True,
) -> StreamingComparison:
    """Score offline and streaming aggregation against one reference."""
    offline = aggregate_offline(windows, geometry, threshold)
    streaming = aggregate_streaming(windows, geometry, threshold, first_window_full)
    return StreamingComparison(
        offline=der(ref, offline, collar, uem),
        streaming=der(ref, streaming, collar, uem),
    )
