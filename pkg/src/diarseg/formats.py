"""Parsing and emission of the text formats the toolkit consumes.

Supported formats, all UTF-8:

* RTTM       -- ``SPEAKER <file> <chan> <tbeg> <tdur> <NA> <NA> <speaker>
                <NA> <NA>``; the canonical label format.  Emission is
                deterministic with millisecond precision, so parse/emit
                round-trips move boundaries by at most 0.5 ms.
* UEM        -- ``<file> <chan> <tbeg> <tend>`` scoring regions.
* alignment  -- tab-separated token timestamps with a mandatory header
                ``recording speaker segment_id token start end``.
* windows    -- JSON Lines, one object per sliding-window inference
                result (fields of :class:`WindowActivity`).

Parsers normalize on ingestion: the returned values never violate their
type invariants.  Malformed input raises :class:`FormatError` carrying
the 1-based line number.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, NamedTuple

import numpy as np

from .errors import FormatError
from .timeline import TIME_EPS, Interval, RecordingAnnotation, normalize_regions

logger = logging.getLogger(__name__)

ALIGNMENT_COLUMNS = ("recording", "speaker", "segment_id", "token", "start", "end")


@dataclass(frozen=True, slots=True)
class AlignedToken:
    """One aligned word or character from a forced-alignment run.

    ``segment_id`` identifies the original loose segment the token came
    from; all tokens of one segment share one speaker.  Token text is
    carried for traceability only and never interpreted.
    """

    recording: str
    speaker: str
    segment_id: str
    token: str
    start: float
    end: float


class WindowActivity:
    """Per-frame speech activity of one sliding analysis window.

    ``activities`` is a (local speaker x frame) matrix of values in
    [0, 1]; row ``i`` belongs to the global speaker ``speaker_map[i]``.
    """

    __slots__ = ("recording", "window_start", "frame_step", "activities", "speaker_map")

    def __init__(
        self,
        recording: str,
        window_start: float,
        frame_step: float,
        activities: np.ndarray,
        speaker_map: tuple[str, ...],
    ):
        activities = np.ascontiguousarray(activities, dtype=np.float64)
        if activities.ndim != 2 or activities.shape[1] == 0:
            raise ValueError("activities must be a non-empty (speaker x frame) matrix")
        if np.any(activities < 0.0) or np.any(activities > 1.0):
            raise ValueError("activity values must lie in [0, 1]")
        if frame_step <= 0:
            raise ValueError("frame_step must be positive")
        if window_start < 0 or not math.isfinite(window_start):
            raise ValueError("window_start must be finite and non-negative")
        if len(speaker_map) != activities.shape[0]:
            raise ValueError("speaker_map length must match activity rows")
        if len(set(speaker_map)) != len(speaker_map):
            raise ValueError("duplicate local speaker in speaker_map")
        activities.flags.writeable = False
        self.recording = recording
        self.window_start = float(window_start)
        self.frame_step = float(frame_step)
        self.activities = activities
        self.speaker_map = tuple(speaker_map)

    @property
    def n_frames(self) -> int:
        return int(self.activities.shape[1])

    @property
    def duration(self) -> float:
        return self.n_frames * self.frame_step

    @property
    def end(self) -> float:
        return self.window_start + self.duration

    def __repr__(self) -> str:
        return (
            f"WindowActivity({self.recording!r}, start={self.window_start:g}, "
            f"{len(self.speaker_map)} speakers x {self.n_frames} frames)"
        )


class RttmDocument(NamedTuple):
    """Parsed RTTM content plus the count of dropped bad-duration lines."""

    annotations: dict[str, RecordingAnnotation]
    dropped_lines: int


def _iter_lines(source: str | IO[str] | Iterable[str]) -> Iterable[str]:
    if isinstance(source, str):
        return source.splitlines()
    return source


def _parse_time(field: str, what: str, line_no: int) -> float:
    try:
        value = float(field)
    except ValueError:
        raise FormatError(f"non-numeric {what}: {field!r}", line_no) from None
    if not math.isfinite(value) or value < 0:
        raise FormatError(f"{what} must be finite and non-negative: {field!r}", line_no)
    return value


def parse_rttm(source: str | IO[str] | Iterable[str]) -> RttmDocument:
    """Parse RTTM SPEAKER records into per-recording annotations.

    Comment lines (leading ``;``) and non-SPEAKER record types are
    skipped.  Records with non-positive duration are dropped and counted
    in ``dropped_lines``.  Per-speaker intervals are normalized, so the
    result never violates the annotation invariants.
    """
    speech: dict[str, dict[str, list[tuple[float, float]]]] = {}
    dropped = 0
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        fields = line.split()
        if fields[0] != "SPEAKER":
            continue
        if len(fields) != 10:
            raise FormatError(
                f"expected 10 whitespace-separated fields, got {len(fields)}", line_no
            )
        tbeg = _parse_time(fields[3], "tbeg", line_no)
        try:
            tdur = float(fields[4])
        except ValueError:
            raise FormatError(f"non-numeric tdur: {fields[4]!r}", line_no) from None
        if not math.isfinite(tdur):
            raise FormatError(f"tdur must be finite: {fields[4]!r}", line_no)
        if tdur <= 0:
            dropped += 1
            continue
        recording, speaker = fields[1], fields[7]
        speech.setdefault(recording, {}).setdefault(speaker, []).append(
            (tbeg, tbeg + tdur)
        )
    if dropped:
        logger.warning("parse_rttm: dropped %d non-positive-duration lines", dropped)
    annotations = {
        rec: RecordingAnnotation.from_dict(rec, by_spk)
        for rec, by_spk in sorted(speech.items())
    }
    return RttmDocument(annotations, dropped)


def _format_ms(ms: int) -> str:
    return f"{ms // 1000}.{ms % 1000:03d}"


def emit_rttm(annotations: Mapping[str, RecordingAnnotation]) -> str:
    """Deterministic RTTM emission at millisecond precision.

    Recordings are sorted by id and lines by (onset, speaker); channel
    is fixed to ``1``.  Durations are computed from the rounded
    boundaries so each boundary moves by at most 0.5 ms.
    """
    lines = []
    for rec in sorted(annotations):
        annotation = annotations[rec]
        if any(ch.isspace() for ch in rec) or not rec:
            raise ValueError(f"recording id unusable in RTTM: {rec!r}")
        rows = []
        for speaker, tl in annotation.timelines.items():
            if any(ch.isspace() for ch in speaker) or not speaker:
                raise ValueError(f"speaker label unusable in RTTM: {speaker!r}")
            for start, end in zip(tl.starts, tl.ends):
                start_ms = round(float(start) * 1000)
                end_ms = round(float(end) * 1000)
                if end_ms > start_ms:
                    rows.append((start_ms, speaker, end_ms))
        rows.sort(key=lambda r: (r[0], r[1]))
        for start_ms, speaker, end_ms in rows:
            lines.append(
                f"SPEAKER {rec} 1 {_format_ms(start_ms)} "
                f"{_format_ms(end_ms - start_ms)} <NA> <NA> {speaker} <NA> <NA>"
            )
    return "".join(line + "\n" for line in lines)


def parse_uem(source: str | IO[str] | Iterable[str]) -> dict[str, tuple[Interval, ...]]:
    """Parse UEM scoring regions, normalized per recording."""
    regions: dict[str, list[tuple[float, float]]] = {}
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        fields = line.split()
        if len(fields) != 4:
            raise FormatError(
                f"expected 4 whitespace-separated fields, got {len(fields)}", line_no
            )
        tbeg = _parse_time(fields[2], "tbeg", line_no)
        tend = _parse_time(fields[3], "tend", line_no)
        if tend <= tbeg:
            raise FormatError(f"tend {tend:g} not after tbeg {tbeg:g}", line_no)
        regions.setdefault(fields[0], []).append((tbeg, tend))
    return {rec: normalize_regions(spans) for rec, spans in sorted(regions.items())}


def emit_uem(regions: Mapping[str, Iterable[Interval]]) -> str:
    """Inverse of :func:`parse_uem`, millisecond precision."""
    lines = []
    for rec in sorted(regions):
        for start, end in regions[rec]:
            lines.append(
                f"{rec} 1 {_format_ms(round(start * 1000))} {_format_ms(round(end * 1000))}"
            )
    return "".join(line + "\n" for line in lines)


def parse_alignment(source: str | IO[str] | Iterable[str]) -> list[AlignedToken]:
    """Parse the token-alignment TSV.

    Tokens come back grouped and sorted by (recording, speaker,
    segment_id, start).  Tokens of one segment must be non-overlapping
    and share one speaker.
    """
    lines = iter(enumerate(_iter_lines(source), start=1))
    header = None
    for line_no, raw in lines:
        if raw.strip():
            header = (line_no, raw.rstrip("\n"))
            break
    if header is None:
        return []
    if tuple(header[1].rstrip().split("\t")) != ALIGNMENT_COLUMNS:
        raise FormatError(
            "header must be " + "\t".join(ALIGNMENT_COLUMNS), header[0]
        )
    tokens: list[AlignedToken] = []
    for line_no, raw in lines:
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 6:
            raise FormatError(f"expected 6 tab-separated fields, got {len(fields)}", line_no)
        start = _parse_time(fields[4].strip(), "start", line_no)
        end = _parse_time(fields[5].strip(), "end", line_no)
        if end <= start + TIME_EPS:
            raise FormatError(f"token end {end:g} not after start {start:g}", line_no)
        tokens.append(
            AlignedToken(
                recording=fields[0].strip(),
                speaker=fields[1].strip(),
                segment_id=fields[2].strip(),
                token=fields[3],
                start=start,
                end=end,
            )
        )
    tokens.sort(key=lambda t: (t.recording, t.speaker, t.segment_id, t.start, t.end))

    segment_speaker: dict[tuple[str, str], str] = {}
    last_in_segment: dict[tuple[str, str], AlignedToken] = {}
    for tok in sorted(tokens, key=lambda t: (t.recording, t.segment_id, t.start)):
        key = (tok.recording, tok.segment_id)
        seen = segment_speaker.setdefault(key, tok.speaker)
        if seen != tok.speaker:
            raise FormatError(
                f"segment {tok.segment_id!r} of {tok.recording!r} mixes speakers "
                f"{seen!r} and {tok.speaker!r}"
            )
        prev = last_in_segment.get(key)
        if prev is not None and tok.start < prev.end - TIME_EPS:
            raise FormatError(
                f"overlapping tokens in segment {tok.segment_id!r} of "
                f"{tok.recording!r}: {prev.token!r} and {tok.token!r}"
            )
        last_in_segment[key] = tok
    return tokens


def emit_alignment(tokens: Iterable[AlignedToken]) -> str:
    """Inverse of :func:`parse_alignment` (times at microsecond precision)."""
    lines = ["\t".join(ALIGNMENT_COLUMNS)]
    for t in tokens:
        lines.append(
            f"{t.recording}\t{t.speaker}\t{t.segment_id}\t{t.token}"
            f"\t{t.start:.6f}\t{t.end:.6f}"
        )
    return "".join(line + "\n" for line in lines)


_WINDOW_KEYS = ("recording", "window_start", "frame_step", "activities", "speaker_map")


def parse_window_activity(source: str | IO[str] | Iterable[str]) -> list[WindowActivity]:
    """Parse the JSON-Lines window-activity document.

    One JSON object per line with the fields of :class:`WindowActivity`;
    ``frame_step`` and ``speaker_map`` are mandatory.  Windows come back
    sorted by (recording, window_start); ``frame_step`` must agree
    across the windows of one recording.
    """
    windows: list[WindowActivity] = []
    steps: dict[str, tuple[float, int]] = {}
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", line_no) from None
        if not isinstance(obj, dict):
            raise FormatError("each line must hold one JSON object", line_no)
        missing = [k for k in _WINDOW_KEYS if k not in obj]
        if missing:
            raise FormatError(f"missing fields: {', '.join(missing)}", line_no)
        try:
            window = WindowActivity(
                recording=str(obj["recording"]),
                window_start=float(obj["window_start"]),
                frame_step=float(obj["frame_step"]),
                activities=np.asarray(obj["activities"], dtype=np.float64),
                speaker_map=tuple(str(s) for s in obj["speaker_map"]),
            )
        except (TypeError, ValueError) as exc:
            raise FormatError(str(exc), line_no) from None
        seen = steps.get(window.recording)
        if seen is not None and abs(seen[0] - window.frame_step) > TIME_EPS:
            raise FormatError(
                f"frame_step {window.frame_step:g} conflicts with {seen[0]:g} "
                f"from line {seen[1]} for recording {window.recording!r}",
                line_no,
            )
        steps.setdefault(window.recording, (window.frame_step, line_no))
        windows.append(window)
    windows.sort(key=lambda w: (w.recording, w.window_start))
    return windows


def emit_window_activity(windows: Iterable[WindowActivity]) -> str:
    """Inverse of :func:`parse_window_activity`."""
    lines = []
    for w in windows:
        lines.append(
            json.dumps(
                {
                    "recording": w.recording,
                    "window_start": w.window_start,
                    "frame_step": w.frame_step,
                    "activities": w.activities.tolist(),
                    "speaker_map": list(w.speaker_map),
                },
                ensure_ascii=False,
            )
        )
    return "".join(line + "\n" for line in lines)


def group_windows(windows: Iterable[WindowActivity]) -> dict[str, list[WindowActivity]]:
    """Windows grouped per recording, each group sorted by start."""
    grouped: dict[str, list[WindowActivity]] = {}
    for w in windows:
        grouped.setdefault(w.recording, []).append(w)
    return {
        rec: sorted(ws, key=lambda w: w.window_start)
        for rec, ws in sorted(grouped.items())
    }
