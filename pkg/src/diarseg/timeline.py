"""Continuous-time interval algebra over per-speaker speech timelines.

Times are seconds as float64.  All comparisons go through a single
tolerance ``TIME_EPS`` (1e-9 s): intervals closer than the tolerance
count as adjacent and merge, spans shorter than it are dropped as
zero-length.  Values are immutable after construction and every
operation returns a new value, so everything here is safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from . import _kernels

TIME_EPS = 1e-9
"""Global time comparison tolerance in seconds."""


class Interval(NamedTuple):
    """A half-open time span ``[start, end)`` in seconds."""

    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Interval({self.start:g}, {self.end:g})"


@dataclass(frozen=True, slots=True)
class ClosingParams:
    """Morphological closing widths: boundary extension ``m`` followed by
    shrink ``n``, both in seconds.

    With ``m == n`` every internal pause of length <= 2m is filled and
    all segment boundaries are restored exactly.
    """

    m: float
    n: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.m) and np.isfinite(self.n)):
            raise ValueError("closing widths must be finite")
        if self.m < 0 or self.n < 0:
            raise ValueError("closing widths must be non-negative")

    @classmethod
    def symmetric(cls, width: float) -> "ClosingParams":
        """Equal extension and shrink width, the common configuration."""
        return cls(width, width)


def _as_interval_array(intervals: Iterable[tuple[float, float]]) -> np.ndarray:
    pairs = [(float(s), float(e)) for s, e in intervals]
    if not pairs:
        return np.empty((0, 2), dtype=np.float64)
    return np.asarray(pairs, dtype=np.float64)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


_EMPTY = _freeze(np.empty(0))


class SpeakerTimeline:
    """One speaker's speech activity as sorted, disjoint, non-adjacent
    half-open intervals.

    The constructor normalizes arbitrary input: any order, overlaps and
    adjacency allowed, spans of length <= ``TIME_EPS`` dropped.  Times
    must be finite and non-negative.
    """

    __slots__ = ("speaker", "_starts", "_ends")

    def __init__(self, speaker: str, intervals: Iterable[tuple[float, float]] = ()):
        arr = _as_interval_array(intervals)
        if arr.size:
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite time in timeline for {speaker!r}")
            if np.any(arr < -TIME_EPS):
                raise ValueError(f"negative time in timeline for {speaker!r}")
            np.clip(arr, 0.0, None, out=arr)
            arr = arr[arr[:, 1] - arr[:, 0] > TIME_EPS]
        if arr.size:
            arr = arr[np.argsort(arr[:, 0], kind="stable")]
            starts, ends = _kernels.merge_sorted(
                np.ascontiguousarray(arr[:, 0]),
                np.ascontiguousarray(arr[:, 1]),
                TIME_EPS,
            )
        else:
            starts = ends = np.empty(0)
        self.speaker = speaker
        self._starts = _freeze(starts)
        self._ends = _freeze(ends)

    @classmethod
    def _from_arrays(
        cls, speaker: str, starts: np.ndarray, ends: np.ndarray
    ) -> "SpeakerTimeline":
        # Trusted fast path: arrays must already be normalized.
        tl = cls.__new__(cls)
        tl.speaker = speaker
        tl._starts = _freeze(starts)
        tl._ends = _freeze(ends)
        return tl

    # -- inspection ---------------------------------------------------

    @property
    def starts(self) -> np.ndarray:
        return self._starts

    @property
    def ends(self) -> np.ndarray:
        return self._ends

    @property
    def intervals(self) -> tuple[Interval, ...]:
        return tuple(
            Interval(float(s), float(e)) for s, e in zip(self._starts, self._ends)
        )

    @property
    def total_duration(self) -> float:
        return float(np.sum(self._ends - self._starts))

    @property
    def hull(self) -> Interval | None:
        """Smallest single interval covering all speech, None when empty."""
        if not len(self):
            return None
        return Interval(float(self._starts[0]), float(self._ends[-1]))

    def gaps(self) -> tuple[Interval, ...]:
        """Internal pauses between consecutive intervals."""
        return tuple(
            Interval(float(e), float(s))
            for e, s in zip(self._ends[:-1], self._starts[1:])
        )

    def __len__(self) -> int:
        return int(self._starts.shape[0])

    def __bool__(self) -> bool:
        return len(self) > 0

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpeakerTimeline):
            return NotImplemented
        return (
            self.speaker == other.speaker
            and np.array_equal(self._starts, other._starts)
            and np.array_equal(self._ends, other._ends)
        )

    def __repr__(self) -> str:
        shown = ", ".join(f"({s:g}, {e:g})" for s, e in zip(self._starts[:4], self._ends[:4]))
        more = "" if len(self) <= 4 else f", ... {len(self)} intervals"
        return f"SpeakerTimeline({self.speaker!r}, [{shown}{more}])"

    def covers(self, other: "SpeakerTimeline", tol: float = TIME_EPS) -> bool:
        """True when every interval of ``other`` lies inside one of ours
        (up to ``tol``)."""
        if not other:
            return True
        if not self:
            return False
        idx = np.searchsorted(self._starts, other._starts, side="right") - 1
        if np.any(idx < 0):
            return False
        return bool(
            np.all(other._starts >= self._starts[idx] - tol)
            and np.all(other._ends <= self._ends[idx] + tol)
        )

    # -- morphology ---------------------------------------------------

    def dilate(self, m: float, extent: Interval | None = None) -> "SpeakerTimeline":
        """Extend every interval by ``m`` seconds on both sides.

        The result is clipped to ``extent`` when given, otherwise only
        clipped below at time 0.
        """
        if m < 0:
            raise ValueError("dilation width must be non-negative")
        if not self:
            return self
        starts = self._starts - m
        ends = self._ends + m
        lo = 0.0 if extent is None else float(extent.start)
        np.clip(starts, lo, None, out=starts)
        np.clip(ends, lo, None, out=ends)
        if extent is not None:
            np.clip(starts, None, float(extent.end), out=starts)
            np.clip(ends, None, float(extent.end), out=ends)
        keep = ends - starts > TIME_EPS
        s, e = _kernels.merge_sorted(
            np.ascontiguousarray(starts[keep]), np.ascontiguousarray(ends[keep]), TIME_EPS
        )
        return SpeakerTimeline._from_arrays(self.speaker, s, e)

    def erode(self, n: float) -> "SpeakerTimeline":
        """Shrink every interval by ``n`` seconds on both sides; intervals
        of length <= 2n vanish."""
        if n < 0:
            raise ValueError("erosion width must be non-negative")
        if not self:
            return self
        starts = self._starts + n
        ends = self._ends - n
        keep = ends - starts > TIME_EPS
        s, e = _kernels.merge_sorted(
            np.ascontiguousarray(starts[keep]), np.ascontiguousarray(ends[keep]), TIME_EPS
        )
        return SpeakerTimeline._from_arrays(self.speaker, s, e)

    def close(
        self, params: ClosingParams | float, extent: Interval | None = None
    ) -> "SpeakerTimeline":
        """Morphological closing: dilation by ``m`` then erosion by ``n``.

        Computed directly on the original boundaries: intervals whose gap
        is <= 2m merge, then the outer boundaries of each merged group
        shift outward by ``m - n``.  This is algebraically the same as
        ``erode(dilate(t, m), n)`` with an unclipped intermediate, but for
        ``m == n`` it reproduces the input boundaries bit-exactly.  Only
        the final result is clipped (to ``extent`` when given, below at 0
        otherwise), so segments touching the recording edge stay intact.
        """
        if isinstance(params, (int, float)):
            params = ClosingParams.symmetric(float(params))
        if not self:
            return self
        s, e = _kernels.merge_sorted(self._starts, self._ends, 2.0 * params.m + TIME_EPS)
        shift = params.m - params.n
        if shift != 0.0:
            s = s - shift
            e = e + shift
        lo = 0.0 if extent is None else float(extent.start)
        s = np.clip(s, lo, None)
        e = np.clip(e, lo, None)
        if extent is not None:
            s = np.clip(s, None, float(extent.end))
            e = np.clip(e, None, float(extent.end))
        keep = e - s > TIME_EPS
        s, e = _kernels.merge_sorted(
            np.ascontiguousarray(s[keep]), np.ascontiguousarray(e[keep]), TIME_EPS
        )
        return SpeakerTimeline._from_arrays(self.speaker, s, e)

    # -- set operations ----------------------------------------------

    def crop(self, regions: Iterable[Interval]) -> "SpeakerTimeline":
        """Intersection with a set of regions (normalized internally)."""
        rs, re = regions_to_arrays(regions)
        s, e = _kernels.intersect(self._starts, self._ends, rs, re)
        return SpeakerTimeline._from_arrays(self.speaker, s, e)

    def complement(self, extent: Interval) -> "SpeakerTimeline":
        """Non-speech within ``extent``."""
        lo, hi = float(extent.start), float(extent.end)
        bounds = [lo]
        for s, e in zip(self._starts, self._ends):
            bounds.extend((float(s), float(e)))
        bounds.append(hi)
        pairs = [
            (a, b) for a, b in zip(bounds[::2], bounds[1::2]) if b - a > TIME_EPS
        ]
        return SpeakerTimeline(self.speaker, pairs)


def normalize(
    intervals: Iterable[tuple[float, float]], speaker: str = ""
) -> SpeakerTimeline:
    """Sorted, disjoint, non-adjacent union of arbitrary input spans."""
    return SpeakerTimeline(speaker, intervals)


def normalize_regions(intervals: Iterable[tuple[float, float]]) -> tuple[Interval, ...]:
    """Normalize a plain list of spans (scoring regions, UEM entries)."""
    return SpeakerTimeline("", intervals).intervals


def regions_to_arrays(
    regions: Iterable[tuple[float, float]],
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized (starts, ends) arrays for a collection of spans."""
    tl = SpeakerTimeline("", regions)
    return tl.starts, tl.ends


def overlap_duration(a: SpeakerTimeline, b: SpeakerTimeline) -> float:
    """Total time where both timelines are active (symmetric)."""
    return float(_kernels.intersect_measure(a.starts, a.ends, b.starts, b.ends))


class RecordingAnnotation:
    """All speakers' timelines for one recording.

    ``extent`` optionally carries the recording bounds; when set, every
    interval must lie within it (checked at construction up to the
    global tolerance).
    """

    __slots__ = ("recording", "timelines", "extent")

    def __init__(
        self,
        recording: str,
        timelines: Mapping[str, SpeakerTimeline] | Iterable[SpeakerTimeline] = (),
        extent: Interval | None = None,
    ):
        if isinstance(timelines, Mapping):
            items = list(timelines.values())
            for label, tl in timelines.items():
                if label != tl.speaker:
                    raise ValueError(
                        f"timeline keyed {label!r} carries speaker {tl.speaker!r}"
                    )
        else:
            items = list(timelines)
        by_speaker: dict[str, SpeakerTimeline] = {}
        for tl in items:
            if tl.speaker in by_speaker:
                raise ValueError(f"duplicate speaker {tl.speaker!r} in {recording!r}")
            by_speaker[tl.speaker] = tl
        if extent is not None:
            ext = Interval(float(extent[0]), float(extent[1]))
            for tl in by_speaker.values():
                h = tl.hull
                if h and (h.start < ext.start - TIME_EPS or h.end > ext.end + TIME_EPS):
                    raise ValueError(
                        f"speaker {tl.speaker!r} speech outside extent in {recording!r}"
                    )
            extent = ext
        self.recording = recording
        self.timelines = MappingProxyType(
            {spk: by_speaker[spk] for spk in sorted(by_speaker)}
        )
        self.extent = extent

    @classmethod
    def from_dict(
        cls,
        recording: str,
        speech: Mapping[str, Iterable[tuple[float, float]]],
        extent: Interval | None = None,
    ) -> "RecordingAnnotation":
        return cls(
            recording,
            [SpeakerTimeline(spk, ivs) for spk, ivs in speech.items()],
            extent=extent,
        )

    @property
    def speakers(self) -> tuple[str, ...]:
        return tuple(self.timelines)

    @property
    def total_speech(self) -> float:
        """Total speech with overlap counted per speaker."""
        return sum(tl.total_duration for tl in self.timelines.values())

    def hull(self) -> Interval | None:
        """Smallest interval covering every speaker's speech."""
        hulls = [tl.hull for tl in self.timelines.values() if tl.hull]
        if not hulls:
            return None
        return Interval(min(h.start for h in hulls), max(h.end for h in hulls))

    def close(self, params: ClosingParams | float) -> "RecordingAnnotation":
        """Apply morphological closing to every speaker independently."""
        return RecordingAnnotation(
            self.recording,
            [tl.close(params, extent=self.extent) for tl in self.timelines.values()],
            extent=self.extent,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RecordingAnnotation):
            return NotImplemented
        return (
            self.recording == other.recording
            and self.extent == other.extent
            and dict(self.timelines) == dict(other.timelines)
        )

    def __repr__(self) -> str:
        return (
            f"RecordingAnnotation({self.recording!r}, "
            f"{len(self.timelines)} speakers, extent={self.extent})"
        )


def close_annotation(
    annotation: RecordingAnnotation, params: ClosingParams | float
) -> RecordingAnnotation:
    """Functional alias for :meth:`RecordingAnnotation.close`."""
    return annotation.close(params)
