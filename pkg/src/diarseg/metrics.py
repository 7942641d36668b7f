"""Exact continuous-time diarization error rate.

DER is computed by a sweep over the elementary spans induced by every
reference/hypothesis/region boundary, never by frame discretization, so
millisecond-scale boundary effects stay measurable.  In each span with
``Nref`` reference speakers, ``Nhyp`` hypothesis speakers and
``Ncorrect`` co-active optimally-mapped pairs:

* missed detection  += max(0, Nref - Nhyp) * len
* false alarm       += max(0, Nhyp - Nref) * len
* speaker confusion += (min(Nref, Nhyp) - Ncorrect) * len

The denominator is total reference speech inside the scoring regions,
overlap counted with multiplicity.  The collar excludes a half-width
around every reference boundary from scoring; speaker mapping is
computed from the same collar-excluded regions the components use.
Overlap is always scored.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._kernels import der_sweep, intersect, intersect_measure
from .errors import PairingError
from .timeline import (
    TIME_EPS,
    Interval,
    RecordingAnnotation,
    normalize_regions,
    regions_to_arrays,
)

RegionSpec = Sequence[Interval] | None


@dataclass(frozen=True, slots=True)
class CollarSpec:
    """Half-width in seconds excluded around every reference boundary."""

    collar: float = 0.0

    def __post_init__(self) -> None:
        if self.collar < 0 or not math.isfinite(self.collar):
            raise ValueError("collar must be finite and non-negative")

    def __float__(self) -> float:
        return self.collar


def _collar_value(collar: float | CollarSpec) -> float:
    value = float(collar)
    if value < 0 or not math.isfinite(value):
        raise ValueError("collar must be finite and non-negative")
    return value


@dataclass(frozen=True, slots=True)
class DERReport:
    """Missed/false-alarm/confusion seconds and the derived rates.

    Components are stored in seconds; rates derive from them, so pooled
    reports (see ``__add__``) stay consistent by construction.  A zero
    denominator yields rate 0 for zero components and +inf otherwise.
    """

    missed: float = 0.0
    false_alarm: float = 0.0
    confusion: float = 0.0
    denominator: float = 0.0

    def _rate(self, component: float) -> float:
        if self.denominator > 0:
            return component / self.denominator
        return 0.0 if component <= 0 else math.inf

    @property
    def miss_rate(self) -> float:
        return self._rate(self.missed)

    @property
    def fa_rate(self) -> float:
        return self._rate(self.false_alarm)

    @property
    def cf_rate(self) -> float:
        return self._rate(self.confusion)

    @property
    def error_seconds(self) -> float:
        return self.missed + self.false_alarm + self.confusion

    @property
    def der(self) -> float:
        return self._rate(self.error_seconds)

    def __add__(self, other: "DERReport") -> "DERReport":
        return DERReport(
            self.missed + other.missed,
            self.false_alarm + other.false_alarm,
            self.confusion + other.confusion,
            self.denominator + other.denominator,
        )


def aggregate_reports(reports: Iterable[DERReport]) -> DERReport:
    """Pool component seconds across recordings (time-weighted DER)."""
    total = DERReport()
    for report in reports:
        total = total + report
    return total


@dataclass(frozen=True, slots=True)
class OverlapMatrix:
    """Seconds of co-activity per (reference speaker, hypothesis speaker)
    inside the scoring regions; speakers in lexicographic order."""

    ref_speakers: tuple[str, ...]
    hyp_speakers: tuple[str, ...]
    seconds: np.ndarray


def scoring_regions(
    ref: RecordingAnnotation,
    collar: float | CollarSpec = 0.0,
    uem: RegionSpec = None,
) -> tuple[Interval, ...]:
    """Regions scored by DER: the UEM (or reference extent, or hull of
    the reference segments) minus a collar window around every reference
    segment boundary."""
    collar = _collar_value(collar)
    if uem is not None:
        base = normalize_regions(uem)
    elif ref.extent is not None:
        base = (ref.extent,)
    else:
        hull = ref.hull()
        base = (hull,) if hull else ()
    if not base or collar == 0.0:
        return base
    excluded = []
    for tl in ref.timelines.values():
        for boundary in tl.starts:
            excluded.append((boundary - collar, boundary + collar))
        for boundary in tl.ends:
            excluded.append((boundary - collar, boundary + collar))
    if not excluded:
        return base
    ex_s, ex_e = regions_to_arrays(
        (max(s, 0.0), e) for s, e in excluded if e > 0.0
    )
    kept: list[Interval] = []
    for region in base:
        cursor = region.start
        inside = (ex_e > region.start + TIME_EPS) & (ex_s < region.end - TIME_EPS)
        for s, e in zip(ex_s[inside], ex_e[inside]):
            if s > cursor + TIME_EPS:
                kept.append(Interval(cursor, float(s)))
            cursor = max(cursor, float(e))
        if region.end > cursor + TIME_EPS:
            kept.append(Interval(cursor, region.end))
    return tuple(kept)


def _clipped_arrays(
    annotation: RecordingAnnotation, rs: np.ndarray, re: np.ndarray
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    return {
        spk: intersect(tl.starts, tl.ends, rs, re)
        for spk, tl in annotation.timelines.items()
    }


def overlap_matrix(
    ref: RecordingAnnotation,
    hyp: RecordingAnnotation,
    regions: Sequence[Interval],
) -> OverlapMatrix:
    """Pairwise co-activity seconds inside ``regions``."""
    rs, re = regions_to_arrays(regions)
    ref_clip = _clipped_arrays(ref, rs, re)
    hyp_clip = _clipped_arrays(hyp, rs, re)
    ref_speakers = tuple(sorted(ref_clip))
    hyp_speakers = tuple(sorted(hyp_clip))
    seconds = np.zeros((len(ref_speakers), len(hyp_speakers)))
    for i, r in enumerate(ref_speakers):
        ra, rb = ref_clip[r]
        for j, h in enumerate(hyp_speakers):
            ha, hb = hyp_clip[h]
            seconds[i, j] = intersect_measure(ra, rb, ha, hb)
    return OverlapMatrix(ref_speakers, hyp_speakers, seconds)


def _best_total(seconds: np.ndarray) -> float:
    if seconds.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(seconds, maximize=True)
    return float(seconds[rows, cols].sum())


def optimal_mapping(matrix: OverlapMatrix) -> dict[str, str]:
    """One-to-one partial speaker assignment maximizing mapped overlap.

    Solved exactly by linear assignment; among optima, ties break toward
    lexicographically smaller (reference, hypothesis) pairs so results
    are deterministic.  Zero-overlap pairs stay unmapped.
    """
    if matrix.seconds.size == 0:
        return {}
    ref_speakers = sorted(matrix.ref_speakers)
    hyp_speakers = sorted(matrix.hyp_speakers)
    ref_pos = [matrix.ref_speakers.index(r) for r in ref_speakers]
    hyp_pos = [matrix.hyp_speakers.index(h) for h in hyp_speakers]
    seconds = matrix.seconds[np.ix_(ref_pos, hyp_pos)]
    best = _best_total(seconds)
    tol = TIME_EPS * max(1.0, seconds.shape[0])
    mapping: dict[str, str] = {}
    free_cols = list(range(len(hyp_speakers)))
    active = seconds
    for i, ref_spk in enumerate(ref_speakers):
        # Commit i -> j when a jointly optimal completion still exists.
        chosen = None
        for pos, j in enumerate(free_cols):
            value = seconds[i, j]
            if value <= TIME_EPS:
                continue
            remainder = np.delete(np.delete(active, 0, axis=0), pos, axis=1)
            if value + _best_total(remainder) >= best - tol:
                chosen = (pos, j, value)
                break
        if chosen is None:
            active = np.delete(active, 0, axis=0)
            continue
        pos, j, value = chosen
        mapping[ref_spk] = hyp_speakers[j]
        free_cols.pop(pos)
        active = np.delete(np.delete(active, 0, axis=0), pos, axis=1)
        best -= value
    return mapping


def _concat_speaker_arrays(
    clipped: Mapping[str, tuple[np.ndarray, np.ndarray]], order: Sequence[str]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    starts = [clipped[s][0] for s in order]
    ends = [clipped[s][1] for s in order]
    ids = [np.full(len(clipped[s][0]), k, np.int64) for k, s in enumerate(order)]
    if not starts:
        empty = np.empty(0)
        return empty, empty, np.empty(0, np.int64)
    return np.concatenate(starts), np.concatenate(ends), np.concatenate(ids)


def der(
    ref: RecordingAnnotation,
    hyp: RecordingAnnotation,
    collar: float | CollarSpec = 0.0,
    uem: RegionSpec = None,
) -> DERReport:
    """DER of one recording pair under the collar and optional UEM."""
    if ref.recording != hyp.recording:
        raise PairingError(
            f"reference {ref.recording!r} paired with hypothesis {hyp.recording!r}"
        )
    regions = scoring_regions(ref, collar, uem)
    rs, re = regions_to_arrays(regions)
    ref_clip = _clipped_arrays(ref, rs, re)
    hyp_clip = _clipped_arrays(hyp, rs, re)
    ref_order = tuple(sorted(ref_clip))
    hyp_order = tuple(sorted(hyp_clip))

    seconds = np.zeros((len(ref_order), len(hyp_order)))
    for i, r in enumerate(ref_order):
        for j, h in enumerate(hyp_order):
            seconds[i, j] = intersect_measure(*ref_clip[r], *hyp_clip[h])
    mapping = optimal_mapping(OverlapMatrix(ref_order, hyp_order, seconds))

    hyp_index = {h: j for j, h in enumerate(hyp_order)}
    hyp_of_ref = np.array(
        [hyp_index.get(mapping.get(r, ""), -1) for r in ref_order], np.int64
    )
    r_starts, r_ends, r_ids = _concat_speaker_arrays(ref_clip, ref_order)
    h_starts, h_ends, h_ids = _concat_speaker_arrays(hyp_clip, hyp_order)
    missed, fa, confusion = der_sweep(
        r_starts, r_ends, r_ids, len(ref_order),
        h_starts, h_ends, h_ids, len(hyp_order),
        hyp_of_ref,
    )
    denominator = float(r_ends.sum() - r_starts.sum())
    return DERReport(missed, fa, confusion, denominator)


@dataclass(frozen=True, slots=True)
class CorpusReport:
    """Per-recording reports plus the seconds-pooled aggregate."""

    per_recording: dict[str, DERReport]
    aggregate: DERReport

    @property
    def der_mean(self) -> float:
        """Unweighted mean of per-recording DERs."""
        values = [r.der for r in self.per_recording.values()]
        return float(np.mean(values)) if values else 0.0

    @property
    def der_std(self) -> float:
        """Population standard deviation of per-recording DERs."""
        values = [r.der for r in self.per_recording.values()]
        return float(np.std(values)) if values else 0.0


def check_paired(
    refs: Mapping[str, RecordingAnnotation], hyps: Mapping[str, RecordingAnnotation]
) -> tuple[str, ...]:
    """Recordings common to both sides; raises listing any unpaired ids."""
    ref_only = sorted(set(refs) - set(hyps))
    hyp_only = sorted(set(hyps) - set(refs))
    if ref_only or hyp_only:
        parts = []
        if ref_only:
            parts.append("reference only: " + ", ".join(ref_only))
        if hyp_only:
            parts.append("hypothesis only: " + ", ".join(hyp_only))
        raise PairingError("unpaired recordings; " + "; ".join(parts))
    return tuple(sorted(refs))


def der_corpus(
    refs: Mapping[str, RecordingAnnotation],
    hyps: Mapping[str, RecordingAnnotation],
    collar: float | CollarSpec = 0.0,
    uems: Mapping[str, Sequence[Interval]] | None = None,
    jobs: int = 1,
) -> CorpusReport:
    """Evaluate every paired recording; the aggregate pools seconds.

    Recordings are independent, so ``jobs > 1`` evaluates them in a
    thread pool; results are identical to serial evaluation.
    """
    recordings = check_paired(refs, hyps)

    def one(rec: str) -> DERReport:
        return der(refs[rec], hyps[rec], collar, uems.get(rec) if uems else None)

    if jobs > 1 and len(recordings) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(one, recordings))
    else:
        reports = [one(rec) for rec in recordings]
    per_recording = dict(zip(recordings, reports))
    return CorpusReport(per_recording, aggregate_reports(reports))


def collar_sweep(
    ref: RecordingAnnotation,
    hyp: RecordingAnnotation,
    collars: Sequence[float],
    uem: RegionSpec = None,
) -> dict[float, DERReport]:
    """One DER evaluation per collar value, reported as-is."""
    return {float(c): der(ref, hyp, c, uem) for c in collars}


def closing_sweep(
    ref: RecordingAnnotation,
    hyp: RecordingAnnotation,
    widths: Sequence[float],
    uem: RegionSpec = None,
    collar: float | CollarSpec = 0.0,
) -> dict[float, DERReport]:
    """DER after closing the hypothesis at each width (m = n = width)."""
    return {
        float(w): der(ref, hyp.close(float(w)), collar, uem) for w in widths
    }


def collar_sweep_corpus(
    refs: Mapping[str, RecordingAnnotation],
    hyps: Mapping[str, RecordingAnnotation],
    collars: Sequence[float],
    uems: Mapping[str, Sequence[Interval]] | None = None,
    jobs: int = 1,
) -> dict[float, DERReport]:
    """Pooled-seconds DER per collar value."""
    return {
        float(c): der_corpus(refs, hyps, float(c), uems, jobs=jobs).aggregate
        for c in collars
    }


def closing_sweep_corpus(
    refs: Mapping[str, RecordingAnnotation],
    hyps: Mapping[str, RecordingAnnotation],
    widths: Sequence[float],
    uems: Mapping[str, Sequence[Interval]] | None = None,
    collar: float | CollarSpec = 0.0,
    jobs: int = 1,
) -> dict[float, DERReport]:
    """Pooled-seconds DER per closing width applied to the hypotheses."""
    out: dict[float, DERReport] = {}
    for w in widths:
        closed = {rec: ann.close(float(w)) for rec, ann in hyps.items()}
        out[float(w)] = der_corpus(refs, closed, collar, uems, jobs=jobs).aggregate
    return out


CSV_COLUMNS = (
    "recording",
    "missed_s",
    "fa_s",
    "cf_s",
    "denom_s",
    "miss_rate",
    "fa_rate",
    "cf_rate",
    "der",
)


def _csv_row(name: str, r: DERReport) -> str:
    return ",".join(
        (
            name,
            f"{r.missed:.6f}",
            f"{r.false_alarm:.6f}",
            f"{r.confusion:.6f}",
            f"{r.denominator:.6f}",
            f"{r.miss_rate:.6f}",
            f"{r.fa_rate:.6f}",
            f"{r.cf_rate:.6f}",
            f"{r.der:.6f}",
        )
    )


def corpus_report_csv(report: CorpusReport) -> str:
    """One row per recording plus an AGGREGATE row."""
    lines = [",".join(CSV_COLUMNS)]
    for rec in sorted(report.per_recording):
        lines.append(_csv_row(rec, report.per_recording[rec]))
    lines.append(_csv_row("AGGREGATE", report.aggregate))
    return "".join(line + "\n" for line in lines)


def _report_dict(r: DERReport) -> dict[str, float]:
    return {
        "missed_s": r.missed,
        "fa_s": r.false_alarm,
        "cf_s": r.confusion,
        "denom_s": r.denominator,
        "miss_rate": r.miss_rate,
        "fa_rate": r.fa_rate,
        "cf_rate": r.cf_rate,
        "der": r.der,
    }


def corpus_report_json(report: CorpusReport) -> str:
    """Structured report mirroring the DER fields, with the unweighted
    per-recording mean/std of DER alongside the pooled aggregate."""
    import json

    payload = {
        "recordings": {
            rec: _report_dict(r) for rec, r in sorted(report.per_recording.items())
        },
        "aggregate": _report_dict(report.aggregate),
        "der_mean": report.der_mean,
        "der_std": report.der_std,
    }
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"
