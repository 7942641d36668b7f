import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diarseg import (
    TIME_EPS,
    ClosingParams,
    Interval,
    RecordingAnnotation,
    SpeakerTimeline,
    close_annotation,
    normalize,
    overlap_duration,
)

from synth import random_timeline


def spans(tl: SpeakerTimeline) -> list[tuple[float, float]]:
    return [(s, e) for s, e in tl.intervals]


def boundaries_close(a: SpeakerTimeline, b: SpeakerTimeline, tol: float = TIME_EPS) -> bool:
    if len(a) != len(b):
        return False
    return bool(
        np.all(np.abs(a.starts - b.starts) <= tol)
        and np.all(np.abs(a.ends - b.ends) <= tol)
    )


@st.composite
def timelines(draw, max_segments: int = 8):
    n = draw(st.integers(0, max_segments))
    pairs = []
    for _ in range(n):
        start = draw(st.integers(0, 30_000))
        dur = draw(st.integers(1, 5_000))
        pairs.append((start / 1000, (start + dur) / 1000))
    return SpeakerTimeline("spk", pairs)


widths = st.integers(1, 600).map(lambda w: w / 1000)


class TestNormalize:
    def test_overlapping_union(self):
        assert spans(normalize([(0, 1), (0.5, 2)])) == [(0, 2)]

    def test_adjacency_merges(self):
        assert spans(normalize([(0, 1), (1, 2)])) == [(0, 2)]

    def test_disjoint_preserved(self):
        assert spans(normalize([(0, 1), (1.2, 2)])) == [(0, 1), (1.2, 2)]

    def test_degenerate_dropped(self):
        assert spans(normalize([(1, 1), (2, 1.5), (3, 4)])) == [(3, 4)]

    def test_unordered_input(self):
        assert spans(normalize([(5, 6), (0, 1)])) == [(0, 1), (5, 6)]

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            normalize([(float("nan"), 1)])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            normalize([(-1.0, 1)])

    @settings(max_examples=200)
    @given(timelines())
    def test_idempotent(self, tl):
        again = normalize(spans(tl), speaker=tl.speaker)
        assert np.array_equal(again.starts, tl.starts)
        assert np.array_equal(again.ends, tl.ends)

    @settings(max_examples=100)
    @given(timelines())
    def test_sorted_disjoint_nonadjacent(self, tl):
        for (s1, e1), (s2, e2) in zip(tl.intervals, tl.intervals[1:]):
            assert e1 < s2


class TestDilateErode:
    def test_dilate_basic(self):
        assert spans(SpeakerTimeline("a", [(1, 2)]).dilate(0.5)) == [(0.5, 2.5)]

    def test_dilate_clips_at_zero(self):
        assert spans(SpeakerTimeline("a", [(0.2, 1)]).dilate(0.5)) == [(0, 1.5)]

    def test_dilate_merges_at_twice_width(self):
        tl = SpeakerTimeline("a", [(0, 1), (1.4, 2)]).dilate(0.2)
        assert spans(tl) == [(0, 2.2)]

    def test_dilate_clips_to_extent(self):
        tl = SpeakerTimeline("a", [(1, 2)]).dilate(0.5, extent=Interval(0.8, 2.2))
        assert spans(tl) == [(0.8, 2.2)]

    def test_erode_basic(self):
        assert spans(SpeakerTimeline("a", [(0, 2)]).erode(0.5)) == [(0.5, 1.5)]

    def test_erode_vanishes_short(self):
        assert spans(SpeakerTimeline("a", [(0, 0.9)]).erode(0.5)) == []

    def test_erode_multiple(self):
        assert spans(SpeakerTimeline("a", [(0, 2), (3, 10)]).erode(1)) == [(4, 9)]

    def test_negative_width_rejected(self):
        with pytest.raises(ValueError):
            SpeakerTimeline("a", [(0, 1)]).dilate(-0.1)
        with pytest.raises(ValueError):
            SpeakerTimeline("a", [(0, 1)]).erode(-0.1)

    @settings(max_examples=100)
    @given(timelines(), widths)
    def test_duration_ordering(self, tl, w):
        assert tl.dilate(w).total_duration >= tl.total_duration - TIME_EPS
        assert tl.erode(w).total_duration <= tl.total_duration + TIME_EPS

    @settings(max_examples=100)
    @given(timelines(), widths)
    def test_duality_with_complement(self, tl, w):
        # erode == complement . dilate . complement, valid when the
        # timeline sits strictly inside the bounding extent by > w.
        shift = w + 1.0
        shifted = SpeakerTimeline("spk", [(s + shift, e + shift) for s, e in tl.intervals])
        hull = shifted.hull
        if hull is None:
            return
        extent = Interval(0.0, hull.end + shift)
        via_complement = shifted.complement(extent).dilate(w, extent=extent).complement(extent)
        assert boundaries_close(shifted.erode(w), via_complement)


class TestClose:
    def test_fills_small_gap(self):
        tl = SpeakerTimeline("a", [(0, 1), (1.2, 2)]).close(ClosingParams.symmetric(0.15))
        assert spans(tl) == [(0, 2)]

    def test_preserves_large_gap(self):
        tl = SpeakerTimeline("a", [(0, 1), (2, 3)]).close(0.25)
        assert spans(tl) == [(0, 1), (2, 3)]

    def test_single_segment_fixed_point(self):
        assert spans(SpeakerTimeline("a", [(0, 1)]).close(0.3)) == [(0, 1)]

    def test_gap_exactly_twice_width_merges(self):
        # Dilation makes the segments exactly adjacent; adjacency merges.
        tl = SpeakerTimeline("a", [(0, 1), (1.5, 2)]).close(0.25)
        assert spans(tl) == [(0, 2)]

    def test_asymmetric_widths(self):
        # m=0.2, n=0.1: one merged group [0, 2.4] dilated, shifted out by 0.1.
        tl = SpeakerTimeline("a", [(0.5, 1), (1.3, 2)]).close(ClosingParams(0.2, 0.1))
        assert spans(tl) == [(0.4, 2.1)]

    def test_erosion_dominant_can_vanish(self):
        tl = SpeakerTimeline("a", [(1, 1.2)]).close(ClosingParams(0.0, 0.2))
        assert spans(tl) == []

    def test_close_matches_dilate_erode_composition(self):
        # The composition is only equivalent away from time 0, where
        # dilate's zero-clipping cannot kick in; close itself keeps the
        # intermediate unclipped.
        rng = np.random.default_rng(7)
        for _ in range(200):
            raw = random_timeline(rng)
            tl = SpeakerTimeline("spk", [(s + 1.0, e + 1.0) for s, e in raw.intervals])
            m = int(rng.integers(0, 500)) / 1000
            n = int(rng.integers(0, 500)) / 1000
            direct = tl.close(ClosingParams(m, n))
            composed = tl.dilate(m).erode(n)
            assert boundaries_close(direct, composed, tol=1e-9), (m, n, spans(tl))

    def test_boundary_segment_not_shortened(self):
        # The intermediate dilation is never clipped, so a segment at the
        # recording edge keeps its boundary after closing.
        tl = SpeakerTimeline("a", [(0, 1), (1.1, 2)])
        closed = tl.close(0.2, extent=Interval(0, 2.5))
        assert spans(closed) == [(0, 2)]

    def test_final_result_clipped_to_extent(self):
        tl = SpeakerTimeline("a", [(0.5, 1)])
        closed = tl.close(ClosingParams(0.4, 0.1), extent=Interval(0.4, 1.2))
        assert spans(closed) == [(0.4, 1.2)]

    @settings(max_examples=150)
    @given(timelines(), widths)
    def test_extensive_and_idempotent(self, tl, w):
        closed = tl.close(w)
        assert closed.covers(tl)
        again = closed.close(w)
        assert np.array_equal(closed.starts, again.starts)
        assert np.array_equal(closed.ends, again.ends)

    @settings(max_examples=150)
    @given(timelines(), widths)
    def test_gap_law(self, tl, w):
        surviving = [g for g in tl.gaps() if g.duration > 2 * w + TIME_EPS]
        closed = tl.close(w)
        assert list(closed.gaps()) == surviving

    @settings(max_examples=100)
    @given(timelines(), timelines(), widths)
    def test_monotone(self, t1, t2, w):
        union = SpeakerTimeline("spk", spans(t1) + spans(t2))
        assert union.close(w).covers(t1.close(w))


class TestOverlapDuration:
    def test_partial(self):
        a = SpeakerTimeline("a", [(0, 2)])
        b = SpeakerTimeline("b", [(1, 3)])
        assert overlap_duration(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint(self):
        a = SpeakerTimeline("a", [(0, 1)])
        b = SpeakerTimeline("b", [(2, 3)])
        assert overlap_duration(a, b) == 0.0

    def test_hand_summed_pieces(self):
        # [0,1]&[0.5,2.5] -> 0.5 ; [2,4]&[0.5,2.5] -> 0.5 ; total 1.0
        a = SpeakerTimeline("a", [(0, 1), (2, 4)])
        b = SpeakerTimeline("b", [(0.5, 2.5)])
        assert overlap_duration(a, b) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=100)
    @given(timelines(), timelines())
    def test_symmetric_and_bounded(self, a, b):
        ab = overlap_duration(a, b)
        assert ab == pytest.approx(overlap_duration(b, a), abs=1e-9)
        assert ab <= min(a.total_duration, b.total_duration) + 1e-9
        assert ab >= 0


class TestTimelineBasics:
    def test_crop(self):
        tl = SpeakerTimeline("a", [(0, 2), (3, 5)])
        assert spans(tl.crop([Interval(1, 4)])) == [(1, 2), (3, 4)]

    def test_gaps(self):
        tl = SpeakerTimeline("a", [(0, 1), (2, 3), (4.5, 5)])
        assert [tuple(g) for g in tl.gaps()] == [(1, 2), (3, 4.5)]

    def test_covers(self):
        big = SpeakerTimeline("a", [(0, 10)])
        small = SpeakerTimeline("a", [(1, 2), (3, 4)])
        assert big.covers(small)
        assert not small.covers(big)

    def test_empty_everywhere(self):
        empty = SpeakerTimeline("a")
        assert not empty
        assert empty.close(0.5) == empty
        assert empty.dilate(1.0) == empty
        assert empty.erode(1.0) == empty
        assert empty.total_duration == 0.0

    def test_immutable_arrays(self):
        tl = SpeakerTimeline("a", [(0, 1)])
        with pytest.raises(ValueError):
            tl.starts[0] = 5.0


class TestClosingParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            ClosingParams(-0.1, 0)
        with pytest.raises(ValueError):
            ClosingParams(0, -0.1)
        assert ClosingParams.symmetric(0.3) == ClosingParams(0.3, 0.3)


class TestRecordingAnnotation:
    def test_close_annotation_per_speaker(self):
        ann = RecordingAnnotation.from_dict(
            "rec",
            {
                "a": [(0, 1), (1.2, 2)],
                "b": [(0, 1), (2, 3)],
                "c": [(0, 1)],
            },
        )
        closed = close_annotation(ann, 0.15)
        assert spans(closed.timelines["a"]) == [(0, 2)]
        assert spans(closed.timelines["b"]) == [(0, 1), (2, 3)]
        assert spans(closed.timelines["c"]) == [(0, 1)]
        assert closed.recording == ann.recording

    def test_extent_validation(self):
        with pytest.raises(ValueError):
            RecordingAnnotation.from_dict(
                "rec", {"a": [(0, 5)]}, extent=Interval(0, 4)
            )

    def test_duplicate_speaker_rejected(self):
        with pytest.raises(ValueError):
            RecordingAnnotation(
                "rec",
                [SpeakerTimeline("a", [(0, 1)]), SpeakerTimeline("a", [(2, 3)])],
            )

    def test_mapping_key_mismatch_rejected(self):
        with pytest.raises(ValueError):
            RecordingAnnotation("rec", {"b": SpeakerTimeline("a", [(0, 1)])})

    def test_speakers_sorted(self):
        ann = RecordingAnnotation.from_dict("rec", {"z": [(0, 1)], "a": [(1, 2)]})
        assert ann.speakers == ("a", "z")

    def test_hull_and_total(self):
        ann = RecordingAnnotation.from_dict("rec", {"a": [(1, 2)], "b": [(4, 6)]})
        assert ann.hull() == Interval(1, 6)
        assert ann.total_speech == pytest.approx(3.0)
