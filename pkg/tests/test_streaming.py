import numpy as np
import pytest

from diarseg import (
    FormatError,
    RecordingAnnotation,
    WindowActivity,
    WindowGeometry,
    aggregate_offline,
    aggregate_streaming,
    emit_rttm,
    streaming_degradation,
)

GEO = WindowGeometry(width=10.0, shift=1.0, emit_tail=1.0)


def window(start, values, recording="rec1", speaker="A", step=0.1):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
        speakers = (speaker,)
    else:
        speakers = tuple(speaker)
    return WindowActivity(recording, start, step, values, speakers)


def constant_window(start, value, n_frames=100, **kwargs):
    return window(start, [value] * n_frames, **kwargs)


def spans(ann: RecordingAnnotation, speaker="A"):
    tl = ann.timelines.get(speaker)
    return [] if tl is None else [(s, e) for s, e in tl.intervals]


class TestAggregateOffline:
    def test_single_constant_window(self):
        ann = aggregate_offline([constant_window(0.0, 1.0)], GEO)
        assert spans(ann) == [(0.0, pytest.approx(10.0))]

    def test_average_at_threshold_is_silence(self):
        # Two fully overlapping windows, activities 1 and 0: the average
        # is 0.5, and binarization is strictly greater-than.
        ws = [constant_window(0.0, 1.0), constant_window(0.0, 0.0)]
        ann = aggregate_offline(ws, GEO, threshold=0.5)
        assert spans(ann) == []

    def test_ten_shifted_windows_cover_hull(self):
        ws = [constant_window(float(k), 1.0) for k in range(10)]
        ann = aggregate_offline(ws, GEO)
        (interval,) = spans(ann)
        assert interval[0] == 0.0
        assert interval[1] == pytest.approx(19.0)

    def test_window_ordering_irrelevant(self):
        rng = np.random.default_rng(2)
        ws = [
            window(float(k), rng.random(100).round(2)) for k in range(10)
        ]
        shuffled = list(ws)
        rng.shuffle(shuffled)
        assert aggregate_offline(ws, GEO) == aggregate_offline(shuffled, GEO)

    def test_uncovered_frames_are_silence(self):
        ws = [constant_window(0.0, 1.0, n_frames=10), constant_window(5.0, 1.0, n_frames=10)]
        ann = aggregate_offline(ws, GEO, threshold=0.4)
        assert spans(ann) == [(0.0, pytest.approx(1.0)), (5.0, pytest.approx(6.0))]

    def test_absent_speaker_counts_as_zero(self):
        # Speaker A appears in one of two covering windows with activity
        # 1; the other window covers the frames without listing A, so
        # the average is 0.5 and stays silent at the default threshold.
        ws = [constant_window(0.0, 1.0, speaker="A"), constant_window(0.0, 1.0, speaker="B")]
        ann = aggregate_offline(ws, GEO, threshold=0.5)
        assert spans(ann, "A") == []
        assert spans(ann, "B") == []
        low = aggregate_offline(ws, GEO, threshold=0.4)
        assert spans(low, "A") == [(0.0, pytest.approx(10.0))]

    def test_boundaries_on_frame_grid(self):
        rng = np.random.default_rng(3)
        ws = [window(float(k), rng.random(100).round(1)) for k in range(6)]
        ann = aggregate_offline(ws, GEO, threshold=0.6)
        for s, e in spans(ann):
            assert abs(round(s / 0.1) * 0.1 - s) < 1e-9
            assert abs(round(e / 0.1) * 0.1 - e) < 1e-9

    def test_frame_step_conflict(self):
        ws = [constant_window(0.0, 1.0), constant_window(1.0, 1.0, step=0.2, n_frames=50)]
        with pytest.raises(FormatError):
            aggregate_offline(ws, GEO)

    def test_misaligned_window_start(self):
        with pytest.raises(FormatError):
            aggregate_offline([constant_window(0.05, 1.0)], GEO)

    def test_mixed_recordings_rejected(self):
        ws = [constant_window(0.0, 1.0), constant_window(0.0, 1.0, recording="other")]
        with pytest.raises(ValueError):
            aggregate_offline(ws, GEO)


def tail_flip_windows():
    """Ten 10 s windows shifted by 1 s; only the window starting at 1
    is active, and only over its final second [10, 11)."""
    ws = []
    for k in range(10):
        values = np.zeros(100)
        if k == 1:
            values[90:] = 1.0
        ws.append(window(float(k), values))
    return ws


class TestAggregateStreaming:
    def test_tail_flip_appears_only_in_streaming(self):
        ws = tail_flip_windows()
        offline = aggregate_offline(ws, GEO)
        streaming = aggregate_streaming(ws, GEO)
        assert spans(offline) == []
        assert spans(streaming) == [(pytest.approx(10.0), pytest.approx(11.0))]

    def test_agreeing_windows_match_offline(self):
        # Every window marks speech on global [3, 7): offline and
        # streaming (with head coverage) emit identical labels.
        ws = []
        for k in range(10):
            global_frame = 10 * k + np.arange(100)
            values = ((global_frame >= 30) & (global_frame < 70)).astype(float)
            ws.append(window(float(k), values))
        offline = aggregate_offline(ws, GEO)
        streaming = aggregate_streaming(ws, GEO)
        assert spans(offline) == [(pytest.approx(3.0), pytest.approx(7.0))]
        assert emit_rttm({"rec1": offline}) == emit_rttm({"rec1": streaming})

    def test_head_coverage_flag(self):
        # Only the first window is active: full emission covers its
        # whole span, tail-only emission just its final second.
        ws = [constant_window(float(k), 1.0 if k == 0 else 0.0) for k in range(10)]
        full = aggregate_streaming(ws, GEO)
        assert spans(full) == [(0.0, pytest.approx(10.0))]
        tail_only = aggregate_streaming(ws, GEO, first_window_full=False)
        assert spans(tail_only) == [(pytest.approx(9.0), pytest.approx(10.0))]

    def test_emit_tail_equals_width_single_window(self):
        geo = WindowGeometry(width=10.0, shift=10.0, emit_tail=10.0)
        ws = [window(0.0, np.r_[np.zeros(30), np.ones(40), np.zeros(30)])]
        offline = aggregate_offline(ws, geo)
        streaming = aggregate_streaming(ws, geo, first_window_full=False)
        assert offline == streaming
        assert spans(offline) == [(pytest.approx(3.0), pytest.approx(7.0))]

    def test_no_cross_window_averaging(self):
        # Tail says speech even when nine other windows disagree.
        ws = tail_flip_windows()
        streaming = aggregate_streaming(ws, GEO, threshold=0.5)
        assert spans(streaming) == [(pytest.approx(10.0), pytest.approx(11.0))]


class TestStreamingDegradation:
    def test_reference_equal_to_offline(self):
        rng = np.random.default_rng(17)
        ws = [window(float(k), (rng.random(100) > 0.3).astype(float)) for k in range(10)]
        ref = aggregate_offline(ws, GEO)
        assert ref.total_speech > 0
        comparison = streaming_degradation(ws, ref, GEO)
        assert comparison.offline.der == 0.0
        assert comparison.streaming.der >= 0.0

    def test_agreeing_windows_no_degradation(self):
        ws = [constant_window(float(k), 1.0) for k in range(10)]
        ref = aggregate_offline(ws, GEO)
        comparison = streaming_degradation(ws, ref, GEO)
        assert comparison.offline.der == 0.0
        assert comparison.streaming.der == 0.0
        assert comparison.der_delta == 0.0

    def test_constructed_disagreement_sign(self):
        # The reference contains the tail speech; offline misses it, so
        # offline DER exceeds streaming DER and the delta is negative.
        ws = tail_flip_windows()
        ref = RecordingAnnotation.from_dict("rec1", {"A": [(10.0, 11.0)]})
        comparison = streaming_degradation(ws, ref, GEO)
        assert comparison.offline.der == pytest.approx(1.0)
        assert comparison.streaming.der == 0.0
        assert comparison.der_delta == pytest.approx(-1.0)


class TestWindowGeometry:
    def test_validation(self):
        with pytest.raises(ValueError):
            WindowGeometry(width=10, shift=0, emit_tail=1)
        with pytest.raises(ValueError):
            WindowGeometry(width=10, shift=11, emit_tail=1)
        with pytest.raises(ValueError):
            WindowGeometry(width=10, shift=1, emit_tail=0)
        with pytest.raises(ValueError):
            WindowGeometry(width=10, shift=1, emit_tail=12)
