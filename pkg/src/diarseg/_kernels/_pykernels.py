"""Numpy reference implementation of the interval kernels.

This is the fallback backend used when the compiled extension is not
available.  Both backends implement the same four primitives over
float64 interval arrays (``starts``/``ends``, half-open, sorted by
start):

* ``merge_sorted``       -- union with a configurable merge gap
* ``intersect``          -- intersection pieces of two disjoint sets
* ``intersect_measure``  -- total intersection length
* ``der_sweep``          -- missed/false-alarm/confusion accumulation
                            over the elementary spans of a recording

Backends must agree on piece boundaries bit-exactly (all outputs are
selections of input values, never new arithmetic); accumulated sums may
differ by float summation order only.
"""

from __future__ import annotations

import numpy as np


def merge_sorted(
    starts: np.ndarray, ends: np.ndarray, gap: float
) -> tuple[np.ndarray, np.ndarray]:
    """Union of intervals sorted by start.

    Consecutive intervals merge whenever the gap between the running
    covered end and the next start is <= ``gap``.  ``gap=eps`` gives
    plain normalization (overlaps and adjacency merge); ``gap=2m+eps``
    gives the merge stage of morphological closing.
    """
    n = starts.shape[0]
    if n == 0:
        return starts[:0].copy(), ends[:0].copy()
    hi = np.maximum.accumulate(ends)
    brk = np.flatnonzero(starts[1:] > hi[:-1] + gap) + 1
    first = np.concatenate(([0], brk))
    last = np.concatenate((brk, [n])) - 1
    return starts[first].copy(), hi[last].copy()


def intersect(
    sa: np.ndarray, ea: np.ndarray, sb: np.ndarray, eb: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Intersection pieces of two normalized interval sets.

    Implemented as a coverage sweep: a piece belongs to the output
    exactly where both sets cover it.  Zero-length pieces are dropped.
    """
    if sa.shape[0] == 0 or sb.shape[0] == 0:
        return sa[:0].copy(), ea[:0].copy()
    na, nb = sa.shape[0], sb.shape[0]
    times = np.concatenate((sa, sb, ea, eb))
    deltas = np.concatenate(
        (np.ones(na + nb, np.int64), -np.ones(na + nb, np.int64))
    )
    order = np.argsort(times, kind="stable")
    t = times[order]
    cov = np.cumsum(deltas[order])
    keep = (cov[:-1] == 2) & (t[1:] > t[:-1])
    return t[:-1][keep].copy(), t[1:][keep].copy()


def intersect_measure(
    sa: np.ndarray, ea: np.ndarray, sb: np.ndarray, eb: np.ndarray
) -> float:
    """Total length of the intersection of two normalized interval sets."""
    s, e = intersect(sa, ea, sb, eb)
    return float(np.sum(e - s))


def der_sweep(
    rs: np.ndarray,
    re: np.ndarray,
    rk: np.ndarray,
    n_ref: int,
    hs: np.ndarray,
    he: np.ndarray,
    hk: np.ndarray,
    n_hyp: int,
    hyp_of_ref: np.ndarray,
) -> tuple[float, float, float]:
    """Accumulate DER components over elementary spans.

    Inputs are the scoring-region-clipped intervals of every reference
    and hypothesis speaker (``rk``/``hk`` carry the speaker index of
    each interval; per-speaker intervals are disjoint).  ``hyp_of_ref``
    maps each reference speaker index to its assigned hypothesis index,
    -1 when unmapped.  Returns (missed, false_alarm, confusion) in
    seconds.
    """
    bounds = np.unique(np.concatenate((rs, re, hs, he)))
    if bounds.shape[0] < 2:
        return 0.0, 0.0, 0.0
    span = np.diff(bounds)
    n_spans = span.shape[0]

    def activity(s, e, k, n):
        delta = np.zeros((n, n_spans + 1), np.int64)
        if s.shape[0]:
            np.add.at(delta, (k, np.searchsorted(bounds, s)), 1)
            np.add.at(delta, (k, np.searchsorted(bounds, e)), -1)
        return np.cumsum(delta[:, :-1], axis=1) > 0

    act_r = activity(rs, re, rk, n_ref)
    act_h = activity(hs, he, hk, n_hyp)
    n_r = act_r.sum(axis=0)
    n_h = act_h.sum(axis=0)
    mapped = np.flatnonzero(hyp_of_ref >= 0)
    if mapped.size:
        n_cor = (act_r[mapped] & act_h[hyp_of_ref[mapped]]).sum(axis=0)
    else:
        n_cor = np.zeros(n_spans, np.int64)

    missed = float(np.sum(np.maximum(n_r - n_h, 0) * span))
    fa = float(np.sum(np.maximum(n_h - n_r, 0) * span))
    confusion = float(np.sum((np.minimum(n_r, n_h) - n_cor) * span))
    return missed, fa, confusion
