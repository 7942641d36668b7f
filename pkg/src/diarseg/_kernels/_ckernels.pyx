# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the interval kernels.

Mirrors ``_pykernels`` exactly; see that module for the contracts.
Piece boundaries are selections of input floats (bit-identical to the
numpy backend); accumulated sums may differ only by summation order.
"""

import numpy as np

from libc.stdint cimport int64_t


def merge_sorted(const double[::1] starts, const double[::1] ends, double gap):
    cdef Py_ssize_t n = starts.shape[0]
    out_s = np.empty(n, dtype=np.float64)
    out_e = np.empty(n, dtype=np.float64)
    if n == 0:
        return out_s, out_e
    cdef double[::1] os = out_s
    cdef double[::1] oe = out_e
    cdef Py_ssize_t i, m = 0
    cdef double cur_s = starts[0]
    cdef double cur_e = ends[0]
    for i in range(1, n):
        if starts[i] > cur_e + gap:
            os[m] = cur_s
            oe[m] = cur_e
            m += 1
            cur_s = starts[i]
            cur_e = ends[i]
        elif ends[i] > cur_e:
            cur_e = ends[i]
    os[m] = cur_s
    oe[m] = cur_e
    m += 1
    return out_s[:m].copy(), out_e[:m].copy()


def intersect(const double[::1] sa, const double[::1] ea,
              const double[::1] sb, const double[::1] eb):
    cdef Py_ssize_t na = sa.shape[0]
    cdef Py_ssize_t nb = sb.shape[0]
    out_s = np.empty(na + nb, dtype=np.float64)
    out_e = np.empty(na + nb, dtype=np.float64)
    cdef double[::1] os = out_s
    cdef double[::1] oe = out_e
    cdef Py_ssize_t i = 0, j = 0, m = 0
    cdef double lo, hi
    while i < na and j < nb:
        lo = sa[i] if sa[i] > sb[j] else sb[j]
        hi = ea[i] if ea[i] < eb[j] else eb[j]
        if hi > lo:
            os[m] = lo
            oe[m] = hi
            m += 1
        if ea[i] < eb[j]:
            i += 1
        else:
            j += 1
    return out_s[:m].copy(), out_e[:m].copy()


def intersect_measure(const double[::1] sa, const double[::1] ea,
                      const double[::1] sb, const double[::1] eb):
    cdef Py_ssize_t na = sa.shape[0]
    cdef Py_ssize_t nb = sb.shape[0]
    cdef Py_ssize_t i = 0, j = 0
    cdef double lo, hi, total = 0.0
    while i < na and j < nb:
        lo = sa[i] if sa[i] > sb[j] else sb[j]
        hi = ea[i] if ea[i] < eb[j] else eb[j]
        if hi > lo:
            total += hi - lo
        if ea[i] < eb[j]:
            i += 1
        else:
            j += 1
    return total


def der_sweep(rs, re, rk, n_ref, hs, he, hk, n_hyp, hyp_of_ref):
    n_rint = rs.shape[0]
    n_hint = hs.shape[0]
    times = np.concatenate((rs, re, hs, he))
    if times.shape[0] == 0:
        return 0.0, 0.0, 0.0
    deltas = np.concatenate((
        np.ones(n_rint, np.int64), -np.ones(n_rint, np.int64),
        np.ones(n_hint, np.int64), -np.ones(n_hint, np.int64),
    ))
    is_ref = np.zeros(2 * (n_rint + n_hint), np.int64)
    is_ref[: 2 * n_rint] = 1
    spk = np.concatenate((rk, rk, hk, hk)).astype(np.int64, copy=False)
    order = np.argsort(times, kind="stable").astype(np.int64, copy=False)
    hor = np.ascontiguousarray(hyp_of_ref, dtype=np.int64)
    roh = np.full(n_hyp, -1, np.int64)
    for r in range(hor.shape[0]):
        if hor[r] >= 0:
            roh[hor[r]] = r
    return _sweep_core(
        np.ascontiguousarray(times),
        np.ascontiguousarray(deltas),
        np.ascontiguousarray(is_ref),
        np.ascontiguousarray(spk),
        order,
        int(n_ref),
        int(n_hyp),
        hor,
        roh,
    )


cdef _sweep_core(const double[::1] times, const int64_t[::1] deltas,
                 const int64_t[::1] is_ref, const int64_t[::1] spk,
                 const int64_t[::1] order,
                 Py_ssize_t n_ref, Py_ssize_t n_hyp,
                 const int64_t[::1] hyp_of_ref, const int64_t[::1] ref_of_hyp):
    active_r_arr = np.zeros(max(n_ref, 1), np.int64)
    active_h_arr = np.zeros(max(n_hyp, 1), np.int64)
    cdef int64_t[::1] active_r = active_r_arr
    cdef int64_t[::1] active_h = active_h_arr
    cdef Py_ssize_t n_events = order.shape[0]
    cdef Py_ssize_t i, ev
    cdef int64_t d, k, partner
    cdef int64_t cnt_r = 0, cnt_h = 0, cnt_cor = 0, lo
    cdef double missed = 0.0, fa = 0.0, confusion = 0.0
    cdef double t, t_prev, span

    t_prev = times[order[0]]
    for i in range(n_events):
        ev = order[i]
        t = times[ev]
        if t > t_prev:
            span = t - t_prev
            if cnt_r > cnt_h:
                missed += (cnt_r - cnt_h) * span
                lo = cnt_h
            else:
                fa += (cnt_h - cnt_r) * span
                lo = cnt_r
            confusion += (lo - cnt_cor) * span
            t_prev = t
        d = deltas[ev]
        k = spk[ev]
        if is_ref[ev]:
            partner = hyp_of_ref[k]
            if partner >= 0 and active_h[partner] > 0:
                cnt_cor += d
            active_r[k] += d
            cnt_r += d
        else:
            partner = ref_of_hyp[k]
            if partner >= 0 and active_r[partner] > 0:
                cnt_cor += d
            active_h[k] += d
            cnt_h += d
    return missed, fa, confusion
