# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_kernels_py`` for the reference implementation."""

import numpy as np
from libc.math cimport exp, log, lgamma, INFINITY

BACKEND = "cython"


def step_counts(sequence):
    cdef const long long[:] seq = np.ascontiguousarray(sequence, dtype=np.int64)
    cdef Py_ssize_t n = seq.shape[0], t
    cdef long long top = 0
    for t in range(n):
        if seq[t] < 0:
            raise ValueError("class indices must be non-negative")
        if seq[t] > top:
            top = seq[t]
    seen_arr = np.zeros(top + 1 if n else 1, dtype=np.int64)
    out_arr = np.empty(n, dtype=np.int64)
    cdef long long[:] seen = seen_arr
    cdef long long[:] out = out_arr
    for t in range(n):
        seen[seq[t]] += 1
        out[t] = seen[seq[t]]
    return out_arr


cdef inline double _xlog(double e, double logb) nogil:
    if e == 0.0:
        return 0.0
    return e * logb


cdef inline double _safe_log(double x) nogil:
    if x > 0.0:
        return log(x)
    return -INFINITY


cdef double _same(int a, int u, int b, int v, double lp, double lq, double[::1] lf) nogil:
    cdef int d, e
    if a == b:
        if u != v:
            return 0.0
        return exp(lf[a] - lf[u] - lf[a - u] + _xlog(u, lp) + _xlog(a - u, lq))
    d = u - v
    e = a - b
    if d < 0 or d > e or v > b:
        return 0.0
    return exp(lf[b] - lf[v] - lf[b - v] + lf[e] - lf[d] - lf[e - d]
               + _xlog(u, lp) + _xlog(a - u, lq))


cdef double _distinct(int a, int u, int b, int v, double lpx, double lqx,
                      double lpy, double lr, double[::1] lf) nogil:
    cdef int e, i, lo, hi
    cdef double base, total
    if a == b:
        if u + v > a:
            return 0.0
        return exp(lf[a] - lf[u] - lf[v] - lf[a - u - v]
                   + _xlog(u, lpx) + _xlog(v, lpy) + _xlog(a - u - v, lr))
    e = a - b
    lo = u - e
    if lo < 0:
        lo = 0
    hi = b - v
    if u < hi:
        hi = u
    base = lf[b] - lf[v] + lf[e] + _xlog(u, lpx) + _xlog(v, lpy)
    total = 0.0
    for i in range(lo, hi + 1):
        total += exp(base - lf[i] - lf[b - i - v] - lf[u - i] - lf[e - u + i]
                     + _xlog(b - i - v, lr) + _xlog(e - u + i, lqx))
    return total


cdef double _pair(int a, int u, int b, int v, double[::1] probs, double[::1] counts,
                  double[::1] lp, double[::1] lq, bint wl_flag, bint ws_flag,
                  double[::1] lf) nogil:
    cdef Py_ssize_t G = probs.shape[0], g, h
    cdef double total = 0.0, pg, ph, cg, wl, mult, lr, r
    if u < 0 or v < 0 or u > a or v > b:
        return 0.0
    for g in range(G):
        pg = probs[g]
        cg = counts[g]
        wl = pg if wl_flag else 1.0
        total += cg * wl * (pg if ws_flag else 1.0) * _same(a, u, b, v, lp[g], lq[g], lf)
        for h in range(G):
            mult = cg * (counts[h] - (1.0 if g == h else 0.0))
            if mult <= 0.0:
                continue
            ph = probs[h]
            r = 1.0 - pg - ph
            lr = _safe_log(r if r > 0.0 else 0.0)
            total += mult * wl * (ph if ws_flag else 1.0) * _distinct(a, u, b, v, lp[g], lq[g], lp[h], lr, lf)
    return total


def _prepare(probs, counts, int top):
    p = np.ascontiguousarray([float(x) for x in probs], dtype=np.float64)
    c = np.ascontiguousarray([float(x) for x in counts], dtype=np.float64)
    with np.errstate(divide="ignore"):
        lp = np.log(p)
        lq = np.log(1.0 - p)
    lf = np.array([lgamma(i + 1.0) for i in range(top + 2)], dtype=np.float64)
    return p, c, lp, lq, lf


def pair_moment(int a, int u, int b, int v, probs, counts, bint weight_long=False, bint weight_short=False):
    if a < b:
        raise ValueError("pair_moment expects a >= b")
    p, c, lp, lq, lf = _prepare(probs, counts, a)
    return _pair(a, u, b, v, p, c, lp, lq, weight_long, weight_short, lf)


def pair_moment_batch(a, u, b, v, probs, counts, bint weight_long=False, bint weight_short=False):
    cdef const long long[:] aa = np.ascontiguousarray(a, dtype=np.int64)
    cdef const long long[:] uu = np.ascontiguousarray(u, dtype=np.int64)
    cdef const long long[:] bb = np.ascontiguousarray(b, dtype=np.int64)
    cdef const long long[:] vv = np.ascontiguousarray(v, dtype=np.int64)
    cdef Py_ssize_t m = aa.shape[0], q
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[:] out = out_arr
    if m == 0:
        return out_arr
    cdef int top = int(np.max(aa))
    for q in range(m):
        if aa[q] < bb[q]:
            raise ValueError("pair_moment expects a >= b")
    p, c, lp, lq, lf = _prepare(probs, counts, top)
    cdef double[::1] pv = p, cv = c, lpv = lp, lqv = lq, lfv = lf
    with nogil:
        for q in range(m):
            out[q] = _pair(<int>aa[q], <int>uu[q], <int>bb[q], <int>vv[q], pv, cv, lpv, lqv,
                           weight_long, weight_short, lfv)
    return out_arr
