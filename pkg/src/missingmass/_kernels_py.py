"""Pure-Python kernels; the fallback for the compiled ``_kernels`` module.

Two kernels dominate runtime:

``pair_moment``
    ``sum_x sum_y w(x) w'(y) P(N_x(a) = u and N_y(b) = v)`` over grouped
    classes, where ``N_x(a)`` counts class ``x`` in the first ``a`` draws.
    Every second moment of frequencies-of-frequencies and of the total
    mass reduces to it.
``step_counts``
    For a sequence ``X_1..X_n`` the count of ``X_t`` within ``X_1..X_t``.

Unlike the compiled module, the functions here also accept
:class:`~fractions.Fraction` probabilities and then compute exactly.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

BACKEND = "python"


def step_counts(sequence) -> np.ndarray:
    seq = np.asarray(sequence, dtype=np.int64)
    n = seq.shape[0]
    out = np.empty(n, dtype=np.int64)
    if n == 0:
        return out
    order = np.argsort(seq, kind="stable")
    ordered = seq[order]
    starts = np.flatnonzero(np.r_[True, ordered[1:] != ordered[:-1]])
    lengths = np.diff(np.r_[starts, n])
    rank = np.arange(n) - np.repeat(starts, lengths) + 1
    out[order] = rank
    return out


# --------------------------------------------------------------------------
# exact arithmetic


def _same_exact(a, u, b, v, p):
    q = 1 - p
    if a == b:
        if u != v:
            return 0
        return math.comb(a, u) * p**u * q ** (a - u)
    d, e = u - v, a - b
    if d < 0 or d > e or v > b:
        return 0
    return math.comb(b, v) * math.comb(e, d) * p**u * q ** (a - u)


def _distinct_exact(a, u, b, v, px, py):
    r = 1 - px - py
    if a == b:
        if u + v > a:
            return 0
        coef = math.factorial(a) // (math.factorial(u) * math.factorial(v) * math.factorial(a - u - v))
        return coef * px**u * py**v * r ** (a - u - v)
    e = a - b
    total = Fraction(0)
    for i in range(max(0, u - e), min(u, b - v) + 1):
        coef = math.factorial(b) // (math.factorial(i) * math.factorial(v) * math.factorial(b - i - v))
        total += (
            coef
            * math.comb(e, u - i)
            * px**u
            * py**v
            * r ** (b - i - v)
            * (1 - px) ** (e - u + i)
        )
    return total


# --------------------------------------------------------------------------
# floating point, log space


def _xlog(e, logb):
    return 0.0 if e == 0 else e * logb


def _safe_log(x):
    return math.log(x) if x > 0.0 else -math.inf


def _lf(n):
    return math.lgamma(n + 1)


def _same_float(a, u, b, v, lp, lq):
    if a == b:
        if u != v:
            return 0.0
        s = _lf(a) - _lf(u) - _lf(a - u) + _xlog(u, lp) + _xlog(a - u, lq)
        return math.exp(s)
    d, e = u - v, a - b
    if d < 0 or d > e or v > b:
        return 0.0
    s = (
        _lf(b) - _lf(v) - _lf(b - v)
        + _lf(e) - _lf(d) - _lf(e - d)
        + _xlog(u, lp) + _xlog(a - u, lq)
    )
    return math.exp(s)


def _distinct_float(a, u, b, v, lpx, lqx, lpy, lr):
    if a == b:
        if u + v > a:
            return 0.0
        s = (
            _lf(a) - _lf(u) - _lf(v) - _lf(a - u - v)
            + _xlog(u, lpx) + _xlog(v, lpy) + _xlog(a - u - v, lr)
        )
        return math.exp(s)
    e = a - b
    base = _lf(b) - _lf(v) + _lf(e) + _xlog(u, lpx) + _xlog(v, lpy)
    total = 0.0
    for i in range(max(0, u - e), min(u, b - v) + 1):
        s = (
            base - _lf(i) - _lf(b - i - v) - _lf(u - i) - _lf(e - u + i)
            + _xlog(b - i - v, lr) + _xlog(e - u + i, lqx)
        )
        total += math.exp(s)
    return total


def pair_moment(a, u, b, v, probs, counts, weight_long=False, weight_short=False):
    """``sum_x sum_y w(x) w'(y) P(N_x(a)=u and N_y(b)=v)`` with ``a >= b``.

    ``probs``/``counts`` describe class groups (a probability and how many
    classes share it).  ``weight_long`` multiplies by ``p_x`` (the class
    counted over ``a`` draws), ``weight_short`` by ``p_y``.
    """
    if a < b:
        raise ValueError("pair_moment expects a >= b")
    if u < 0 or v < 0 or u > a or v > b:
        return 0
    exact = len(probs) > 0 and isinstance(probs[0], Fraction)
    G = len(probs)
    if exact:
        total = Fraction(0)
        for g in range(G):
            pg = probs[g]
            cg = counts[g]
            wl = pg if weight_long else 1
            total += cg * wl * (pg if weight_short else 1) * _same_exact(a, u, b, v, pg)
            for h in range(G):
                mult = cg * (counts[h] - (1 if g == h else 0))
                if mult <= 0:
                    continue
                ph = probs[h]
                total += mult * wl * (ph if weight_short else 1) * _distinct_exact(a, u, b, v, pg, ph)
        return total

    logs = [_safe_log(float(p)) for p in probs]
    log1m = [_safe_log(1.0 - float(p)) for p in probs]
    total = 0.0
    for g in range(G):
        pg = float(probs[g])
        cg = float(counts[g])
        wl = pg if weight_long else 1.0
        same = _same_float(a, u, b, v, logs[g], log1m[g])
        total += cg * wl * (pg if weight_short else 1.0) * same
        for h in range(G):
            mult = cg * (float(counts[h]) - (1.0 if g == h else 0.0))
            if mult <= 0.0:
                continue
            ph = float(probs[h])
            lr = _safe_log(max(0.0, 1.0 - pg - ph))
            dist = _distinct_float(a, u, b, v, logs[g], log1m[g], logs[h], lr)
            total += mult * wl * (ph if weight_short else 1.0) * dist
    return total


def pair_moment_batch(a, u, b, v, probs, counts, weight_long=False, weight_short=False):
    """Vector form of :func:`pair_moment` over parallel index arrays."""
    return np.array(
        [
            pair_moment(int(ai), int(ui), int(bi), int(vi), probs, counts, weight_long, weight_short)
            for ai, ui, bi, vi in zip(a, u, b, v)
        ],
        dtype=float,
    )


def joint_probability(a, u, b, v, px, py, same):
    """``P(N_x(a) = u and N_y(b) = v)`` for one pair of classes, ``a >= b``.

    ``same`` says whether ``x`` and ``y`` are the same class (``py`` is
    then ignored).  Exact for Fraction inputs.
    """
    if a < b:
        raise ValueError("joint_probability expects a >= b")
    if u < 0 or v < 0 or u > a or v > b:
        return 0
    if isinstance(px, Fraction):
        return _same_exact(a, u, b, v, px) if same else _distinct_exact(a, u, b, v, px, py)
    px = float(px)
    lp, lq = _safe_log(px), _safe_log(1.0 - px)
    if same:
        return _same_float(a, u, b, v, lp, lq)
    py = float(py)
    return _distinct_float(a, u, b, v, lp, lq, _safe_log(py), _safe_log(max(0.0, 1.0 - px - py)))
