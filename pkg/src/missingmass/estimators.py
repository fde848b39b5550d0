"""Estimators computed from a sample alone."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict

from .distributions import DiscreteDistribution, SampleProfile
from .numerics import DomainError, LogWeight, compensated_alternating_sum, log_binomial_ratio_chain

__all__ = [
    "EstimatedDistribution",
    "chao_unseen",
    "good_turing",
    "hybrid_phat",
    "minimal_bias",
    "natural_estimate",
]


def good_turing(profile: SampleProfile, k: int, variant: str = "standard") -> float:
    """Good-Turing estimate of ``M_k``.

    ``standard`` is ``(k+1)/n * Phi_{k+1}``; ``simple`` divides by
    ``n - k`` instead of ``n``.
    """
    n = profile.n
    if not 0 <= k < n:
        raise DomainError(f"Good-Turing needs 0 <= k < n, got k={k}, n={n}")
    phi = profile.phi(k + 1)
    if variant == "standard":
        return (k + 1) * phi / n
    if variant == "simple":
        return (k + 1) * phi / (n - k)
    raise DomainError(f"unknown Good-Turing variant {variant!r}")


def minimal_bias(profile: SampleProfile, k: int, exact: bool = False):
    """``sum_{i=1}^{n-k} (-1)**(i-1) C(n,k)/C(n,k+i) Phi_{k+i}``.

    Its bias is the remainder ``-C(n,k)(-1)**(n-k) sum_x p_x**(n+1)``.  The
    value is not clamped and may leave ``[0, 1]``.  With ``exact=True`` the
    result is a Fraction.
    """
    n = profile.n
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got k={k}, n={n}")
    phis = profile.prefix_counts(n)
    if exact:
        cnk = math.comb(n, k)
        return sum(
            (Fraction((-1) ** (f - k - 1) * cnk * c, math.comb(n, f)) for f, c in phis.items() if f > k),
            Fraction(0),
        )
    if k == n:
        return 0.0
    top = max((f for f in phis if f > k), default=0)
    if top == 0:
        return 0.0
    logs = log_binomial_ratio_chain(n, k, top - k)
    terms = [
        LogWeight.from_log(logs[f - k - 1] + math.log(c), 1 if (f - k) % 2 else -1)
        for f, c in phis.items()
        if f > k
    ]
    return float(compensated_alternating_sum(terms))


def chao_unseen(profile: SampleProfile) -> float:
    """Chao's estimate of the number of unseen classes.

    ``(n-1)/n * Phi_1**2 / (2 Phi_2)``, or ``Phi_1 (Phi_1 - 1) / 2`` when
    no class was seen twice.
    """
    n = profile.n
    if n < 2:
        raise DomainError("Chao's estimator needs n >= 2")
    f1, f2 = profile.phi(1), profile.phi(2)
    if f1 == 0:
        return 0.0
    if f2 == 0:
        return f1 * (f1 - 1) / 2.0
    return (n - 1) / n * f1 * f1 / (2.0 * f2)


def natural_estimate(profile: SampleProfile, k: int) -> float:
    """Per-class probability ``M_k^G / Phi_k`` for classes seen ``k`` times."""
    phi_k = profile.phi(k) if k >= 1 else chao_unseen(profile)
    if phi_k == 0:
        return 0.0
    return good_turing(profile, k) / phi_k


@dataclass(frozen=True)
class EstimatedDistribution:
    """Plug-in distribution: seen classes plus a block of unseen ones.

    Attributes
    ----------
    seen : dict
        Class index to estimated probability.
    unseen_count : float
        Estimated number of unseen classes (possibly fractional).
    unseen_each : float
        Estimated probability of each unseen class.
    """

    seen: Dict[int, float]
    unseen_count: float
    unseen_each: float

    def total(self) -> float:
        return math.fsum(self.seen.values()) + self.unseen_count * self.unseen_each

    def to_distribution(self) -> DiscreteDistribution:
        """Materialize with ``ceil(unseen_count)`` synthetic unseen classes.

        The last synthetic class takes the fractional remainder so the
        unseen block keeps its total mass exactly.
        """
        probs = [self.seen[x] for x in sorted(self.seen)]
        if self.unseen_count > 0 and self.unseen_each > 0:
            whole = math.ceil(self.unseen_count)
            frac = self.unseen_count - (whole - 1)
            probs += [self.unseen_each] * (whole - 1) + [self.unseen_each * frac]
        arr = [p for p in probs if p > 0]
        total = math.fsum(arr)
        return DiscreteDistribution([p / total for p in arr], name="estimated", min_support=1)


def hybrid_phat(profile: SampleProfile) -> EstimatedDistribution:
    """Mix of empirical and Good-Turing per-class estimates.

    A class seen ``k`` times gets ``k/n`` when ``k < Phi_{k+1}`` and
    ``M_k^G / Phi_k`` otherwise; a zero from the second branch falls back
    to ``k/n``.  Unseen classes number ``chao_unseen`` and share
    ``M_0^G``.  One constant then normalizes everything to sum to one.
    """
    n = profile.n
    if n < 2:
        raise DomainError("hybrid estimate needs n >= 2")
    phis = profile.prefix_counts(n)
    per_freq: Dict[int, float] = {}
    for k, phi_k in phis.items():
        nxt = phis.get(k + 1, 0)
        if k < nxt:
            value = k / n
        else:
            value = (k + 1) * nxt / n / phi_k
            if value == 0.0:
                value = k / n
        per_freq[k] = value
    counts = profile.class_counts()
    raw_seen = {int(x): per_freq[int(c)] for x, c in enumerate(counts) if c > 0}
    f0 = chao_unseen(profile)
    m0 = phis.get(1, 0) / n
    unseen_raw = m0 / f0 if f0 > 0 and m0 > 0 else 0.0
    if unseen_raw == 0.0:
        f0 = 0.0
    total = math.fsum(raw_seen.values()) + f0 * unseen_raw
    scale = 1.0 / total
    return EstimatedDistribution(
        seen={x: v * scale for x, v in raw_seen.items()},
        unseen_count=f0,
        unseen_each=unseen_raw * scale,
    )
