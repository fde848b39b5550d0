"""Exact expected quantities under a known distribution.

Every quantity here is a weighted power sum ``sum_x p_x**a (1 - p_x)**b``
over classes, evaluated per probability group.  Float distributions give
:class:`~missingmass.numerics.LogWeight` results so that values far below
the double range survive; Fraction distributions give exact Fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple, Union

from .distributions import DiscreteDistribution
from .numerics import DomainError, LogWeight, compensated_alternating_sum, log_binomial

__all__ = [
    "ESTIMATOR_IDS",
    "ExpectedProfile",
    "analytic_bias",
    "expected_fk",
    "expected_gk",
    "expected_mass",
    "expected_profile",
    "power_sum",
    "remainder",
    "theorem1_decomposition",
]

Number = Union[LogWeight, Fraction]

ESTIMATOR_IDS = ("GT", "GT-prime", "B")


def _check(n: int, k: int) -> None:
    if n < 0 or not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def power_sum(dist: DiscreteDistribution, a: int, b: int) -> Number:
    """``sum_x p_x**a * (1 - p_x)**b``."""
    probs, counts = dist.groups()
    if dist.exact:
        return sum((c * p**a * (1 - p) ** b for p, c in zip(probs, counts)), Fraction(0))
    terms = []
    for p, c in zip(probs, counts):
        lp = a * _log(p) if a else 0.0
        lq = b * _log(1.0 - p) if b else 0.0
        terms.append(LogWeight.from_log(math.log(c) + lp + lq))
    return compensated_alternating_sum(terms)


def _binom(dist: DiscreteDistribution, n: int, k: int) -> Number:
    return Fraction(math.comb(n, k)) if dist.exact else log_binomial(n, k)


def expected_gk(dist: DiscreteDistribution, n: int, k: int) -> Number:
    """``g_k(n) = f_k(n) / C(n, k)``."""
    _check(n, k)
    return power_sum(dist, k, n - k)


def expected_fk(dist: DiscreteDistribution, n: int, k: int) -> Number:
    """Expected number of classes seen exactly ``k`` times in ``n`` draws."""
    _check(n, k)
    return _binom(dist, n, k) * power_sum(dist, k, n - k)


def expected_mass(dist: DiscreteDistribution, n: int, k: int) -> Number:
    """``E[M_k] = C(n, k) g_{k+1}(n+1)``."""
    _check(n, k)
    return _binom(dist, n, k) * power_sum(dist, k + 1, n - k)


def remainder(dist: DiscreteDistribution, n: int, k: int) -> Number:
    """``R_{n,k} = C(n,k) (-1)**(n-k) sum_x p_x**(n+1)``."""
    _check(n, k)
    r = _binom(dist, n, k) * power_sum(dist, n + 1, 0)
    return r if (n - k) % 2 == 0 else -r


def theorem1_decomposition(dist: DiscreteDistribution, n: int, k: int) -> Tuple[Number, Number]:
    """Split ``E[M_k]`` into the sample-estimable series and the remainder.

    ``series = C(n,k) sum_{i=1}^{n-k} (-1)**(i-1) g_{k+i}(n)``; the two
    parts sum to :func:`expected_mass`.
    """
    _check(n, k)
    c = _binom(dist, n, k)
    if dist.exact:
        series = sum(
            ((-1) ** (i - 1) * power_sum(dist, k + i, n - k - i) for i in range(1, n - k + 1)),
            Fraction(0),
        )
    else:
        series = compensated_alternating_sum(
            power_sum(dist, k + i, n - k - i) * (1 if i % 2 else -1) for i in range(1, n - k + 1)
        )
    return c * series, remainder(dist, n, k)


def analytic_bias(dist: DiscreteDistribution, n: int, k: int, estimator_id: str) -> Number:
    """Signed bias ``E[estimate] - E[M_k]`` of a named estimator.

    ``GT`` is Good-Turing ``(k+1)/n Phi_{k+1}``, ``GT-prime`` the variant
    ``(k+1)/(n-k) Phi_{k+1}``, ``B`` the minimal-bias alternating sum.
    """
    _check(n, k)
    if estimator_id == "B":
        return -remainder(dist, n, k)
    if estimator_id not in ESTIMATOR_IDS:
        raise DomainError(f"unknown estimator {estimator_id!r}")
    if k + 1 > n:
        raise DomainError(f"{estimator_id} needs k < n")
    if estimator_id == "GT-prime":
        # (k+1)/(n-k) C(n,k+1) = C(n,k), leaving one extra factor p_x.
        return _binom(dist, n, k) * power_sum(dist, k + 2, n - k - 1)
    # Per class: p^{k+1} (1-p)^{n-k-1} [C(n,k) p - C(n-1,k-1)].
    probs, counts = dist.groups()
    if dist.exact:
        lower = math.comb(n - 1, k - 1) if k else 0
        return sum(
            (c * p ** (k + 1) * (1 - p) ** (n - k - 1) * (math.comb(n, k) * p - lower)
             for p, c in zip(probs, counts)),
            Fraction(0),
        )
    cnk = log_binomial(n, k)
    lower = log_binomial(n - 1, k - 1) if k else LogWeight.zero()
    terms = []
    for p, c in zip(probs, counts):
        bracket = cnk * p - lower
        scale = LogWeight.from_log(math.log(c) + (k + 1) * _log(p) + (n - k - 1) * _log(1.0 - p))
        terms.append(scale * bracket)
    return compensated_alternating_sum(terms)


@dataclass(frozen=True)
class ExpectedProfile:
    """``g_k(n)`` and ``f_k(n)`` for ``k = 0..n`` at one sample size."""

    n: int
    g: Dict[int, Number]
    f: Dict[int, Number]


def expected_profile(dist: DiscreteDistribution, n: int) -> ExpectedProfile:
    g = {k: expected_gk(dist, n, k) for k in range(n + 1)}
    f = {k: _binom(dist, n, k) * g[k] for k in range(n + 1)}
    return ExpectedProfile(n, g, f)
