"""Exhaustive enumeration of small multinomial outcome spaces.

Two granularities are offered.  ``composition`` enumerates count vectors
with multinomial weights and suffices for statistics of the final sample.
``sequence`` enumerates every ordered sample and is needed for prefix
statistics such as ``Phi_i(j)`` with ``j < n``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

from .distributions import DiscreteDistribution, SampleProfile
from .numerics import DomainError

__all__ = [
    "BudgetExceeded",
    "Outcome",
    "OutcomeTable",
    "enumerate_outcomes",
    "exact_covariance",
    "exact_expectation",
    "exact_variance",
    "realized_mass_of",
]

#: Default caps on the number of enumerated outcomes.
COMPOSITION_BUDGET = 2_000_000
SEQUENCE_BUDGET = 100_000


class BudgetExceeded(RuntimeError):
    """The requested enumeration is larger than the allowed budget."""

    def __init__(self, required: int, budget: int, mode: str):
        super().__init__(f"{mode} enumeration needs {required} outcomes, budget is {budget}")
        self.required = required
        self.budget = budget
        self.mode = mode


@dataclass(frozen=True)
class Outcome:
    """One enumerated outcome.

    ``counts`` is the per-class count vector; ``sequence`` the ordered
    draws in sequence mode and ``None`` otherwise.
    """

    counts: Tuple[int, ...]
    sequence: Optional[Tuple[int, ...]] = None

    def profile(self) -> SampleProfile:
        if self.sequence is not None:
            return SampleProfile(list(self.sequence))
        seq = [x for x, c in enumerate(self.counts) for _ in range(c)]
        return SampleProfile(seq, prefix_available=False)

    def phi(self, k: int) -> int:
        return sum(1 for c in self.counts if c == k)


@dataclass(frozen=True)
class OutcomeTable:
    """Enumerated outcomes with exact probabilities.

    ``multiplicities[t]`` is the number of orderings behind a composition
    (always 1 in sequence mode); ``weights[t]`` already includes it.
    """

    dist: DiscreteDistribution
    n: int
    mode: str
    outcomes: Tuple[Outcome, ...]
    weights: Tuple[Fraction, ...]
    multiplicities: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.outcomes)

    def total_weight(self) -> Fraction:
        return sum(self.weights, Fraction(0))


def _compositions(n: int, S: int):
    # Stars and bars over bar positions.
    for bars in itertools.combinations(range(n + S - 1), S - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(n + S - 1 - prev - 1)
        yield tuple(out)


def enumerate_outcomes(dist: DiscreteDistribution, n: int, mode: str = "composition",
                       budget: Optional[int] = None) -> OutcomeTable:
    """Enumerate all outcomes of ``n`` draws from ``dist`` exactly.

    Raises
    ------
    BudgetExceeded
        If the outcome count exceeds ``budget``.
    DomainError
        If the distribution is not exact.
    """
    if not dist.exact:
        raise DomainError("enumeration needs Fraction probabilities")
    if n < 0:
        raise DomainError("n must be non-negative")
    S = dist.S
    probs = dist.values()
    if mode == "composition":
        required = math.comb(n + S - 1, S - 1)
        cap = COMPOSITION_BUDGET if budget is None else budget
        if required > cap:
            raise BudgetExceeded(required, cap, mode)
        outcomes, weights, mults = [], [], []
        fact_n = math.factorial(n)
        for counts in _compositions(n, S):
            mult = fact_n
            for c in counts:
                mult //= math.factorial(c)
            w = Fraction(mult)
            for p, c in zip(probs, counts):
                w *= p**c
            outcomes.append(Outcome(counts))
            weights.append(w)
            mults.append(mult)
    elif mode == "sequence":
        required = S**n
        cap = SEQUENCE_BUDGET if budget is None else budget
        if required > cap:
            raise BudgetExceeded(required, cap, mode)
        outcomes, weights, mults = [], [], []
        for seq in itertools.product(range(S), repeat=n):
            w = Fraction(1)
            counts = [0] * S
            for x in seq:
                w *= probs[x]
                counts[x] += 1
            outcomes.append(Outcome(tuple(counts), seq))
            weights.append(w)
            mults.append(1)
    else:
        raise DomainError(f"unknown enumeration mode {mode!r}")
    return OutcomeTable(dist, n, mode, tuple(outcomes), tuple(weights), tuple(mults))


def exact_expectation(table: OutcomeTable, statistic: Callable[[Outcome], object]) -> Fraction:
    """``sum_t weight_t * statistic(outcome_t)`` in exact arithmetic."""
    return sum((w * Fraction(statistic(o)) for o, w in zip(table.outcomes, table.weights)), Fraction(0))


def exact_covariance(table: OutcomeTable, first: Callable, second: Callable) -> Fraction:
    values = [(Fraction(first(o)), Fraction(second(o))) for o in table.outcomes]
    e1 = sum((w * a for (a, _), w in zip(values, table.weights)), Fraction(0))
    e2 = sum((w * b for (_, b), w in zip(values, table.weights)), Fraction(0))
    e12 = sum((w * a * b for (a, b), w in zip(values, table.weights)), Fraction(0))
    return e12 - e1 * e2


def exact_variance(table: OutcomeTable, statistic: Callable) -> Fraction:
    return exact_covariance(table, statistic, statistic)


def realized_mass_of(outcome: Outcome, dist: DiscreteDistribution, k: int) -> Fraction:
    """``M_k`` of an enumerated outcome."""
    probs = dist.values()
    return sum((p for p, c in zip(probs, outcome.counts) if c == k), Fraction(0))
