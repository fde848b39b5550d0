from fractions import Fraction

import pytest

from missingmass.distributions import make_distribution
from missingmass.numerics import DomainError
from missingmass.oracle import (
    BudgetExceeded,
    enumerate_outcomes,
    exact_covariance,
    exact_expectation,
    exact_variance,
    realized_mass_of,
)

U2 = make_distribution("uniform", 2, exact=True)


class TestEnumeration:
    def test_compositions(self):
        table = enumerate_outcomes(U2, 2)
        assert len(table) == 3
        assert sorted(table.weights) == [Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]

    def test_single_draw(self):
        d = make_distribution("zipf", 3, 1, exact=True)
        table = enumerate_outcomes(d, 1)
        assert len(table) == 3 and sorted(table.weights) == sorted(d.values())

    def test_total_weight(self, grid):
        for d in grid:
            for mode in ("composition", "sequence"):
                assert enumerate_outcomes(d, 4, mode).total_weight() == 1

    def test_sequence_mode(self):
        table = enumerate_outcomes(U2, 3, "sequence")
        assert len(table) == 8 and all(o.sequence is not None for o in table.outcomes)
        assert table.outcomes[5].profile().n == 3

    def test_statistics(self):
        table = enumerate_outcomes(U2, 2)
        assert exact_expectation(table, lambda o: o.phi(1)) == 1
        assert exact_expectation(table, lambda o: realized_mass_of(o, U2, 0)) == Fraction(1, 4)
        assert exact_expectation(table, lambda o: 1) == 1
        assert exact_variance(table, lambda o: o.phi(1)) == 1
        assert exact_covariance(table, lambda o: o.phi(1), lambda o: o.phi(2)) == Fraction(-1, 2)

    def test_budget(self):
        with pytest.raises(BudgetExceeded) as info:
            enumerate_outcomes(U2, 30, "sequence")
        assert info.value.required == 2**30
        with pytest.raises(BudgetExceeded):
            enumerate_outcomes(make_distribution("uniform", 50, exact=True), 50, budget=1000)

    def test_needs_exact(self):
        with pytest.raises(DomainError):
            enumerate_outcomes(make_distribution("uniform", 2), 2)
        with pytest.raises(DomainError):
            enumerate_outcomes(U2, 2, "other")
