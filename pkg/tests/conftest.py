from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from missingmass.distributions import DiscreteDistribution

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rational_grid():
    """Rational distributions with S <= 3, symmetric and asymmetric."""
    weights = [
        (1, 1), (1, 2), (1, 3), (2, 3), (1, 5), (3, 7), (1, 9),
        (1, 1, 1), (1, 1, 2), (1, 2, 3), (1, 1, 4), (2, 3, 5), (1, 2, 6),
        (1, 3, 3), (1, 4, 5), (3, 4, 8), (1, 1, 8), (2, 2, 1), (5, 6, 7), (1, 10, 20),
    ]
    out = []
    for w in weights:
        total = sum(w)
        out.append(DiscreteDistribution([Fraction(x, total) for x in w], name="r" + ":".join(map(str, w))))
    return out


@pytest.fixture(scope="session")
def grid():
    return rational_grid()


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    """Append-only list whose lines are echoed in the terminal summary."""
    return request.config.stash[ACCEPTANCE_LINES]
