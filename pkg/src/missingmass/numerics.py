"""Log-space weights, binomial helpers and compensated summation.

Probability-scale quantities in this package routinely fall far below the
smallest positive double (the bias of the minimal-bias estimator is of
order ``S**-n``), so they are carried as a sign plus a natural-log
magnitude.  Exact oracle arithmetic uses :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, List, Sequence, Union

__all__ = [
    "DomainError",
    "LogWeight",
    "Rational",
    "UNDERFLOW_LOG",
    "binomial_ratio_chain",
    "compensated_alternating_sum",
    "log_binomial",
    "log_binomial_ratio_chain",
    "signed_log_sum",
]

Rational = Fraction

#: Magnitudes below ``exp(UNDERFLOW_LOG)`` are clamped to zero.
UNDERFLOW_LOG = -1.0e6


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class LogWeight:
    """A real number stored as ``sign * exp(log_magnitude)``.

    ``sign == 0`` marks an exact zero; ``log_magnitude`` is then ignored.
    Values whose magnitude drops below ``exp(UNDERFLOW_LOG)`` are clamped
    to zero with ``underflow`` set so that callers can tell a genuine zero
    from a clamped one.
    """

    log_magnitude: float
    sign: int = 1
    underflow: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise DomainError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if self.sign == 0:
            object.__setattr__(self, "log_magnitude", -math.inf)
        elif math.isnan(self.log_magnitude):
            raise DomainError("log magnitude is NaN")
        elif self.log_magnitude < UNDERFLOW_LOG:
            object.__setattr__(self, "sign", 0)
            object.__setattr__(self, "log_magnitude", -math.inf)
            object.__setattr__(self, "underflow", True)

    @classmethod
    def zero(cls) -> "LogWeight":
        return cls(-math.inf, 0)

    @classmethod
    def from_log(cls, log_magnitude: float, sign: int = 1) -> "LogWeight":
        if log_magnitude == -math.inf:
            return cls.zero()
        return cls(float(log_magnitude), sign)

    @classmethod
    def from_value(cls, value: Union[float, int, Fraction]) -> "LogWeight":
        if isinstance(value, LogWeight):
            return value
        if value == 0:
            return cls.zero()
        sign = 1 if value > 0 else -1
        mag = -value if sign < 0 else value
        if isinstance(mag, _RationalABC):
            # math.log accepts arbitrarily large ints, so this stays accurate
            # far outside the double range.
            return cls(math.log(mag.numerator) - math.log(mag.denominator), sign)
        return cls(math.log(mag), sign)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    @property
    def log10_magnitude(self) -> float:
        return self.log_magnitude / math.log(10.0)

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_magnitude > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_magnitude)

    def __neg__(self) -> "LogWeight":
        return LogWeight(self.log_magnitude, -self.sign) if self.sign else self

    def __abs__(self) -> "LogWeight":
        return LogWeight(self.log_magnitude, 1) if self.sign else self

    def __mul__(self, other) -> "LogWeight":
        other = LogWeight.from_value(other)
        if self.sign == 0 or other.sign == 0:
            return LogWeight.zero()
        return LogWeight(self.log_magnitude + other.log_magnitude, self.sign * other.sign)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogWeight":
        other = LogWeight.from_value(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogWeight")
        if self.sign == 0:
            return self
        return LogWeight(self.log_magnitude - other.log_magnitude, self.sign * other.sign)

    def __add__(self, other) -> "LogWeight":
        return compensated_alternating_sum([self, LogWeight.from_value(other)])

    __radd__ = __add__

    def __sub__(self, other) -> "LogWeight":
        return self + (-LogWeight.from_value(other))

    def __rsub__(self, other) -> "LogWeight":
        return LogWeight.from_value(other) - self

    def __repr__(self) -> str:
        if self.sign == 0:
            return "LogWeight(0%s)" % (", underflow" if self.underflow else "")
        return f"LogWeight({'-' if self.sign < 0 else '+'}exp({self.log_magnitude!r}))"


def _check_nk(n: int, k: int) -> None:
    if n < 0 or k < 0:
        raise DomainError(f"binomial arguments must be non-negative, got ({n}, {k})")
    if k > n:
        raise DomainError(f"k={k} exceeds n={n}")


# Exact big-integer binomials are cheap up to this size and make the
# integer-representable range exact.
_EXACT_LIMIT = 4000


def log_binomial(n: int, k: int) -> LogWeight:
    """Return ``ln C(n, k)`` as a positive :class:`LogWeight`."""
    _check_nk(n, k)
    if n <= _EXACT_LIMIT:
        return LogWeight(math.log(math.comb(n, k)), 1)
    return LogWeight(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1), 1)


def log_binomial_ratio_chain(n: int, k: int, i_max: int) -> List[float]:
    """Natural logs of ``C(n,k) / C(n,k+i)`` for ``i = 1..i_max``."""
    _check_nk(n, k)
    if i_max < 0 or k + i_max > n:
        raise DomainError(f"k + i_max = {k + i_max} exceeds n = {n}")
    out = []
    acc = 0.0
    for i in range(i_max):
        # C(n, k+i) / C(n, k+i+1) = (k+i+1) / (n-k-i)
        acc += math.log(k + i + 1) - math.log(n - k - i)
        out.append(acc)
    return out


def binomial_ratio_chain(n: int, k: int, i_max: int) -> List[float]:
    """Return ``c_i = C(n,k) / C(n,k+i)`` for ``i = 1..i_max``.

    The ratios are built with the recurrence
    ``c_{i+1} = c_i * (k+i+1) / (n-k-i)`` carried in log space, so neither
    binomial is ever formed.  Entries smaller than the double range come
    back as ``0.0``; use :func:`log_binomial_ratio_chain` when that matters.
    """
    return [math.exp(v) for v in log_binomial_ratio_chain(n, k, i_max)]


def compensated_alternating_sum(terms: Iterable[LogWeight]) -> LogWeight:
    """Sum signed log-space terms without catastrophic accumulation error.

    Terms are rescaled by the largest magnitude and added with
    :func:`math.fsum` (Shewchuk's exactly-rounded summation), so the result
    is independent of term order.  Terms more than ~745 nats below the
    largest contribute nothing, which is below double resolution anyway.
    """
    nonzero = [LogWeight.from_value(t) for t in terms]
    nonzero = [t for t in nonzero if t.sign != 0]
    if not nonzero:
        return LogWeight.zero()
    top = max(t.log_magnitude for t in nonzero)
    total = math.fsum(t.sign * math.exp(t.log_magnitude - top) for t in nonzero)
    if total == 0.0:
        return LogWeight.zero()
    return LogWeight(top + math.log(abs(total)), 1 if total > 0 else -1)


def signed_log_sum(logs: Sequence[float], signs: Sequence[int]) -> LogWeight:
    """Convenience wrapper: sum ``signs[i] * exp(logs[i])``."""
    return compensated_alternating_sum(
        LogWeight.from_log(l, s) for l, s in zip(logs, signs) if s != 0
    )
