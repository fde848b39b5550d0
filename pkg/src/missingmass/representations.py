"""Coefficient tables over ``g_i(j)`` and the linear estimators they induce.

A representation of ``E[M_k]`` at sample size ``n`` is a sparse table
``alpha[i, j]`` with ``1 <= i <= j <= n + 1`` such that

    E[M_k] = sum_{i,j} alpha[i, j] * g_i(j),   g_i(j) = f_i(j) / C(j, i).

Four rewrites preserve the sum:

``split``
    ``g = (1 - d) g + d g``; a no-op on the table until the parts diverge.
``down``
    ``g_i(j) = g_i(j+1) + g_{i+1}(j+1)``.
``up-minus``
    ``g_i(j) = g_i(j-1) - g_{i+1}(j)``.
``left-up``
    ``g_i(j) = g_{i-1}(j-1) - g_{i-1}(j)``.

Replacing each ``g_i(j)`` by the observable ``Phi_i(j) / C(j, i)`` turns a
representation into a :class:`LinearEstimator`.  Column ``n + 1`` is not
observable and is folded onto ``Phi_i(n) / C(n+1, i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .distributions import SampleProfile
from .numerics import DomainError

__all__ = [
    "IDENTITIES",
    "LinearEstimator",
    "Representation",
    "ValidationReport",
    "adapt_to_larger_sample",
    "apply_identity",
    "initial_representation",
    "instantiate",
    "minimal_bias_representation",
    "shift_representation",
    "validate_representation",
]

Coef = Union[float, Fraction]
Key = Tuple[int, int]

IDENTITIES = ("split", "down", "up-minus", "left-up")
_ALIASES = {1: "split", 2: "down", 3: "up-minus", 4: "left-up"}

#: Coefficients below this magnitude are dropped after a rewrite.
DROP_BELOW = 1e-14

TERM_CAP = 20


def _is_zero(c: Coef) -> bool:
    if isinstance(c, Fraction):
        return c == 0
    return abs(c) < DROP_BELOW


def _clean(coeffs: Mapping[Key, Coef]) -> Dict[Key, Coef]:
    return {key: c for key, c in sorted(coeffs.items()) if not _is_zero(c)}


class Representation:
    """Immutable sparse table ``alpha[i, j]`` for ``E[M_k]`` at size ``n``."""

    __slots__ = ("n", "k", "_coeffs", "_hash")

    def __init__(self, n: int, k: int, coeffs: Mapping[Key, Coef]):
        if not 0 <= k <= n:
            raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
        for (i, j) in coeffs:
            if not 1 <= i <= j <= n + 1:
                raise DomainError(f"index ({i}, {j}) outside 1 <= i <= j <= {n + 1}")
        self.n = n
        self.k = k
        self._coeffs = MappingProxyType(_clean(coeffs))
        self._hash = None

    def __reduce__(self):
        return (Representation, (self.n, self.k, dict(self._coeffs)))

    @property
    def coeffs(self) -> Mapping[Key, Coef]:
        return self._coeffs

    @property
    def term_count(self) -> int:
        return len(self._coeffs)

    @property
    def exact(self) -> bool:
        return all(isinstance(c, (Fraction, int)) for c in self._coeffs.values())

    def scaled(self, factor: Coef) -> "Representation":
        return Representation(self.n, self.k, {key: c * factor for key, c in self._coeffs.items()})

    def plus(self, other: "Representation") -> "Representation":
        """Coefficient-wise sum; represents the sum of the two targets."""
        if (self.n, self.k) != (other.n, other.k):
            raise DomainError("representations differ in n or k")
        out = dict(self._coeffs)
        for key, c in other._coeffs.items():
            out[key] = out.get(key, 0) + c
        return Representation(self.n, self.k, out)

    def to_exact(self) -> "Representation":
        return Representation(self.n, self.k, {key: Fraction(c) for key, c in self._coeffs.items()})

    def key(self) -> tuple:
        return (self.n, self.k, tuple(self._coeffs.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, Representation) and self.key() == other.key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"({i},{j}): {c!r}" for (i, j), c in self._coeffs.items())
        return f"Representation(n={self.n}, k={self.k}, {{{body}}})"

    # text format: "n k" header, then "i j coefficient" lines

    def to_text(self) -> str:
        lines = [f"{self.n} {self.k}"]
        lines += [f"{i} {j} {float(c):.17g}" for (i, j), c in self._coeffs.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Representation":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise DomainError("representation text must start with an 'n k' header")
        n, k = int(rows[0][0]), int(rows[0][1])
        coeffs: Dict[Key, Coef] = {}
        for row in rows[1:]:
            if len(row) != 3:
                raise DomainError(f"malformed term line {' '.join(row)!r}")
            key = (int(row[0]), int(row[1]))
            coeffs[key] = coeffs.get(key, 0.0) + float(row[2])
        return cls(n, k, coeffs)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Representation":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class LinearEstimator:
    """``sum_{i,j} beta[i, j] * Phi_i(j)`` over prefixes of a sample of size ``n``.

    Attributes
    ----------
    n : int
        Sample size the estimator is defined for.
    k : int
        Target frequency.
    betas : mapping
        ``(i, j) -> beta`` with ``1 <= i <= j <= n``.
    """

    n: int
    k: int
    betas: Mapping[Key, Coef] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (i, j), b in sorted(self.betas.items()):
            if not 1 <= i <= j <= self.n:
                raise DomainError(f"estimator index ({i}, {j}) outside 1 <= i <= j <= {self.n}")
            if not isinstance(b, Fraction) and not math.isfinite(b):
                raise DomainError(f"non-finite coefficient at ({i}, {j})")
            if b != 0:
                clean[(i, j)] = b
        object.__setattr__(self, "betas", MappingProxyType(clean))

    def __reduce__(self):
        return (LinearEstimator, (self.n, self.k, dict(self.betas)))

    @classmethod
    def good_turing(cls, n: int, k: int, variant: str = "standard") -> "LinearEstimator":
        if not 0 <= k < n:
            raise DomainError(f"Good-Turing needs 0 <= k < n, got k={k}, n={n}")
        denom = n if variant == "standard" else n - k
        return cls(n, k, {(k + 1, n): Fraction(k + 1, denom)})

    @classmethod
    def minimal_bias(cls, n: int, k: int) -> "LinearEstimator":
        return instantiate(minimal_bias_representation(n, k))

    @property
    def term_count(self) -> int:
        return len(self.betas)

    def evaluate(self, profile: SampleProfile):
        """Apply to a sample; exact when every coefficient is a Fraction."""
        if profile.n != self.n:
            raise DomainError(f"estimator is for n={self.n}, sample has n={profile.n}")
        if all(isinstance(b, Fraction) for b in self.betas.values()):
            return sum((b * profile.phi(i, j) for (i, j), b in self.betas.items()), Fraction(0))
        return math.fsum(float(b) * profile.phi(i, j) for (i, j), b in self.betas.items())

    def as_float(self) -> "LinearEstimator":
        return LinearEstimator(self.n, self.k, {key: float(b) for key, b in self.betas.items()})

    def scaled(self, factor: Coef) -> "LinearEstimator":
        return LinearEstimator(self.n, self.k, {key: b * factor for key, b in self.betas.items()})

    def plus(self, other: "LinearEstimator") -> "LinearEstimator":
        out = dict(self.betas)
        for key, b in other.betas.items():
            out[key] = out.get(key, 0) + b
        return LinearEstimator(self.n, self.k, out)

    def canonical_key(self) -> tuple:
        """Hashable key, rounded to 15 significant digits for float tables."""
        return (self.n, self.k) + tuple(
            (i, j, b if isinstance(b, Fraction) else float(f"{b:.15g}")) for (i, j), b in self.betas.items()
        )


def initial_representation(n: int, k: int) -> Representation:
    """``alpha[k+1, n+1] = C(n, k)``, i.e. ``E[M_k] = C(n,k) g_{k+1}(n+1)``."""
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    return Representation(n, k, {(k + 1, n + 1): Fraction(math.comb(n, k))})


def _identity_name(identity) -> str:
    name = _ALIASES.get(identity, identity)
    if name not in IDENTITIES:
        raise DomainError(f"unknown identity {identity!r}")
    return name


def apply_identity(rep: Representation, identity, target: Key, delta: Optional[Coef] = None) -> Representation:
    """Rewrite the coefficient at ``target`` with one of the identities.

    Parameters
    ----------
    identity : {"split", "down", "up-minus", "left-up"} or 1..4
    target : (i, j)
        A term with a non-zero coefficient.
    delta : float or Fraction, optional
        Share of the coefficient to rewrite, in ``(0, 1)``; this is the
        split followed by a rewrite of one part.  ``None`` rewrites all of it.

    Raises
    ------
    DomainError
        If the target is empty, the rewrite leaves ``1 <= i <= j <= n+1``,
        or it would place weight on ``g_{n+1}(n+1)``, which no sample
        statistic estimates.
    """
    name = _identity_name(identity)
    coeffs = dict(rep.coeffs)
    if target not in coeffs:
        raise DomainError(f"target {target} has no coefficient")
    if delta is not None and not 0 < delta < 1:
        raise DomainError("delta must lie strictly between 0 and 1")
    if name == "split":
        return rep
    i, j = target
    n = rep.n
    if name == "down":
        plus, minus = [(i, j + 1), (i + 1, j + 1)], []
        ok = j + 1 <= n + 1
    elif name == "up-minus":
        plus, minus = [(i, j - 1)], [(i + 1, j)]
        ok = j - 1 >= i
    else:
        plus, minus = [(i - 1, j - 1)], [(i - 1, j)]
        ok = i >= 2
    if not ok:
        raise DomainError(f"identity {name!r} leaves the index domain at {target}")
    if (n + 1, n + 1) in plus + minus:
        raise DomainError(f"identity {name!r} at {target} reaches g_(n+1)(n+1)")
    amount = coeffs[target] if delta is None else coeffs[target] * delta
    coeffs[target] = coeffs[target] - amount
    for key in plus:
        coeffs[key] = coeffs.get(key, 0) + amount
    for key in minus:
        coeffs[key] = coeffs.get(key, 0) - amount
    return Representation(n, rep.k, coeffs)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the linear constraint check.

    ``violations`` lists ``(row, value, target)`` for every failing row.
    """

    valid: bool
    violations: Tuple[Tuple[int, Coef, int], ...] = ()

    def __bool__(self) -> bool:
        return self.valid


def validate_representation(rep: Representation, rel_tol: float = 1e-8, abs_tol: float = 1e-10) -> ValidationReport:
    """Check that ``rep`` sums to ``E[M_k]`` for every distribution.

    For each row ``r = 1..n+1`` the table must satisfy
    ``sum alpha[i, j] C(n+1-j, r-i) = C(n, k) [r == k+1]``.  Rows are
    checked exactly for Fraction tables; float tables use ``rel_tol``
    relative to ``C(n, k)`` on the target row and ``abs_tol`` elsewhere.
    """
    n, k = rep.n, rep.k
    exact = rep.exact
    cnk = math.comb(n, k)
    rows: Dict[int, list] = {}
    for (i, j), a in rep.coeffs.items():
        width = n + 1 - j
        for r in range(i, i + width + 1):
            rows.setdefault(r, []).append(math.comb(width, r - i) * a)
    violations = []
    for r in range(1, n + 2):
        target = cnk if r == k + 1 else 0
        terms = rows.get(r, [])
        if exact:
            value = sum(terms, Fraction(0))
            if value != target:
                violations.append((r, value, target))
            continue
        value = math.fsum(float(t) for t in terms)
        tol = rel_tol * cnk if target else abs_tol
        if not abs(value - target) <= tol:
            violations.append((r, value, target))
    return ValidationReport(not violations, tuple(violations))


def instantiate(rep: Representation, fold_size: Optional[int] = None) -> LinearEstimator:
    """Replace ``g_i(j)`` with ``Phi_i(j) / C(j, i)``.

    Column ``n + 1`` contributes ``alpha[i, n+1] / C(fold_size, i)`` to the
    coefficient of ``Phi_i(n)``; ``fold_size`` defaults to ``n + 1``.
    ``g_{n+1}(n+1)`` has no observable counterpart and is dropped.
    """
    n = rep.n
    fold = n + 1 if fold_size is None else fold_size
    betas: Dict[Key, Coef] = {}
    for (i, j), a in rep.coeffs.items():
        if j <= n:
            key, div = (i, j), math.comb(j, i)
        elif i <= n:
            key, div = (i, n), math.comb(fold, i)
        else:
            continue
        betas[key] = betas.get(key, 0) + a / div
    return LinearEstimator(n, rep.k, betas)


def minimal_bias_representation(n: int, k: int) -> Representation:
    """The alternating-series representation of ``E[M_k]``.

    ``alpha[k+i, n] = (-1)**(i-1) C(n, k)`` for ``i = 1..n-k`` plus the
    unobservable remainder ``alpha[n+1, n+1] = (-1)**(n-k) C(n, k)``.  It
    instantiates to the minimal-bias estimator; the term count may exceed
    the evolutionary search's cap.
    """
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    c = math.comb(n, k)
    coeffs: Dict[Key, Coef] = {(k + i, n): Fraction((-1) ** (i - 1) * c) for i in range(1, n - k + 1)}
    coeffs[(n + 1, n + 1)] = Fraction((-1) ** (n - k) * c)
    return Representation(n, k, coeffs)


def shift_representation(rep: Representation, m: int) -> Representation:
    """Move every column ``j`` to ``j + (m - n)`` to target a size-``m`` sample.

    For ``k > 0`` the coefficients are first scaled by ``C(m,k)/C(n,k)``.
    The result satisfies the size-``m`` constraints whenever ``rep``
    satisfies the size-``n`` ones.
    """
    n, k = rep.n, rep.k
    if m < n:
        raise DomainError(f"cannot adapt from n={n} down to m={m}")
    shift = m - n
    if k == 0:
        factor: Coef = 1
    elif rep.exact:
        factor = Fraction(math.comb(m, k), math.comb(n, k))
    else:
        factor = math.comb(m, k) / math.comb(n, k)
    return Representation(m, k, {(i, j + shift): a * factor for (i, j), a in rep.coeffs.items()})


def adapt_to_larger_sample(rep: Representation, m: int, fold: str = "shifted") -> LinearEstimator:
    """Estimator for a sample of size ``m >= n`` from a size-``n`` representation.

    ``fold="shifted"`` instantiates the shifted table at size ``m``, so the
    unobservable column divides by ``C(m+1, i)``.  ``fold="verbatim"``
    keeps the original divisor ``C(n+1, i)``.
    """
    shifted = shift_representation(rep, m)
    if fold == "shifted":
        return instantiate(shifted)
    if fold == "verbatim":
        return instantiate(shifted, fold_size=rep.n + 1)
    raise DomainError(f"unknown fold rule {fold!r}")
