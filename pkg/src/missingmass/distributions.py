"""Benchmark distributions, seeded sampling and prefix frequency profiles."""

from __future__ import annotations

import csv
import math
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._backend import kernels
from .numerics import DomainError

__all__ = [
    "BENCHMARK_DISTRIBUTIONS",
    "DiscreteDistribution",
    "SampleProfile",
    "benchmark_distribution",
    "draw_sample",
    "extend_sample",
    "make_distribution",
    "make_rng",
    "read_sample_file",
    "realized_mass",
    "write_sample_file",
]

_SUM_TOL = 1e-12


class DiscreteDistribution:
    """A probability vector over classes ``0..S-1``.

    Probabilities are either floats or, for exact oracle work, all
    :class:`~fractions.Fraction`.

    Parameters
    ----------
    probabilities : sequence
        One strictly positive entry per class, summing to one.
    name : str, optional
        Label used in reports.
    min_support : int
        Smallest accepted number of classes.  Plug-in distributions
        estimated from a degenerate sample may have a single class.
    """

    def __init__(self, probabilities, name: str = "custom", min_support: int = 2):
        probs = list(probabilities)
        if len(probs) < min_support or not probs:
            raise DomainError(f"a distribution needs at least {max(min_support, 1)} classes")
        self.exact = all(isinstance(p, Fraction) for p in probs)
        if self.exact:
            if any(p <= 0 for p in probs) or sum(probs) != 1:
                raise DomainError("exact probabilities must be positive and sum to 1")
            self._probs = tuple(probs)
            self.probabilities = np.array([float(p) for p in probs])
        else:
            arr = np.asarray(probs, dtype=float)
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise DomainError("probabilities must be finite and strictly positive")
            if abs(math.fsum(arr) - 1.0) > _SUM_TOL:
                raise DomainError(f"probabilities sum to {math.fsum(arr)!r}, not 1")
            self._probs = tuple(float(p) for p in arr)
            self.probabilities = arr
        self.probabilities.setflags(write=False)
        self.name = name
        self._groups: Optional[Tuple[list, list]] = None

    @property
    def S(self) -> int:
        return len(self._probs)

    @property
    def p_max(self):
        return max(self._probs)

    @property
    def p_min(self):
        return min(self._probs)

    def values(self) -> tuple:
        """Probabilities in their native type (float or Fraction)."""
        return self._probs

    def groups(self) -> Tuple[list, list]:
        """Distinct probabilities and how many classes share each.

        Grouping collapses the ``S**2`` pair loops of the moment kernels to
        ``G**2``; uniform and half-and-half have ``G <= 2``.
        """
        if self._groups is None:
            tally: Dict = {}
            for p in self._probs:
                tally[p] = tally.get(p, 0) + 1
            keys = sorted(tally, reverse=True)
            self._groups = (keys, [tally[k] for k in keys])
        return self._groups

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probabilities)
        c[-1] = 1.0
        return c

    def __len__(self) -> int:
        return self.S

    def __repr__(self) -> str:
        return f"DiscreteDistribution(name={self.name!r}, S={self.S})"


def make_distribution(kind: str, support: int, param: Optional[float] = None,
                      seed: Optional[int] = None, exact: bool = False) -> DiscreteDistribution:
    """Build one of the benchmark distribution families.

    Parameters
    ----------
    kind : {"uniform", "half-and-half", "zipf", "dirichlet"}
    support : int
        Number of classes ``S >= 2``.
    param : float, optional
        Zipf exponent ``s`` or symmetric Dirichlet concentration ``a``.
    seed : int, optional
        Seed of the Dirichlet draw; part of the distribution's identity.
    exact : bool
        Return Fraction probabilities (uniform, half-and-half and integer
        Zipf exponents only).
    """
    S = int(support)
    if S < 2:
        raise DomainError("support must be at least 2")
    kind = kind.lower().replace("_", "-").replace("&", "-and-")
    if kind == "uniform":
        w = [Fraction(1)] * S
        name = "uniform"
    elif kind in ("half-and-half", "halfhalf", "half"):
        big = (S + 1) // 2
        w = [Fraction(3)] * big + [Fraction(1)] * (S - big)
        name = "half&half"
    elif kind == "zipf":
        s = 1.0 if param is None else float(param)
        if not s > 0:
            raise DomainError("zipf exponent must be positive")
        if exact:
            if s != int(s):
                raise DomainError("exact zipf needs an integer exponent")
            w = [Fraction(1, x ** int(s)) for x in range(1, S + 1)]
        else:
            w = [x ** (-s) for x in range(1, S + 1)]
        name = f"zipf-{param if param is not None else 1:g}"
    elif kind in ("dirichlet", "dirichlet-prior", "diri"):
        a = 1.0 if param is None else float(param)
        if not a > 0:
            raise DomainError("dirichlet concentration must be positive")
        if exact:
            raise DomainError("dirichlet draws cannot be exact")
        g = make_rng(0 if seed is None else seed).gamma(a, 1.0, size=S)
        # A tiny concentration can produce exact zeros; keep the support.
        g = np.maximum(g, np.finfo(float).tiny)
        w = list(g)
        name = f"diri-{a:g}"
    else:
        raise DomainError(f"unknown distribution kind {kind!r}")
    if exact:
        total = sum(w)
        return DiscreteDistribution([x / total for x in w], name)
    arr = np.array([float(x) for x in w])
    arr = arr / math.fsum(arr)
    return DiscreteDistribution(arr, name)


#: The six families of the experiments: name -> (kind, parameter).
BENCHMARK_DISTRIBUTIONS = {
    "uniform": ("uniform", None),
    "half&half": ("half-and-half", None),
    "zipf-1": ("zipf", 1.0),
    "zipf-0.5": ("zipf", 0.5),
    "diri-1": ("dirichlet", 1.0),
    "diri-0.5": ("dirichlet", 0.5),
}


def benchmark_distribution(name: str, support: int, seed: Optional[int] = None,
                           exact: bool = False) -> DiscreteDistribution:
    """Build a distribution from its benchmark name (e.g. ``"zipf-0.5"``)."""
    try:
        kind, param = BENCHMARK_DISTRIBUTIONS[name]
    except KeyError:
        raise DomainError(f"unknown benchmark distribution {name!r}") from None
    return make_distribution(kind, support, param, seed=seed, exact=exact)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox generator; reproducible across platforms."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


class SampleProfile:
    """A drawn sequence with frequency profiles over every prefix.

    Parameters
    ----------
    sequence : array_like of int
        Class indices ``X_1..X_n``.
    prefix_available : bool
        False for samples ingested as counts, whose order is arbitrary and
        whose prefix profiles are therefore meaningless.
    """

    def __init__(self, sequence, prefix_available: bool = True, labels: Optional[List[str]] = None):
        seq = np.ascontiguousarray(sequence, dtype=np.int64)
        if seq.ndim != 1:
            raise DomainError("sequence must be one-dimensional")
        if seq.size and seq.min() < 0:
            raise DomainError("class indices must be non-negative")
        seq.setflags(write=False)
        self.sequence = seq
        self.prefix_available = prefix_available
        self.labels = labels
        # c_t: occurrences of X_t in X_1..X_t.  Then
        # Phi_i(j) = #{t <= j: c_t = i} - #{t <= j: c_t = i + 1}.
        self._steps = kernels.step_counts(seq)
        self._positions: Dict[int, np.ndarray] = {}
        self._counts = np.bincount(seq) if seq.size else np.zeros(0, dtype=np.int64)
        self._phi_full = np.bincount(self._counts[self._counts > 0]) if seq.size else np.zeros(1, dtype=np.int64)

    @property
    def n(self) -> int:
        return int(self.sequence.shape[0])

    def class_counts(self) -> np.ndarray:
        """``N_x`` for classes ``0..max index``."""
        return self._counts

    def _pos(self, i: int) -> np.ndarray:
        p = self._positions.get(i)
        if p is None:
            p = np.flatnonzero(self._steps == i)
            self._positions[i] = p
        return p

    def phi(self, k: int, j: Optional[int] = None) -> int:
        """Number of classes seen exactly ``k`` times in the first ``j`` draws."""
        n = self.n
        j = n if j is None else int(j)
        if not 0 <= j <= n:
            raise DomainError(f"prefix length {j} outside 0..{n}")
        if k < 1:
            raise DomainError("phi is defined for k >= 1")
        if j == n:
            return int(self._phi_full[k]) if k < len(self._phi_full) else 0
        if not self.prefix_available:
            raise DomainError("prefix profiles are unavailable for count-ingested samples")
        if k > j:
            return 0
        return int(np.searchsorted(self._pos(k), j) - np.searchsorted(self._pos(k + 1), j))

    def prefix_counts(self, j: int) -> Dict[int, int]:
        """The map ``k -> Phi_k(j)`` restricted to non-zero entries."""
        if j == self.n:
            return {k: int(c) for k, c in enumerate(self._phi_full) if k >= 1 and c}
        if not self.prefix_available:
            raise DomainError("prefix profiles are unavailable for count-ingested samples")
        counts = np.bincount(self.sequence[:j])
        phi = np.bincount(counts[counts > 0]) if j else np.zeros(1, dtype=np.int64)
        return {k: int(c) for k, c in enumerate(phi) if k >= 1 and c}

    def distinct(self, j: Optional[int] = None) -> int:
        j = self.n if j is None else j
        return len(np.unique(self.sequence[:j]))

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "SampleProfile":
        """Intern tokens to indices in order of first appearance."""
        index: Dict[str, int] = {}
        seq = [index.setdefault(t, len(index)) for t in tokens]
        labels = sorted(index, key=index.get)
        return cls(np.array(seq, dtype=np.int64), labels=labels)

    @classmethod
    def from_counts(cls, counts: Dict[str, int]) -> "SampleProfile":
        """Expand ``class -> count`` to a canonical sequence without prefixes."""
        labels = sorted(counts)
        seq = np.repeat(np.arange(len(labels)), [int(counts[c]) for c in labels])
        return cls(seq, prefix_available=False, labels=labels)

    def __repr__(self) -> str:
        return f"SampleProfile(n={self.n}, distinct={self.distinct()})"


def draw_sample(dist: DiscreteDistribution, n: int, seed: int) -> SampleProfile:
    """Draw ``n`` i.i.d. classes; identical inputs give identical profiles."""
    if n < 1:
        raise DomainError("sample size must be at least 1")
    rng = make_rng(seed)
    return SampleProfile(_draw(dist, n, rng))


def _draw(dist: DiscreteDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    idx = np.searchsorted(dist.cdf(), u, side="right")
    return np.minimum(idx, dist.S - 1)


def extend_sample(profile: SampleProfile, dist: DiscreteDistribution, extra: int, seed: int) -> SampleProfile:
    """Append ``extra`` further draws, keeping the original prefix."""
    rng = make_rng(seed)
    return SampleProfile(np.concatenate([profile.sequence, _draw(dist, extra, rng)]))


def realized_mass(dist: DiscreteDistribution, profile: SampleProfile, k: int):
    """``sum_x p_x 1(N_x = k)``; for ``k = 0`` the realized missing mass."""
    if not 0 <= k <= profile.n:
        raise DomainError(f"k={k} outside 0..{profile.n}")
    counts = np.zeros(dist.S, dtype=np.int64)
    c = profile.class_counts()
    if len(c) > dist.S:
        raise DomainError("sample contains classes outside the distribution's support")
    counts[: len(c)] = c
    probs = dist.values()
    chosen = [probs[x] for x in np.flatnonzero(counts == k)]
    if dist.exact:
        return sum(chosen, Fraction(0))
    return math.fsum(chosen)


def read_sample_file(path: Union[str, Path]) -> SampleProfile:
    """Read a token-per-line file or a ``class,count`` CSV."""
    path = Path(path)
    text = path.read_text().splitlines()
    first = text[0].strip().lower() if text else ""
    if first.replace(" ", "") == "class,count":
        counts: Dict[str, int] = {}
        for row in csv.DictReader(text):
            c = int(row["count"])
            if c < 0:
                raise DomainError(f"negative count for class {row['class']!r}")
            if c:
                counts[row["class"]] = counts.get(row["class"], 0) + c
        return SampleProfile.from_counts(counts)
    return SampleProfile.from_tokens([t.strip() for t in text if t.strip()])


def write_sample_file(profile: SampleProfile, path: Union[str, Path]) -> None:
    """Write the sequence as one token per line."""
    labels = profile.labels
    with open(path, "w") as fh:
        for x in profile.sequence:
            fh.write(f"{labels[x] if labels else x}\n")
