"""Exact second moments of prefix frequency counts and of the mass ``M_k``.

All second moments reduce to the pair sum

    E[sum_x sum_y w(x) w'(y) 1(N_x(a) = u) 1(N_y(b) = v)],   a >= b,

computed by the kernel module over probability groups.  A
:class:`MomentContext` caches those sums so that scoring many estimators
under one distribution only evaluates each covariance once.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Tuple, Union

import numpy as np

from . import _kernels_py
from ._backend import kernels
from .distributions import DiscreteDistribution, SampleProfile
from .estimators import hybrid_phat
from .ground_truth import expected_mass, power_sum
from .numerics import DomainError, binomial_ratio_chain
from .representations import LinearEstimator

__all__ = [
    "MomentContext",
    "MseBreakdown",
    "covariance_phi",
    "covariance_phi_mass",
    "estimated_mse",
    "estimator_mse",
    "joint_indicator_expectation",
    "minimal_bias_variance",
    "minimal_bias_variance_bound",
    "plugin_context",
    "variance_phi",
    "variance_mass",
]

Number = Union[float, Fraction]

# Pair-sum flavours: (weight the long-prefix class by p, weight the short one by p).
_PLAIN = (False, False)
_MASS_LONG = (True, False)
_MASS_BOTH = (True, True)


class MomentContext:
    """Cached moments under a fixed distribution and sample size.

    Parameters
    ----------
    dist : DiscreteDistribution
        True or plug-in distribution.  Fraction probabilities switch every
        computation to exact arithmetic.
    n : int
        Sample size; prefixes ``j <= n`` are allowed.
    """

    def __init__(self, dist: DiscreteDistribution, n: int):
        if n < 1:
            raise DomainError("sample size must be positive")
        self.dist = dist
        self.n = n
        self.exact = dist.exact
        self.probs, self.counts = dist.groups()
        self._kernels = _kernels_py if self.exact else kernels
        self._pairs: Dict[tuple, Number] = {}
        self._means: Dict[Tuple[int, int], Number] = {}
        self._mass: Dict[int, Number] = {}
        self._lock = threading.Lock()
        self._dense_index = None

    # first moments

    def mean_phi(self, i: int, j: int) -> Number:
        """``E[Phi_i(j)] = f_i(j)``."""
        key = (i, j)
        val = self._means.get(key)
        if val is None:
            if not 1 <= i <= j:
                val = Fraction(0) if self.exact else 0.0
            else:
                val = math.comb(j, i) * power_sum(self.dist, i, j - i)
                if not self.exact:
                    val = float(val)
            self._means[key] = val
        return val

    def mean_mass(self, k: int) -> Number:
        val = self._mass.get(k)
        if val is None:
            val = expected_mass(self.dist, self.n, k)
            if not self.exact:
                val = float(val)
            self._mass[k] = val
        return val

    # pair sums

    def pair_sums(self, keys: Iterable[tuple], flavour=_PLAIN) -> List[Number]:
        """Pair sums for ``(a, u, b, v)`` keys with ``a >= b``; cached."""
        keys = list(keys)
        missing = sorted({kk for kk in keys if (kk, flavour) not in self._pairs})
        if missing:
            arr = np.array(missing, dtype=np.int64)
            if self.exact:
                vals = [
                    self._kernels.pair_moment(a, u, b, v, self.probs, self.counts, *flavour)
                    for a, u, b, v in missing
                ]
            else:
                vals = self._kernels.pair_moment_batch(
                    arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], self.probs, self.counts, *flavour
                ).tolist()
            with self._lock:
                for kk, val in zip(missing, vals):
                    self._pairs[(kk, flavour)] = val
        return [self._pairs[(kk, flavour)] for kk in keys]

    # dense tables for fast repeated float scoring

    def dense_index(self) -> Dict[Tuple[int, int], int]:
        """Positions of all ``(i, j)``, ``1 <= i <= j <= n``, in the dense tables."""
        self._build_dense()
        return self._dense_index

    def _build_dense(self) -> None:
        if getattr(self, "_dense_index", None) is not None:
            return
        if self.exact:
            raise DomainError("dense tables are float-only")
        cells = [(i, j) for j in range(1, self.n + 1) for i in range(1, j + 1)]
        index = {c: p for p, c in enumerate(cells)}
        N = len(cells)
        rows, cols = np.triu_indices(N)
        ci = np.array(cells, dtype=np.int64)
        i1, j1 = ci[rows, 0], ci[rows, 1]
        i2, j2 = ci[cols, 0], ci[cols, 1]
        swap = j1 < j2
        a = np.where(swap, j2, j1)
        u = np.where(swap, i2, i1)
        b = np.where(swap, j1, j2)
        v = np.where(swap, i1, i2)
        vals = self._kernels.pair_moment_batch(a, u, b, v, self.probs, self.counts, False, False)
        second = np.zeros((N, N))
        second[rows, cols] = vals
        second[cols, rows] = vals
        self._dense_second = second
        self._dense_mean = np.array([self.mean_phi(i, j) for i, j in cells])
        self._dense_cross: Dict[int, np.ndarray] = {}
        self._dense_index = index

    def dense_cross(self, k: int) -> np.ndarray:
        """``E[Phi_i(j) M_k]`` for every dense cell."""
        self._build_dense()
        vec = self._dense_cross.get(k)
        if vec is None:
            cells = list(self._dense_index)
            vec = np.array(self.pair_sums([(self.n, k, j, i) for i, j in cells], _MASS_LONG))
            self._dense_cross[k] = vec
        return vec

    def fast_mse(self, positions: np.ndarray, betas: np.ndarray, k: int) -> float:
        """Float MSE of ``sum betas * Phi`` over dense cells ``positions``."""
        self._build_dense()
        mean_est = float(betas @ self._dense_mean[positions])
        second = float(betas @ self._dense_second[np.ix_(positions, positions)] @ betas)
        cross = float(betas @ self.dense_cross(k)[positions])
        mass_mean = self.mean_mass(k)
        mass_var = variance_mass(self, k)
        bias = mean_est - mass_mean
        variance = second - mean_est * mean_est
        covariance = cross - mean_est * mass_mean
        return max(bias * bias + variance + mass_var - 2 * covariance, bias * bias)

    def clear(self) -> None:
        with self._lock:
            self._pairs.clear()

    @property
    def cache_size(self) -> int:
        return len(self._pairs)


def _order(i: int, j: int, l: int, m: int) -> tuple:
    return (j, i, m, l) if j >= m else (m, l, j, i)


def joint_indicator_expectation(ctx: MomentContext, x: int, j: int, i: int, y: int, n_prime: int, l: int) -> Number:
    """``P(N_x(j) = i and N_y(n') = l)`` for classes ``x`` and ``y``."""
    if min(j, n_prime) < 1:
        raise DomainError("prefix lengths must be positive")
    probs = ctx.dist.values()
    if n_prime > j:
        x, j, i, y, n_prime, l = y, n_prime, l, x, j, i
    return _kernels_py.joint_probability(j, i, n_prime, l, probs[x], probs[y], x == y)


def covariance_phi(ctx: MomentContext, i: int, j: int, l: int, m: int) -> Number:
    """``Cov(Phi_i(j), Phi_l(m))``."""
    (pair,) = ctx.pair_sums([_order(i, j, l, m)])
    return pair - ctx.mean_phi(i, j) * ctx.mean_phi(l, m)


def variance_phi(ctx: MomentContext, i: int, j: int) -> Number:
    """``Var(Phi_i(j)) = f_i(j) - f_i(j)**2 + sum_{x != y} P(N_x(j) = N_y(j) = i)``."""
    if not 1 <= i <= j <= ctx.n:
        raise DomainError(f"need 1 <= i <= j <= n, got i={i}, j={j}")
    return covariance_phi(ctx, i, j, i, j)


def covariance_phi_mass(ctx: MomentContext, i: int, j: int, k: int) -> Number:
    """``Cov(Phi_i(j), M_k)`` with ``M_k`` taken over the full sample."""
    (pair,) = ctx.pair_sums([(ctx.n, k, j, i)], _MASS_LONG)
    return pair - ctx.mean_phi(i, j) * ctx.mean_mass(k)


def variance_mass(ctx: MomentContext, k: int) -> Number:
    """``Var(M_k) = E[sum_x sum_y p_x p_y 1(N_x = k) 1(N_y = k)] - E[M_k]**2``."""
    if not 0 <= k <= ctx.n:
        raise DomainError(f"need 0 <= k <= n, got k={k}")
    (pair,) = ctx.pair_sums([(ctx.n, k, ctx.n, k)], _MASS_BOTH)
    mean = ctx.mean_mass(k)
    return pair - mean * mean


@dataclass(frozen=True)
class MseBreakdown:
    """``mse = bias**2 + variance + mass_variance - 2 * covariance``.

    ``variance`` is that of the estimator, ``covariance`` is
    ``Cov(estimate, M_k)``.
    """

    mse: Number
    bias: Number
    variance: Number
    covariance: Number
    mass_variance: Number


def _sum(values, exact):
    if exact:
        return sum(values, Fraction(0))
    return math.fsum(values)


def estimator_mse(ctx: MomentContext, est: LinearEstimator, k: int) -> MseBreakdown:
    """Exact MSE of a linear estimator of ``M_k`` and its decomposition."""
    if est.n != ctx.n:
        raise DomainError(f"estimator is for n={est.n}, context for n={ctx.n}")
    exact = ctx.exact
    terms = list(est.betas.items())
    if exact:
        betas = [Fraction(b) for _, b in terms]
    else:
        betas = [float(b) for _, b in terms]
    idx = [key for key, _ in terms]
    mean_est = _sum([b * ctx.mean_phi(i, j) for b, (i, j) in zip(betas, idx)], exact)
    bias = mean_est - ctx.mean_mass(k)

    pair_keys = []
    weights = []
    for s in range(len(idx)):
        for t in range(s, len(idx)):
            (i, j), (l, m) = idx[s], idx[t]
            pair_keys.append(_order(i, j, l, m))
            w = betas[s] * betas[t]
            weights.append(w if s == t else 2 * w)
    second = _sum([w * p for w, p in zip(weights, ctx.pair_sums(pair_keys))], exact)
    variance = second - mean_est * mean_est

    cross_pairs = ctx.pair_sums([(ctx.n, k, j, i) for (i, j) in idx], _MASS_LONG)
    cross = _sum([b * p for b, p in zip(betas, cross_pairs)], exact)
    covariance = cross - mean_est * ctx.mean_mass(k)
    mass_var = variance_mass(ctx, k)

    mse = bias * bias + variance + mass_var - 2 * covariance
    if not exact:
        # Each part is a difference of nearly equal second moments; round-off
        # may leave a tiny negative.
        variance = max(variance, 0.0)
        mse = max(mse, bias * bias)
    return MseBreakdown(mse, bias, variance, covariance, mass_var)


def minimal_bias_variance(ctx: MomentContext, k: int) -> Number:
    """``Var`` of the minimal-bias estimator from the ``c_i`` expansion.

    ``sum_i c_i**2 Var(Phi_{k+i}) + sum_{i != j} (-1)**(i+j) c_i c_j
    Cov(Phi_{k+i}, Phi_{k+j})`` with ``c_i = C(n,k)/C(n,k+i)``.
    """
    n = ctx.n
    top = n - k
    if top == 0:
        return Fraction(0) if ctx.exact else 0.0
    if ctx.exact:
        c = [Fraction(math.comb(n, k), math.comb(n, k + i)) for i in range(1, top + 1)]
    else:
        c = binomial_ratio_chain(n, k, top)
    terms = []
    for a in range(top):
        for b in range(a, top):
            cov = covariance_phi(ctx, k + a + 1, n, k + b + 1, n)
            sign = 1 if (a + b) % 2 == 0 else -1
            w = c[a] * c[b] * sign
            terms.append(w * cov if a == b else 2 * w * cov)
    return _sum(terms, ctx.exact)


def minimal_bias_variance_bound(dist: DiscreteDistribution, n: int, k: int) -> float:
    """Upper bound ``c1 * n**(2k+1) * c2**(-n)`` on the minimal-bias variance.

    ``c1 = S (e/k)**(2k)``, read as ``S`` at ``k = 0``, and
    ``c2 = min(1/(1 - p_min), (1 - p_max)/(p_max (1 - p_min)))``.  The
    bound decays in ``n`` only when ``c2 > 1``.
    """
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    probs = [float(p) for p in dist.values() if p > 0]
    p_min, p_max = min(probs), max(probs)
    if p_max >= 1.0:
        return 0.0
    log_c1 = math.log(len(probs)) + (2 * k * (1 - math.log(k)) if k else 0.0)
    log_c2 = min(-math.log1p(-p_min), math.log1p(-p_max) - math.log(p_max) - math.log1p(-p_min))
    log_bound = log_c1 + (2 * k + 1) * math.log(n) - n * log_c2
    return math.exp(log_bound) if log_bound < 709 else math.inf


def estimated_mse(profile: SampleProfile, est: LinearEstimator, k: int, ctx: MomentContext = None) -> float:
    """MSE of ``est`` under the hybrid plug-in distribution of ``profile``.

    Pass ``ctx`` to reuse a context built for the same profile.
    """
    if profile.n < 2:
        raise DomainError("estimated MSE needs n >= 2")
    if ctx is None:
        ctx = plugin_context(profile)
    return float(estimator_mse(ctx, est, k).mse)


def plugin_context(profile: SampleProfile) -> MomentContext:
    """Moment context over the hybrid estimate of the sampling distribution."""
    return MomentContext(hybrid_phat(profile).to_distribution(), profile.n)
