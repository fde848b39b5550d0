"""Evolutionary search for low-MSE estimator representations.

Individuals are representations of ``E[M_k]``; fitness is the MSE of the
instantiated estimator under the hybrid plug-in distribution of the
sample.  Each generation tournament-selects ``m`` parents, mutates them,
and adds the initial representation and the three fittest individuals of
the previous generation.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .distributions import SampleProfile
from .moments import MomentContext, estimator_mse, plugin_context
from .numerics import DomainError
from .representations import (
    IDENTITIES,
    LinearEstimator,
    Representation,
    apply_identity,
    initial_representation,
    instantiate,
)

__all__ = [
    "EvolutionResult",
    "GaConfig",
    "Individual",
    "evolve",
    "mutate",
    "individual_rng",
]

EXTENSION_RULES = ("verbatim", "stagnation")
_REWRITES = IDENTITIES[1:]


@dataclass(frozen=True)
class GaConfig:
    """Search hyperparameters.

    ``extension_rule`` selects how the generation limit grows.  With
    ``verbatim`` the limit is extended at each checkpoint when the best
    fitness equals the initial one or when ``f_best > improvement_factor *
    f_g``; since ``f_g <= f_best`` always, this extends every time and the
    run lasts ``max_generations``.  ``stagnation`` extends only while
    ``f_g < improvement_factor * f_best``, i.e. while recent progress is
    substantial.
    """

    generations_G: int = 100
    max_generations: int = 2000
    mutant_size_m: int = 40
    tournament_t: int = 3
    elite_count: int = 3
    term_cap: int = 20
    improvement_factor: float = 0.95
    seed: int = 0
    extension_rule: str = "verbatim"
    max_mutation_retries: int = 20

    def __post_init__(self):
        for name in ("generations_G", "max_generations", "mutant_size_m", "tournament_t",
                     "elite_count", "term_cap", "max_mutation_retries"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive")
        if not 0 < self.improvement_factor < 1:
            raise DomainError("improvement_factor must lie in (0, 1)")
        if self.extension_rule not in EXTENSION_RULES:
            raise DomainError(f"extension_rule must be one of {EXTENSION_RULES}")
        if self.elite_count > self.mutant_size_m + 1:
            raise DomainError("elite_count exceeds the population size")


@dataclass(frozen=True)
class Individual:
    representation: Representation
    fitness: float
    lineage_id: int

    def sort_key(self) -> tuple:
        return (self.fitness, self.representation.term_count, self.lineage_id)


def individual_rng(seed: int, generation: int, slot: int) -> np.random.Generator:
    """Independent Philox stream for one slot of one generation."""
    # Distinct high counter words give non-overlapping streams under one key.
    key = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, slot, generation]))


def _mutate_rep(rep: Representation, rng: np.random.Generator, term_cap: int, retries: int,
                delta: Optional[float] = None, identity: Optional[str] = None,
                target: Optional[Tuple[int, int]] = None) -> Representation:
    keys = list(rep.coeffs)
    for _ in range(retries):
        tgt = target if target is not None else keys[int(rng.integers(len(keys)))]
        d = delta
        while d is None or not 0.0 < d < 1.0:
            d = float(rng.random())
        ident = identity if identity is not None else _REWRITES[int(rng.integers(len(_REWRITES)))]
        try:
            child = apply_identity(rep, ident, tgt, d)
        except DomainError:
            continue
        if child.term_count <= term_cap:
            return child
    return rep


def mutate(ind: Individual, rng: np.random.Generator, lineage_id: int = -1, term_cap: int = 20,
           retries: int = 20, delta: Optional[float] = None, identity: Optional[str] = None,
           target: Optional[Tuple[int, int]] = None) -> Individual:
    """Split a random term with a uniform share and rewrite one part.

    Invalid or over-long results are retried ``retries`` times; after that
    the parent's representation is returned.  ``delta``, ``identity`` and
    ``target`` pin the random choices.  The returned individual's fitness
    is ``nan`` until it is evaluated.
    """
    rep = _mutate_rep(ind.representation, rng, term_cap, retries, delta, identity, target)
    return Individual(rep, math.nan, lineage_id)


@dataclass
class EvolutionResult:
    best: Individual
    history: List[float]
    initial_fitness: float
    generations_run: int
    evaluations: int
    wall_clock: float
    config: GaConfig
    extension_events: List[int] = field(default_factory=list)

    def manifest(self) -> dict:
        return {
            "config": asdict(self.config),
            "seed": self.config.seed,
            "extension_rule": self.config.extension_rule,
            "generations_run": self.generations_run,
            "extension_events": self.extension_events,
            "initial_fitness": self.initial_fitness,
            "best_fitness": self.best.fitness,
            "best_term_count": self.best.representation.term_count,
            "best_representation": self.best.representation.to_text(),
            "history": self.history,
            "fitness_evaluations": self.evaluations,
            "wall_clock_seconds": self.wall_clock,
        }

    def write_manifest(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.manifest(), fh, indent=2)


#: Largest sample size scored through the dense moment tables.
DENSE_LIMIT = 60


class _Fitness:
    """Estimated MSE with a cache keyed by the canonical coefficient table."""

    def __init__(self, ctx: MomentContext, k: int):
        self.ctx = ctx
        self.k = k
        self.n = ctx.n
        self.cache: Dict[tuple, float] = {}
        self.evaluations = 0
        self.dense = not ctx.exact and ctx.n <= DENSE_LIMIT
        self.index = ctx.dense_index() if self.dense else None
        n = ctx.n
        self.divisor = {(i, j): float(math.comb(j, i)) for j in range(1, n + 1) for i in range(1, j + 1)}
        self.divisor.update({(i, n + 1): float(math.comb(n + 1, i)) for i in range(1, n + 1)})

    def betas(self, rep: Representation) -> Dict[Tuple[int, int], float]:
        # Same fold as ``instantiate``, without building an estimator object.
        n = self.n
        out: Dict[Tuple[int, int], float] = {}
        for (i, j), a in rep.coeffs.items():
            if i > n:
                continue
            cell = (i, j) if j <= n else (i, n)
            out[cell] = out.get(cell, 0.0) + float(a) / self.divisor[(i, j)]
        return out

    def __call__(self, rep: Representation) -> float:
        betas = self.betas(rep)
        key = tuple(sorted(item for item in betas.items() if item[1] != 0.0))
        val = self.cache.get(key)
        if val is None:
            self.evaluations += 1
            if not key:
                est = LinearEstimator(self.n, self.k, {})
                val = float(estimator_mse(self.ctx, est, self.k).mse)
            elif self.dense:
                pos = np.fromiter((self.index[c] for c, _ in key), dtype=np.int64, count=len(key))
                vals = np.fromiter((b for _, b in key), dtype=float, count=len(key))
                val = self.ctx.fast_mse(pos, vals, self.k)
            else:
                est = LinearEstimator(self.n, self.k, dict(key))
                val = float(estimator_mse(self.ctx, est, self.k).mse)
            if not math.isfinite(val):
                val = math.inf
            self.cache[key] = val
        return val


def evolve(profile: SampleProfile, k: int, config: GaConfig = GaConfig(),
           ctx: Optional[MomentContext] = None,
           map_fn: Callable = map) -> EvolutionResult:
    """Run the search and return the fittest individual ever seen.

    Parameters
    ----------
    profile : SampleProfile
        The observed sample (``n >= 2``).
    k : int
        Target frequency.
    config : GaConfig
    ctx : MomentContext, optional
        Context defining fitness; defaults to the hybrid plug-in context.
    map_fn : callable
        ``map``-like function used to score a generation; results do not
        depend on it because fitness is a pure function of the individual.
    """
    n = profile.n
    if n < 2:
        raise DomainError("evolution needs n >= 2")
    if not 0 <= k < n + 1:
        raise DomainError(f"need 0 <= k <= n, got k={k}")
    started = time.perf_counter()
    if ctx is None:
        ctx = plugin_context(profile)
    fitness = _Fitness(ctx, k)
    r0 = initial_representation(n, k)
    r0 = Representation(n, k, {key: float(c) for key, c in r0.coeffs.items()})
    f0 = fitness(r0)
    root = Individual(r0, f0, 0)
    population = [root]
    best = root
    f_best = f0
    history: List[float] = []
    next_id = 1
    limit = config.generations_G
    extensions: List[int] = []
    g = 0
    while g < limit:
        g += 1
        sel_rng = individual_rng(config.seed, g, 0)
        parents = []
        for _ in range(config.mutant_size_m):
            picks = sel_rng.integers(len(population), size=config.tournament_t)
            parents.append(min((population[int(p)] for p in picks), key=Individual.sort_key))
        children = []
        for slot, parent in enumerate(parents, start=1):
            rng = individual_rng(config.seed, g, slot)
            children.append(mutate(parent, rng, next_id, config.term_cap, config.max_mutation_retries))
            next_id += 1
        scores = list(map_fn(fitness, [c.representation for c in children]))
        children = [Individual(c.representation, s, c.lineage_id) for c, s in zip(children, scores)]
        elite = sorted(population, key=Individual.sort_key)[: config.elite_count]
        population = children + [root] + elite
        gen_best = min(population, key=Individual.sort_key)
        f_g = gen_best.fitness
        history.append(f_g)
        if gen_best.sort_key() < best.sort_key():
            best = gen_best
        if g == limit and limit < config.max_generations:
            if config.extension_rule == "verbatim":
                extend = f_g == f0 or f_best > config.improvement_factor * f_g
            else:
                extend = f_g == f0 or f_g < config.improvement_factor * f_best
            if extend:
                limit = min(limit + config.generations_G, config.max_generations)
                f_best = f_g
                extensions.append(g)
    return EvolutionResult(
        best=best,
        history=history,
        initial_fitness=f0,
        generations_run=g,
        evaluations=fitness.evaluations,
        wall_clock=time.perf_counter() - started,
        config=config,
        extension_events=extensions,
    )
