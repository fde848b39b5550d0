"""Experiment orchestration: bias curves, MSE comparisons, GA studies.

Every experiment is described by an :class:`ExperimentSpec` and produces
a list of :class:`ResultRow`.  Random streams derive from the master seed
through :func:`split_seed`, so a row depends only on the spec and not on
the worker count or execution order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .distributions import (
    BENCHMARK_DISTRIBUTIONS,
    DiscreteDistribution,
    draw_sample,
    extend_sample,
    make_distribution,
    realized_mass,
)
from .ga import GaConfig, evolve
from .ground_truth import analytic_bias, expected_mass
from .moments import MomentContext, estimator_mse
from .numerics import DomainError, LogWeight, binomial_ratio_chain
from .oracle import enumerate_outcomes, exact_expectation, realized_mass_of
from .representations import (
    LinearEstimator,
    adapt_to_larger_sample,
    instantiate,
    shift_representation,
    validate_representation,
)

__all__ = [
    "METRICS",
    "MODES",
    "ExperimentSpec",
    "ResultRow",
    "SpecError",
    "monte_carlo_mse",
    "read_rows",
    "rows_to_columns",
    "run_adapt_compare",
    "run_bias_curve",
    "run_evolve_compare",
    "run_experiment",
    "run_mse_compare",
    "run_oracle_audit",
    "split_seed",
    "vargha_delaney_a12",
    "write_rows",
]

MODES = ("bias-curve", "mse-compare", "evolve-compare", "adapt-compare", "oracle-audit")
METRICS = ("bias", "variance", "mse", "a12", "mse_ratio")
MSE_TARGETS = ("mass", "expectation")

# Stream tags for split_seed; each purpose gets an independent stream.
STREAM_DISTRIBUTION = 0
STREAM_SAMPLE = 1
STREAM_GA = 2
STREAM_EXTENSION = 3
STREAM_MONTE_CARLO = 4

#: Monte Carlo replications drawn per seeded block.
MC_BLOCK = 10_000


class SpecError(DomainError):
    """Malformed or inconsistent experiment specification."""


def split_seed(master_seed: int, *path: int) -> int:
    """Derive a 64-bit seed for the stream addressed by ``path``.

    ``path`` is a tuple of non-negative integers, conventionally
    ``(stream tag, distribution index, n, k, replication)``.  The value is
    ``SeedSequence(master_seed, spawn_key=path)``'s first 64-bit word, so
    distinct paths give statistically independent streams.
    """
    if any(p < 0 for p in path):
        raise DomainError("seed path entries must be non-negative")
    ss = np.random.SeedSequence(int(master_seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def vargha_delaney_a12(xs: Sequence[float], ys: Sequence[float]) -> float:
    """``P(X > Y) + 0.5 P(X = Y)`` over all pairs.

    Orient the inputs so that larger is better, e.g. pass negated MSEs.

    Raises
    ------
    DomainError
        If either sequence is empty.
    """
    x = np.asarray(xs, dtype=float)
    y = np.sort(np.asarray(ys, dtype=float))
    if x.size == 0 or y.size == 0:
        raise DomainError("A12 needs two non-empty samples")
    below = np.searchsorted(y, x, side="left")
    upto = np.searchsorted(y, x, side="right")
    wins = below.sum() + 0.5 * (upto - below).sum()
    return float(wins / (x.size * y.size))


@dataclass(frozen=True)
class DistributionRef:
    """A distribution family reference inside a spec."""

    name: str
    kind: str
    param: Optional[float] = None

    @classmethod
    def parse(cls, item) -> "DistributionRef":
        if isinstance(item, str):
            if item not in BENCHMARK_DISTRIBUTIONS:
                raise SpecError(f"unknown benchmark distribution {item!r}")
            kind, param = BENCHMARK_DISTRIBUTIONS[item]
            return cls(item, kind, param)
        if isinstance(item, dict) and "kind" in item:
            param = item.get("param")
            name = item.get("name") or (item["kind"] if param is None else f"{item['kind']}-{param:g}")
            return cls(name, item["kind"], param)
        raise SpecError(f"cannot parse distribution entry {item!r}")

    def build(self, support: int, seed: int, exact: bool = False) -> DiscreteDistribution:
        dist = make_distribution(self.kind, support, self.param, seed=seed, exact=exact)
        dist.name = self.name
        return dist


@dataclass
class ExperimentSpec:
    """Declarative experiment description.

    ``options`` holds mode-specific settings:

    ``estimators``
        Estimator ids for bias curves (default ``["GT", "B"]``).
    ``mse_target``
        ``"mass"`` measures error against the realized ``M_k``;
        ``"expectation"`` against ``E[M_k]`` (bias squared plus variance).
    ``monte_carlo``
        Monte Carlo replications for ``mse-compare`` (0 disables).
    ``ga``
        Overrides of :class:`GaConfig` fields.
    ``factors`` / ``fold``
        Extension factors and fold rule for ``adapt-compare``.
    """

    experiment_id: str
    mode: str
    distributions: List = field(default_factory=lambda: list(BENCHMARK_DISTRIBUTIONS))
    support_S: int = 20
    sample_sizes: List[int] = field(default_factory=lambda: [20])
    target_k: List[int] = field(default_factory=lambda: [0])
    replications: int = 50
    master_seed: int = 0
    options: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise SpecError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.replications) < 1:
            raise SpecError("replications must be at least 1")
        if int(self.support_S) < 2:
            raise SpecError("support_S must be at least 2")
        if not self.sample_sizes or any(int(n) < 1 for n in self.sample_sizes):
            raise SpecError("sample_sizes must be non-empty positive integers")
        if not self.target_k or any(int(k) < 0 for k in self.target_k):
            raise SpecError("target_k must be non-empty non-negative integers")
        if not self.distributions:
            raise SpecError("at least one distribution is required")
        self.refs = [DistributionRef.parse(d) for d in self.distributions]
        target = self.options.get("mse_target", "mass")
        if target not in MSE_TARGETS:
            raise SpecError(f"mse_target must be one of {MSE_TARGETS}")
        if self.mode == "adapt-compare" and list(self.target_k) != [0]:
            raise SpecError("adapt-compare supports k = 0 only")
        try:
            self.ga_config(0)
        except (TypeError, DomainError) as exc:
            raise SpecError(f"bad ga options: {exc}") from None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown spec fields {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise SpecError(str(exc)) from None

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentSpec":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read spec {path}: {exc}") from None
        if not isinstance(data, dict):
            raise SpecError("spec must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def ga_config(self, seed: int) -> GaConfig:
        return GaConfig(**{**self.options.get("ga", {}), "seed": seed})

    def distribution(self, index: int, exact: bool = False) -> DiscreteDistribution:
        seed = split_seed(self.master_seed, STREAM_DISTRIBUTION, index)
        return self.refs[index].build(self.support_S, seed, exact=exact)


@dataclass(frozen=True)
class ResultRow:
    """One measured quantity.

    ``method`` tells how it was obtained (``exact``, ``monte-carlo``,
    ``oracle``); ``std_error`` is set for Monte Carlo values and
    ``log10_abs`` for values that may underflow a double.
    """

    experiment_id: str
    distribution: str
    S: int
    n: int
    k: int
    estimator: str
    metric: str
    value: float
    replications: int
    seed: int
    method: str = "exact"
    std_error: Optional[float] = None
    log10_abs: Optional[float] = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise DomainError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not math.isfinite(self.value):
            raise DomainError(f"non-finite value for {self.metric} of {self.estimator}")


_INT_FIELDS = ("S", "n", "k", "replications", "seed")
_OPTIONAL_FLOATS = ("std_error", "log10_abs")


def write_rows(rows: Iterable[ResultRow], out=None) -> str:
    """Emit rows as CSV; returns the text and writes it to ``out`` if given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = [f.name for f in fields(ResultRow)]
    writer.writerow(names)
    for row in rows:
        cells = []
        for name in names:
            v = getattr(row, name)
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(v)
        writer.writerow(cells)
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def read_rows(source: Union[str, Path]) -> List[ResultRow]:
    """Parse CSV text (or a path to it) produced by :func:`write_rows`."""
    text = source
    if isinstance(source, Path) or ("\n" not in str(source) and Path(str(source)).exists()):
        text = Path(source).read_text()
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        for name in _INT_FIELDS:
            rec[name] = int(rec[name])
        rec["value"] = float(rec["value"])
        for name in _OPTIONAL_FLOATS:
            rec[name] = float(rec[name]) if rec[name] != "" else None
        rows.append(ResultRow(**rec))
    return rows


def rows_to_columns(rows: Sequence[ResultRow], metric: str = "bias") -> str:
    """Whitespace-separated ``n k log10|value|`` columns, one per estimator.

    Suitable for gnuplot; blocks are separated by distribution.
    """
    blocks: Dict[str, Dict[Tuple[int, int], Dict[str, float]]] = {}
    estimators: List[str] = []
    for r in rows:
        if r.metric != metric:
            continue
        if r.estimator not in estimators:
            estimators.append(r.estimator)
        logv = r.log10_abs if r.log10_abs is not None else (
            math.log10(abs(r.value)) if r.value != 0 else -math.inf)
        blocks.setdefault(r.distribution, {}).setdefault((r.n, r.k), {})[r.estimator] = logv
    lines = []
    for name, cells in blocks.items():
        lines.append(f"# {name}")
        lines.append("# n k " + " ".join(f"log10|{e}|" for e in estimators))
        for (n, k) in sorted(cells):
            vals = [cells[(n, k)].get(e, math.nan) for e in estimators]
            lines.append(f"{n} {k} " + " ".join(f"{v:.6g}" for v in vals))
        lines.append("")
        lines.append("")
    return "\n".join(lines)


def _map(fn: Callable, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _log10_abs(value) -> float:
    if isinstance(value, LogWeight):
        return value.log10_magnitude
    if value == 0:
        return -math.inf
    return math.log10(abs(float(value)))


def _row_log10(value) -> Optional[float]:
    v = _log10_abs(value)
    return v if math.isfinite(v) else None


def run_bias_curve(spec: ExperimentSpec, workers: int = 1) -> List[ResultRow]:
    """Closed-form bias of each estimator over the ``(dist, n, k)`` grid."""
    estimators = spec.options.get("estimators", ["GT", "B"])
    rows = []
    for d, ref in enumerate(spec.refs):
        dist = spec.distribution(d)
        for n in spec.sample_sizes:
            for k in spec.target_k:
                for est in estimators:
                    if est != "B" and k >= n:
                        continue
                    b = analytic_bias(dist, n, k, est)
                    rows.append(ResultRow(spec.experiment_id, ref.name, spec.support_S, n, k, est, "bias",
                                          float(b), 1, spec.master_seed, "exact", None, _row_log10(b)))
    return rows


def _named_estimator(name: str, n: int, k: int) -> LinearEstimator:
    if name == "GT":
        return LinearEstimator.good_turing(n, k).as_float()
    if name == "GT-prime":
        return LinearEstimator.good_turing(n, k, "simple").as_float()
    if name == "B":
        return LinearEstimator.minimal_bias(n, k).as_float()
    raise SpecError(f"unknown estimator {name!r}")


def _counts_estimates(counts: np.ndarray, n: int, k: int, names: Sequence[str]) -> Dict[str, np.ndarray]:
    # Estimators that read only the final frequency profile, vectorized
    # over a block of count vectors.
    out = {}
    for name in names:
        if name in ("GT", "GT-prime"):
            phi = (counts == k + 1).sum(axis=1)
            out[name] = (k + 1) * phi / (n if name == "GT" else n - k)
        elif name == "B":
            top = n - k
            c = binomial_ratio_chain(n, k, top)
            est = np.zeros(counts.shape[0])
            for i in range(1, top + 1):
                phi = (counts == k + i).sum(axis=1)
                if phi.any():
                    est += (1 if i % 2 else -1) * c[i - 1] * phi
            out[name] = est
        else:
            raise SpecError(f"no Monte Carlo path for estimator {name!r}")
    return out


def _mc_block(task) -> Dict[str, Tuple[float, float, float, int]]:
    probs, n, k, names, reps, seed, target = task
    rng = np.random.Generator(np.random.Philox(seed))
    counts = rng.multinomial(n, probs, size=reps)
    mass = (counts == k).astype(float) @ probs
    reference = mass if target is None else np.full(reps, target)
    out = {}
    for name, est in _counts_estimates(counts, n, k, names).items():
        err = est - reference
        sq = err * err
        out[name] = (math.fsum(err), math.fsum(sq), math.fsum(sq * sq), reps)
    return out


def monte_carlo_mse(dist: DiscreteDistribution, n: int, k: int, names: Sequence[str], replications: int,
                    seed: int, target: str = "mass", workers: int = 1) -> Dict[str, Tuple[float, float, float]]:
    """Simulated ``(mse, standard error, bias)`` of named estimators.

    Samples are drawn in blocks of :data:`MC_BLOCK` with one seed per
    block, so the result does not depend on ``workers``.
    """
    if target not in MSE_TARGETS:
        raise DomainError(f"target must be one of {MSE_TARGETS}")
    probs = np.array([float(p) for p in dist.values()])
    probs = probs / probs.sum()
    fixed = None if target == "mass" else float(expected_mass(dist, n, k))
    tasks = []
    done = 0
    block = 0
    while done < replications:
        size = min(MC_BLOCK, replications - done)
        tasks.append((probs, n, k, tuple(names), size, split_seed(seed, block), fixed))
        done += size
        block += 1
    parts = _map(_mc_block, tasks, workers)
    out = {}
    for name in names:
        s1 = math.fsum(p[name][0] for p in parts)
        s2 = math.fsum(p[name][1] for p in parts)
        s4 = math.fsum(p[name][2] for p in parts)
        R = replications
        mse = s2 / R
        var_sq = max(s4 / R - mse * mse, 0.0) * R / max(R - 1, 1)
        out[name] = (mse, math.sqrt(var_sq / R), s1 / R)
    return out


def run_mse_compare(spec: ExperimentSpec, workers: int = 1) -> List[ResultRow]:
    """Exact bias, variance and MSE of GT and B, plus Monte Carlo MSE.

    The exact MSE follows ``options["mse_target"]``: ``mass`` is
    ``E[(estimate - M_k)**2]``, ``expectation`` is bias squared plus the
    estimator variance.  ``options["monte_carlo"]`` sets the number of
    simulated samples (default ``replications``; 0 skips simulation).
    """
    names = spec.options.get("estimators", ["GT", "B"])
    target = spec.options.get("mse_target", "mass")
    mc_reps = int(spec.options.get("monte_carlo", spec.replications))
    rows = []
    for d, ref in enumerate(spec.refs):
        dist = spec.distribution(d)
        for n in spec.sample_sizes:
            ctx = MomentContext(dist, n)
            for k in spec.target_k:
                usable = [e for e in names if e == "B" or k < n]
                common = dict(experiment_id=spec.experiment_id, distribution=ref.name, S=spec.support_S,
                              n=n, k=k, seed=spec.master_seed)
                for name in usable:
                    br = estimator_mse(ctx, _named_estimator(name, n, k), k)
                    mse = br.mse if target == "mass" else br.bias * br.bias + br.variance
                    for metric, value in (("bias", br.bias), ("variance", br.variance), ("mse", mse)):
                        rows.append(ResultRow(estimator=name, metric=metric, value=float(value),
                                              replications=1, **common))
                if mc_reps > 0:
                    seed = split_seed(spec.master_seed, STREAM_MONTE_CARLO, d, n, k)
                    sim = monte_carlo_mse(dist, n, k, usable, mc_reps, seed, target, workers)
                    for name in usable:
                        mse, se, _ = sim[name]
                        rows.append(ResultRow(estimator=name, metric="mse", value=mse, replications=mc_reps,
                                              method="monte-carlo", std_error=se, **{**common, "seed": seed}))
    return rows


def _evolve_task(task):
    dist, n, k, sample_seed, config, target = task
    profile = draw_sample(dist, n, sample_seed)
    result = evolve(profile, k, config)
    est = instantiate(result.best.representation)
    br = estimator_mse(MomentContext(dist, n), est, k)
    mse = br.mse if target == "mass" else br.bias * br.bias + br.variance
    return float(mse), result.best.representation, profile, result.generations_run


def _evolve_replications(spec: ExperimentSpec, d: int, dist: DiscreteDistribution, n: int, k: int,
                         workers: int) -> list:
    target = spec.options.get("mse_target", "mass")
    tasks = []
    for r in range(spec.replications):
        sample_seed = split_seed(spec.master_seed, STREAM_SAMPLE, d, n, k, r)
        ga_seed = split_seed(spec.master_seed, STREAM_GA, d, n, k, r)
        tasks.append((dist, n, k, sample_seed, spec.ga_config(ga_seed), target))
    return _map(_evolve_task, tasks, workers)


def run_evolve_compare(spec: ExperimentSpec, workers: int = 1) -> List[ResultRow]:
    """Evolve one estimator per replication and compare its true MSE with GT.

    Rows per ``(dist, n, k)``: mean true MSE of the evolved estimators and
    of GT, ``A12`` of evolved over GT on negated MSE, and the ratio of
    mean MSEs.
    """
    target = spec.options.get("mse_target", "mass")
    rows = []
    for d, ref in enumerate(spec.refs):
        dist = spec.distribution(d)
        for n in spec.sample_sizes:
            for k in spec.target_k:
                if k >= n:
                    continue
                results = _evolve_replications(spec, d, dist, n, k, workers)
                evo = np.array([r[0] for r in results])
                br = estimator_mse(MomentContext(dist, n), _named_estimator("GT", n, k), k)
                gt_mse = float(br.mse if target == "mass" else br.bias * br.bias + br.variance)
                gt = np.full(len(evo), gt_mse)
                common = dict(experiment_id=spec.experiment_id, distribution=ref.name, S=spec.support_S,
                              n=n, k=k, replications=spec.replications, seed=spec.master_seed)
                se = float(evo.std(ddof=1) / math.sqrt(len(evo))) if len(evo) > 1 else None
                rows.append(ResultRow(estimator="evolved", metric="mse", value=float(evo.mean()),
                                      std_error=se, **common))
                rows.append(ResultRow(estimator="GT", metric="mse", value=gt_mse, **common))
                rows.append(ResultRow(estimator="evolved", metric="a12",
                                      value=vargha_delaney_a12(-evo, -gt), **common))
                rows.append(ResultRow(estimator="evolved", metric="mse_ratio",
                                      value=float(evo.mean() / gt_mse), **common))
    return rows


def _adapt_task(task):
    dist, n, sample_seed, config, factors, fold, ext_seeds = task
    profile = draw_sample(dist, n, sample_seed)
    rep = evolve(profile, 0, config).best.representation
    out = []
    for c, ext_seed in zip(factors, ext_seeds):
        m = c * n
        adapted = adapt_to_larger_sample(rep, m, fold)
        valid = bool(validate_representation(shift_representation(rep, m)))
        big = extend_sample(profile, dist, m - n, ext_seed) if m > n else profile
        mass = float(realized_mass(dist, big, 0))
        err_adapted = float(adapted.evaluate(big)) - mass
        err_gt = big.phi(1) / m - mass
        out.append((c, err_adapted, err_gt, valid, adapted))
    return out


def run_adapt_compare(spec: ExperimentSpec, workers: int = 1) -> List[ResultRow]:
    """Evolve at ``n``, adapt to ``c n`` and compare with GT on extended samples.

    Each replication evolves on a fresh sample, extends it by ``(c-1) n``
    further draws and records the squared error of the adapted estimator
    and of GT against the realized missing mass.  Besides these Monte
    Carlo MSEs, ``options["exact"]`` (default true) adds the exact MSE
    ratio of each adapted estimator averaged over replications.
    """
    factors = [int(c) for c in spec.options.get("factors", [2, 5, 10])]
    if any(c < 1 for c in factors):
        raise SpecError("extension factors must be at least 1")
    fold = spec.options.get("fold", "shifted")
    exact = bool(spec.options.get("exact", True))
    rows = []
    for d, ref in enumerate(spec.refs):
        dist = spec.distribution(d)
        for n in spec.sample_sizes:
            tasks = []
            for r in range(spec.replications):
                sample_seed = split_seed(spec.master_seed, STREAM_SAMPLE, d, n, 0, r)
                ga_seed = split_seed(spec.master_seed, STREAM_GA, d, n, 0, r)
                ext = [split_seed(spec.master_seed, STREAM_EXTENSION, d, n, c, r) for c in factors]
                tasks.append((dist, n, sample_seed, spec.ga_config(ga_seed), factors, fold, ext))
            results = _map(_adapt_task, tasks, workers)
            for idx, c in enumerate(factors):
                m = c * n
                per = [res[idx] for res in results]
                invalid = sum(1 for p in per if not p[3])
                if invalid:
                    raise DomainError(f"{invalid} adapted representations failed validation at m={m}")
                sq_a = np.array([p[1] ** 2 for p in per])
                sq_g = np.array([p[2] ** 2 for p in per])
                common = dict(experiment_id=spec.experiment_id, distribution=ref.name, S=spec.support_S,
                              n=m, k=0, replications=spec.replications, seed=spec.master_seed)
                R = len(per)
                se = (lambda v: float(v.std(ddof=1) / math.sqrt(R)) if R > 1 else None)
                rows.append(ResultRow(estimator="adapted", metric="mse", value=float(sq_a.mean()),
                                      method="monte-carlo", std_error=se(sq_a), **common))
                rows.append(ResultRow(estimator="GT", metric="mse", value=float(sq_g.mean()),
                                      method="monte-carlo", std_error=se(sq_g), **common))
                ratio = float(sq_a.mean() / sq_g.mean()) if sq_g.mean() > 0 else math.nan
                if math.isfinite(ratio):
                    rows.append(ResultRow(estimator="adapted", metric="mse_ratio", value=ratio,
                                          method="monte-carlo", **common))
                if exact:
                    ctx = MomentContext(dist, m)
                    gt_mse = float(estimator_mse(ctx, _named_estimator("GT", m, 0), 0).mse)
                    adapted_mse = [float(estimator_mse(ctx, p[4], 0).mse) for p in per]
                    rows.append(ResultRow(estimator="adapted", metric="mse", value=float(np.mean(adapted_mse)),
                                          **common))
                    rows.append(ResultRow(estimator="adapted", metric="mse_ratio",
                                          value=float(np.mean(adapted_mse) / gt_mse), **common))
    return rows


def run_oracle_audit(spec: ExperimentSpec, workers: int = 1) -> Tuple[List[ResultRow], List[str]]:
    """Cross-check exact moments against brute-force enumeration.

    Distributions are built with Fraction probabilities.  Returns the rows
    (methods ``exact`` and ``oracle``) and a list of mismatch messages,
    empty when every pair agrees exactly.

    Raises
    ------
    BudgetExceeded
        If an enumeration is larger than ``options["budget"]``.
    """
    budget = spec.options.get("budget")
    names = spec.options.get("estimators", ["GT", "B"])
    rows: List[ResultRow] = []
    mismatches: List[str] = []
    for d, ref in enumerate(spec.refs):
        dist = spec.distribution(d, exact=True)
        for n in spec.sample_sizes:
            table = enumerate_outcomes(dist, n, "composition", budget)
            ctx = MomentContext(dist, n)
            for k in spec.target_k:
                if k > n:
                    continue
                for name in names:
                    if name != "B" and k >= n:
                        continue
                    if name == "B":
                        est = LinearEstimator.minimal_bias(n, k)
                    else:
                        est = LinearEstimator.good_turing(n, k, "standard" if name == "GT" else "simple")
                    br = estimator_mse(ctx, est, k)

                    def value(o, est=est):
                        return sum((b * o.phi(i) for (i, _), b in est.betas.items()), 0)

                    def error(o, est=est, k=k):
                        return value(o) - realized_mass_of(o, dist, k)

                    bias = exact_expectation(table, error)
                    mean = exact_expectation(table, value)
                    variance = exact_expectation(table, lambda o: value(o) ** 2) - mean * mean
                    mse = exact_expectation(table, lambda o: error(o) ** 2)
                    common = dict(experiment_id=spec.experiment_id, distribution=ref.name, S=spec.support_S,
                                  n=n, k=k, estimator=name, replications=1, seed=spec.master_seed)
                    for metric, mine, truth in (("bias", br.bias, bias), ("variance", br.variance, variance),
                                                ("mse", br.mse, mse)):
                        rows.append(ResultRow(metric=metric, value=float(mine), **common))
                        rows.append(ResultRow(metric=metric, value=float(truth), method="oracle", **common))
                        if mine != truth:
                            mismatches.append(f"{ref.name} n={n} k={k} {name} {metric}: {mine} != {truth}")
    return rows, mismatches


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> List[ResultRow]:
    """Dispatch on ``spec.mode``."""
    if spec.mode == "bias-curve":
        return run_bias_curve(spec, workers)
    if spec.mode == "mse-compare":
        return run_mse_compare(spec, workers)
    if spec.mode == "evolve-compare":
        return run_evolve_compare(spec, workers)
    if spec.mode == "adapt-compare":
        return run_adapt_compare(spec, workers)
    rows, _ = run_oracle_audit(spec, workers)
    return rows
