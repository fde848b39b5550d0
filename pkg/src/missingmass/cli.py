"""Command-line front end.

Exit codes: 0 success, 1 audit mismatch, 2 bad input or spec, 3 an
enumeration exceeded its budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import BACKEND, __version__
from .distributions import (
    BENCHMARK_DISTRIBUTIONS,
    draw_sample,
    make_distribution,
    read_sample_file,
    write_sample_file,
)
from .estimators import chao_unseen, good_turing, hybrid_phat, minimal_bias
from .ga import EXTENSION_RULES, GaConfig, evolve
from .harness import MODES, ExperimentSpec, SpecError, rows_to_columns, run_experiment, run_oracle_audit, write_rows
from .moments import estimated_mse, plugin_context
from .numerics import DomainError
from .oracle import BudgetExceeded
from .representations import LinearEstimator, Representation, adapt_to_larger_sample, shift_representation

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_SPEC = 2
EXIT_BUDGET = 3

SPEC_DIR = Path(__file__).with_name("specs")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _distribution(args):
    if args.distribution in BENCHMARK_DISTRIBUTIONS:
        kind, param = BENCHMARK_DISTRIBUTIONS[args.distribution]
    else:
        kind, param = args.distribution, None
    if args.param is not None:
        param = args.param
    return make_distribution(kind, args.support, param, seed=args.seed)


def cmd_gen(args) -> int:
    dist = _distribution(args)
    profile = draw_sample(dist, args.n, args.seed)
    path = _out_dir(args) / args.name
    write_sample_file(profile, path)
    print(path)
    return EXIT_OK


def cmd_estimate(args) -> int:
    profile = read_sample_file(args.sample)
    n, k = profile.n, args.k
    report = {
        "n": n,
        "k": k,
        "distinct": profile.distinct(),
        "good_turing": good_turing(profile, k),
        "good_turing_simple": good_turing(profile, k, "simple"),
        "minimal_bias": minimal_bias(profile, k),
    }
    if k == 0:
        report["chao_unseen"] = chao_unseen(profile)
    if n >= 2:
        ctx = plugin_context(profile)
        report["estimated_mse_good_turing"] = estimated_mse(profile, LinearEstimator.good_turing(n, k), k, ctx)
        report["estimated_mse_minimal_bias"] = estimated_mse(
            profile, LinearEstimator.minimal_bias(n, k).as_float(), k, ctx)
        report["plugin_unseen_classes"] = hybrid_phat(profile).unseen_count
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_evolve(args) -> int:
    profile = read_sample_file(args.sample)
    if not profile.prefix_available:
        print("warning: sample has no draw order; prefix statistics use an arbitrary order", file=sys.stderr)
    config = GaConfig(
        generations_G=args.generations,
        max_generations=args.max_generations,
        seed=args.seed,
        extension_rule=args.extension_rule,
    )
    result = evolve(profile, args.k, config)
    out = _out_dir(args)
    result.best.representation.save(out / "best.rep")
    result.write_manifest(out / "manifest.json")
    print(f"best fitness {result.best.fitness:.6g} (initial {result.initial_fitness:.6g}), "
          f"{result.generations_run} generations, {result.best.representation.term_count} terms")
    return EXIT_OK


def cmd_adapt(args) -> int:
    rep = Representation.load(args.representation)
    shifted = shift_representation(rep, args.m)
    est = adapt_to_larger_sample(rep, args.m, args.fold)
    out = _out_dir(args)
    shifted.save(out / f"adapted_m{args.m}.rep")
    coeffs = [{"i": i, "j": j, "beta": float(b)} for (i, j), b in est.betas.items()]
    (out / f"adapted_m{args.m}.json").write_text(json.dumps({"n": est.n, "k": est.k, "betas": coeffs}, indent=2))
    print(out / f"adapted_m{args.m}.rep")
    return EXIT_OK


def _load_spec(args) -> ExperimentSpec:
    path = Path(args.spec)
    if not path.exists() and (SPEC_DIR / path).exists():
        path = SPEC_DIR / path
    spec = ExperimentSpec.load(path)
    if args.mode and args.mode != spec.mode:
        data = spec.to_dict()
        data["mode"] = args.mode
        spec = ExperimentSpec.from_dict(data)
    if args.seed is not None:
        data = spec.to_dict()
        data["master_seed"] = args.seed
        spec = ExperimentSpec.from_dict(data)
    return spec


def cmd_experiment(args) -> int:
    spec = _load_spec(args)
    rows = run_experiment(spec, workers=args.workers)
    out = _out_dir(args)
    path = out / f"{spec.experiment_id}.csv"
    write_rows(rows, path)
    if spec.mode == "bias-curve":
        (out / f"{spec.experiment_id}.dat").write_text(rows_to_columns(rows))
    (out / f"{spec.experiment_id}.spec.json").write_text(json.dumps(spec.to_dict(), indent=2))
    print(path)
    return EXIT_OK


def cmd_audit(args) -> int:
    if args.spec:
        spec = _load_spec(args)
        data = spec.to_dict()
        data["mode"] = "oracle-audit"
        spec = ExperimentSpec.from_dict(data)
    else:
        spec = ExperimentSpec("audit", "oracle-audit", ["uniform", "half&half", "zipf-1"], support_S=3,
                              sample_sizes=[1, 2, 3, 4, 5, 6], target_k=[0, 1, 2],
                              master_seed=args.seed or 0)
    rows, mismatches = run_oracle_audit(spec)
    if args.out:
        write_rows(rows, _out_dir(args) / f"{spec.experiment_id}.csv")
    for m in mismatches:
        print(m)
    checked = len(rows) // 2
    print(f"{checked - len(mismatches)}/{checked} exact checks agree")
    return EXIT_MISMATCH if mismatches else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="missingmass", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="draw a sample and write it as a token file")
    p.add_argument("--distribution", default="zipf-1",
                   help=f"benchmark name ({', '.join(BENCHMARK_DISTRIBUTIONS)}) or family kind")
    p.add_argument("--param", type=float, default=None, help="exponent or concentration override")
    p.add_argument("--support", "-S", type=int, default=20)
    p.add_argument("-n", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--name", default="sample.txt")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("estimate", help="all estimators of M_k for a sample file")
    p.add_argument("sample")
    p.add_argument("-k", type=int, default=0)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evolve", help="search for a low-MSE estimator of M_k")
    p.add_argument("sample")
    p.add_argument("-k", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--max-generations", type=int, default=2000)
    p.add_argument("--extension-rule", choices=EXTENSION_RULES, default="verbatim")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("adapt", help="adapt a saved representation to a larger sample size")
    p.add_argument("representation")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--fold", choices=("shifted", "verbatim"), default="shifted")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("experiment", help="run an experiment spec and write result CSV")
    p.add_argument("--spec", required=True, help="JSON spec path or a bundled spec name")
    p.add_argument("--mode", choices=MODES, default=None, help="override the spec's mode")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("audit", help="cross-check exact moments against enumeration")
    p.add_argument("--spec", default=None)
    p.add_argument("--mode", default=None, help=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SpecError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
