"""Time the compiled kernels against the pure-Python fallback.

Run ``python3 benchmarks/bench_kernels.py``.  Each kernel is called with
identical inputs on both backends; the script reports the median time per
call, the speedup and the largest relative difference between results.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time

import numpy as np

from missingmass import _kernels_py
from missingmass.distributions import benchmark_distribution

try:
    from missingmass import _kernels as _compiled
except ImportError:
    _compiled = None


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def _cases(n: int, support: int):
    dist = benchmark_distribution("zipf-1", support)
    probs, counts = dist.groups()
    probs = np.asarray(probs, dtype=float)
    counts = np.asarray(counts, dtype=np.int64)
    rng = np.random.default_rng(0)
    seq = rng.integers(0, support, size=50 * n).astype(np.int64)
    rows, cols = np.triu_indices(n)
    i = (rows + 1).astype(np.int64)
    j = (cols + 1).astype(np.int64)
    pick = rng.choice(len(i), size=min(len(i), 100), replace=False)
    a = np.full(pick.size, n, dtype=np.int64)
    u = i[pick]
    b = j[pick]
    v = np.minimum(i[pick], b)

    def step(k):
        return lambda: k.step_counts(seq)

    def single(k):
        return lambda: k.pair_moment(n, n // 3 + 1, n - 1, n // 4 + 1, probs, counts)

    def batch(k):
        return lambda: k.pair_moment_batch(a, u, b, v, probs, counts, True, False)

    return {"step_counts": step, "pair_moment": single, "pair_moment_batch": batch}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("-n", type=int, default=40, help="sample size")
    parser.add_argument("--support", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)
    if _compiled is None:
        print("compiled kernels are not built; only the Python backend is available", file=sys.stderr)
        return 1
    print(f"{'kernel':<20}{'python [s]':>14}{'cython [s]':>14}{'speedup':>10}{'max rel diff':>15}")
    for name, make in _cases(args.n, args.support).items():
        py_fn, cy_fn = make(_kernels_py), make(_compiled)
        ref, got = np.asarray(py_fn(), dtype=float), np.asarray(cy_fn(), dtype=float)
        scale = np.maximum(np.abs(ref), np.finfo(float).tiny)
        diff = float(np.max(np.abs(ref - got) / scale)) if ref.size else 0.0
        t_py = _median_time(py_fn, args.repeats)
        t_cy = _median_time(cy_fn, args.repeats)
        print(f"{name:<20}{t_py:>14.3e}{t_cy:>14.3e}{t_py / t_cy:>10.1f}{diff:>15.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
