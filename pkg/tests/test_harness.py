import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from missingmass.distributions import benchmark_distribution
from missingmass.harness import (
    ExperimentSpec,
    ResultRow,
    SpecError,
    monte_carlo_mse,
    read_rows,
    rows_to_columns,
    run_adapt_compare,
    run_bias_curve,
    run_evolve_compare,
    run_experiment,
    run_mse_compare,
    run_oracle_audit,
    split_seed,
    vargha_delaney_a12,
    write_rows,
)
from missingmass.moments import MomentContext, estimator_mse
from missingmass.representations import LinearEstimator
from missingmass.numerics import DomainError

FAST_GA = {"generations_G": 3, "max_generations": 6, "mutant_size_m": 4}


class TestSplitSeed:
    def test_deterministic(self):
        assert split_seed(7, 1, 2, 3) == split_seed(7, 1, 2, 3)

    def test_paths_distinct(self):
        seeds = {split_seed(7, a, b) for a in range(5) for b in range(20)}
        assert len(seeds) == 100
        assert split_seed(7, 1) != split_seed(8, 1)

    def test_streams_uncorrelated(self):
        a = np.random.default_rng(split_seed(0, 1, 0)).random(5000)
        b = np.random.default_rng(split_seed(0, 1, 1)).random(5000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_negative_path_rejected(self):
        with pytest.raises(DomainError):
            split_seed(0, -1)


class TestA12:
    def test_all_greater(self):
        assert vargha_delaney_a12([3, 4], [1, 2]) == 1.0
        assert vargha_delaney_a12([1, 2], [3, 4]) == 0.0

    def test_identical(self):
        assert vargha_delaney_a12([2, 2, 2], [2, 2]) == 0.5

    def test_mixed(self):
        assert vargha_delaney_a12([1, 3], [2, 2]) == 0.5

    def test_empty(self):
        with pytest.raises(DomainError):
            vargha_delaney_a12([], [1.0])

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=15),
           st.lists(st.integers(0, 5), min_size=1, max_size=15))
    def test_matches_pairwise_definition(self, xs, ys):
        wins = sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in xs for y in ys)
        assert vargha_delaney_a12(xs, ys) == pytest.approx(wins / (len(xs) * len(ys)))
        assert vargha_delaney_a12(xs, ys) + vargha_delaney_a12(ys, xs) == pytest.approx(1.0)


finite = st.floats(allow_nan=False, allow_infinity=False)


class TestRows:
    @given(st.lists(st.builds(
        ResultRow,
        experiment_id=st.text("abc-_", min_size=1, max_size=6),
        distribution=st.sampled_from(["uniform", "zipf-1", "half&half", "a,b"]),
        S=st.integers(2, 500), n=st.integers(1, 5000), k=st.integers(0, 50),
        estimator=st.sampled_from(["GT", "B", "evolved"]),
        metric=st.sampled_from(["bias", "variance", "mse", "a12", "mse_ratio"]),
        value=finite, replications=st.integers(1, 10**6), seed=st.integers(0, 2**64 - 1),
        method=st.sampled_from(["exact", "monte-carlo", "oracle"]),
        std_error=st.none() | finite, log10_abs=st.none() | finite,
    ), max_size=8))
    def test_csv_round_trip(self, rows):
        assert read_rows(write_rows(rows)) == rows

    def test_file_round_trip(self, tmp_path):
        rows = [ResultRow("e", "uniform", 10, 5, 0, "GT", "bias", 0.1, 1, 0)]
        write_rows(rows, tmp_path / "r.csv")
        assert read_rows(tmp_path / "r.csv") == rows

    def test_rejects_bad_metric_and_value(self):
        with pytest.raises(DomainError):
            ResultRow("e", "u", 10, 5, 0, "GT", "median", 0.1, 1, 0)
        with pytest.raises(DomainError):
            ResultRow("e", "u", 10, 5, 0, "GT", "bias", math.nan, 1, 0)


class TestSpec:
    def test_defaults_and_round_trip(self, tmp_path):
        spec = ExperimentSpec("x", "bias-curve")
        assert len(spec.refs) == 6
        path = tmp_path / "s.json"
        path.write_text(json.dumps(spec.to_dict()))
        assert ExperimentSpec.load(path).to_dict() == spec.to_dict()

    @pytest.mark.parametrize("data", [
        {"experiment_id": "x", "mode": "plot"},
        {"experiment_id": "x", "mode": "bias-curve", "replications": 0},
        {"experiment_id": "x", "mode": "bias-curve", "support_S": 1},
        {"experiment_id": "x", "mode": "bias-curve", "sample_sizes": []},
        {"experiment_id": "x", "mode": "bias-curve", "target_k": [-1]},
        {"experiment_id": "x", "mode": "bias-curve", "distributions": ["zipf-7"]},
        {"experiment_id": "x", "mode": "bias-curve", "distributions": []},
        {"experiment_id": "x", "mode": "bias-curve", "colour": "red"},
        {"experiment_id": "x", "mode": "mse-compare", "options": {"mse_target": "median"}},
        {"experiment_id": "x", "mode": "adapt-compare", "target_k": [1]},
        {"experiment_id": "x", "mode": "evolve-compare", "options": {"ga": {"generations_G": 0}}},
        {"experiment_id": "x", "mode": "evolve-compare", "options": {"ga": {"colour": 1}}},
        {"mode": "bias-curve"},
    ])
    def test_invalid(self, data):
        with pytest.raises(SpecError):
            ExperimentSpec.from_dict(data)

    def test_unreadable(self, tmp_path):
        (tmp_path / "bad.json").write_text("[1, 2]")
        with pytest.raises(SpecError):
            ExperimentSpec.load(tmp_path / "bad.json")
        with pytest.raises(SpecError):
            ExperimentSpec.load(tmp_path / "missing.json")

    def test_custom_family(self):
        spec = ExperimentSpec("x", "bias-curve", [{"kind": "zipf", "param": 1.5}])
        assert spec.refs[0].name == "zipf-1.5"
        assert spec.distribution(0).name == "zipf-1.5"

    def test_dirichlet_fixed_per_spec(self):
        spec = ExperimentSpec("x", "bias-curve", ["diri-1"], master_seed=3)
        assert spec.distribution(0).values() == spec.distribution(0).values()
        other = ExperimentSpec("x", "bias-curve", ["diri-1"], master_seed=4)
        assert spec.distribution(0).values() != other.distribution(0).values()


class TestBiasCurve:
    def test_rows(self):
        spec = ExperimentSpec("bc", "bias-curve", ["uniform"], support_S=100, sample_sizes=[100, 500],
                              target_k=[0, 1])
        rows = run_bias_curve(spec)
        assert len(rows) == 8
        gt = {(r.n, r.k): r.value for r in rows if r.estimator == "GT"}
        assert gt[(100, 0)] == pytest.approx(3.6973e-3, rel=1e-4)
        for r in rows:
            if r.value != 0.0:
                assert r.log10_abs == pytest.approx(math.log10(abs(r.value)), abs=1e-9)
            assert r.log10_abs is not None
        table = rows_to_columns(rows)
        assert "# uniform" in table and "100 0 " in table

    def test_underflowing_bias_keeps_log(self):
        spec = ExperimentSpec("bc", "bias-curve", ["uniform"], support_S=100, sample_sizes=[2000],
                              target_k=[0], options={"estimators": ["B"]})
        (row,) = run_bias_curve(spec)
        # |bias| = S * (1/S)**(n+1) underflows a double but not its log.
        assert row.value == 0.0
        assert row.log10_abs == pytest.approx(2 - 2 * 2001, abs=1e-6)


class TestMonteCarlo:
    def test_agrees_with_exact(self):
        dist = benchmark_distribution("zipf-1", 10)
        ctx = MomentContext(dist, 15)
        sim = monte_carlo_mse(dist, 15, 0, ["GT", "B"], 20000, seed=11)
        for name, est in (("GT", LinearEstimator.good_turing(15, 0)), ("B", LinearEstimator.minimal_bias(15, 0))):
            exact = float(estimator_mse(ctx, est.as_float(), 0).mse)
            mse, se, _ = sim[name]
            assert abs(mse - exact) < 4 * se

    def test_expectation_target_bias(self):
        dist = benchmark_distribution("uniform", 10)
        _, _, bias = monte_carlo_mse(dist, 10, 0, ["GT"], 5000, seed=1, target="expectation")["GT"]
        ctx = MomentContext(dist, 10)
        exact = estimator_mse(ctx, LinearEstimator.good_turing(10, 0).as_float(), 0)
        assert abs(bias - float(exact.bias)) < 0.01

    def test_worker_count_does_not_change_result(self):
        dist = benchmark_distribution("uniform", 10)
        a = monte_carlo_mse(dist, 20, 0, ["GT", "B"], 25000, seed=2, workers=1)
        b = monte_carlo_mse(dist, 20, 0, ["GT", "B"], 25000, seed=2, workers=2)
        assert a == b

    def test_bad_target(self):
        with pytest.raises(DomainError):
            monte_carlo_mse(benchmark_distribution("uniform", 5), 5, 0, ["GT"], 10, 0, target="x")


class TestMseCompare:
    def test_rows_consistent(self):
        spec = ExperimentSpec("mc", "mse-compare", ["uniform", "zipf-1"], support_S=10, sample_sizes=[10],
                              target_k=[0, 1], replications=2000)
        rows = run_mse_compare(spec)
        exact = {(r.distribution, r.k, r.estimator, r.metric): r.value for r in rows if r.method == "exact"}
        for (d, k, e, m), v in exact.items():
            if m == "mse":
                assert v >= exact[(d, k, e, "bias")] ** 2 - 1e-15
            if m == "variance":
                assert v >= 0
        assert sum(r.method == "monte-carlo" for r in rows) == 8

    def test_expectation_target_is_bias_squared_plus_variance(self):
        spec = ExperimentSpec("mc", "mse-compare", ["uniform"], support_S=100, sample_sizes=[100],
                              options={"mse_target": "expectation", "monte_carlo": 0})
        rows = {(r.estimator, r.metric): r.value for r in run_mse_compare(spec)}
        for e in ("GT", "B"):
            assert rows[(e, "mse")] == pytest.approx(rows[(e, "bias")] ** 2 + rows[(e, "variance")])


class TestEvolveCompare:
    def test_small_run(self):
        spec = ExperimentSpec("ev", "evolve-compare", ["uniform"], support_S=10, sample_sizes=[10],
                              replications=4, options={"ga": FAST_GA})
        rows = {(r.estimator, r.metric): r for r in run_evolve_compare(spec)}
        evo, gt = rows[("evolved", "mse")].value, rows[("GT", "mse")].value
        assert rows[("evolved", "mse_ratio")].value == pytest.approx(evo / gt)
        assert 0.0 <= rows[("evolved", "a12")].value <= 1.0
        assert rows[("evolved", "mse")].std_error is not None

    def test_deterministic_and_worker_independent(self):
        spec = ExperimentSpec("ev", "evolve-compare", ["zipf-1"], support_S=10, sample_sizes=[8],
                              replications=3, master_seed=5, options={"ga": FAST_GA})
        assert run_experiment(spec) == run_experiment(spec, workers=2)


class TestAdaptCompare:
    def test_factor_one_is_identity(self):
        spec = ExperimentSpec("ad", "adapt-compare", ["uniform"], support_S=10, sample_sizes=[10],
                              replications=3, options={"ga": FAST_GA, "factors": [1, 3]})
        rows = run_adapt_compare(spec)
        exact_ratio = {r.n: r.value for r in rows if r.metric == "mse_ratio" and r.method == "exact"}
        assert set(exact_ratio) == {10, 30}
        assert exact_ratio[10] > 0

    def test_bad_factor(self):
        spec = ExperimentSpec("ad", "adapt-compare", ["uniform"], support_S=10, sample_sizes=[10],
                              replications=1, options={"ga": FAST_GA, "factors": [0]})
        with pytest.raises(SpecError):
            run_adapt_compare(spec)


class TestOracleAudit:
    def test_no_mismatches(self):
        spec = ExperimentSpec("au", "oracle-audit", ["uniform", "zipf-1"], support_S=3, sample_sizes=[1, 3, 5],
                              target_k=[0, 1, 2], options={"estimators": ["GT", "GT-prime", "B"]})
        rows, mismatches = run_oracle_audit(spec)
        assert mismatches == []
        assert {r.method for r in rows} == {"exact", "oracle"}
