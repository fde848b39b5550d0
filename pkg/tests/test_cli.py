import json

import pytest

from missingmass.cli import EXIT_BUDGET, EXIT_MISMATCH, EXIT_OK, EXIT_SPEC, main
from missingmass.harness import read_rows
from missingmass.representations import Representation, validate_representation


@pytest.fixture
def sample(tmp_path):
    assert main(["gen", "--distribution", "zipf-1", "-S", "15", "-n", "12", "--seed", "3",
                 "--out", str(tmp_path)]) == EXIT_OK
    return tmp_path / "sample.txt"


class TestGen:
    def test_writes_tokens(self, sample):
        assert len(sample.read_text().split()) == 12

    def test_family_with_param(self, tmp_path):
        assert main(["gen", "--distribution", "dirichlet", "--param", "0.5", "-n", "5",
                     "--out", str(tmp_path), "--name", "d.txt"]) == EXIT_OK
        assert (tmp_path / "d.txt").exists()

    def test_unknown_family(self, tmp_path, capsys):
        assert main(["gen", "--distribution", "nope", "--out", str(tmp_path)]) == EXIT_SPEC
        assert "error" in capsys.readouterr().err


class TestEstimate:
    def test_report(self, sample, capsys):
        capsys.readouterr()
        assert main(["estimate", str(sample)]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["n"] == 12
        for key in ("good_turing", "minimal_bias", "chao_unseen", "estimated_mse_good_turing"):
            assert key in report
        assert 0.0 <= report["good_turing"] <= 1.0

    def test_missing_file(self, tmp_path):
        assert main(["estimate", str(tmp_path / "none.txt")]) == EXIT_SPEC


class TestEvolveAndAdapt:
    def test_pipeline(self, sample, tmp_path):
        out = tmp_path / "evo"
        assert main(["evolve", str(sample), "--generations", "3", "--max-generations", "6",
                     "--seed", "2", "--out", str(out)]) == EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 2
        rep = Representation.load(out / "best.rep")
        assert validate_representation(rep)
        assert main(["adapt", str(out / "best.rep"), "-m", "36", "--out", str(out)]) == EXIT_OK
        shifted = Representation.load(out / "adapted_m36.rep")
        assert shifted.n == 36 and validate_representation(shifted)
        betas = json.loads((out / "adapted_m36.json").read_text())
        assert betas["n"] == 36

    def test_adapt_to_smaller_size_fails(self, sample, tmp_path):
        main(["evolve", str(sample), "--generations", "2", "--max-generations", "2", "--out", str(tmp_path)])
        assert main(["adapt", str(tmp_path / "best.rep"), "-m", "5", "--out", str(tmp_path)]) == EXIT_SPEC


class TestExperiment:
    def test_spec_file(self, tmp_path):
        spec = {"experiment_id": "t", "mode": "bias-curve", "distributions": ["uniform"], "support_S": 10,
                "sample_sizes": [5, 10], "target_k": [0, 1]}
        (tmp_path / "t.json").write_text(json.dumps(spec))
        out = tmp_path / "res"
        assert main(["experiment", "--spec", str(tmp_path / "t.json"), "--out", str(out)]) == EXIT_OK
        assert len(read_rows(out / "t.csv")) == 8
        assert (out / "t.dat").exists() and (out / "t.spec.json").exists()

    def test_mode_and_seed_override(self, tmp_path):
        spec = {"experiment_id": "t", "mode": "bias-curve", "distributions": ["uniform"], "support_S": 5,
                "sample_sizes": [5], "replications": 100}
        (tmp_path / "t.json").write_text(json.dumps(spec))
        assert main(["experiment", "--spec", str(tmp_path / "t.json"), "--mode", "mse-compare", "--seed", "9",
                     "--out", str(tmp_path)]) == EXIT_OK
        rows = read_rows(tmp_path / "t.csv")
        assert any(r.method == "monte-carlo" for r in rows)
        assert json.loads((tmp_path / "t.spec.json").read_text())["master_seed"] == 9

    def test_bad_spec(self, tmp_path, capsys):
        (tmp_path / "b.json").write_text(json.dumps({"experiment_id": "b", "mode": "plot"}))
        assert main(["experiment", "--spec", str(tmp_path / "b.json"), "--out", str(tmp_path)]) == EXIT_SPEC
        assert "mode" in capsys.readouterr().err

    def test_bundled_spec_name_resolves(self, tmp_path):
        assert main(["experiment", "--spec", "desk_bias_curve.json", "--out", str(tmp_path)]) == EXIT_OK
        assert len(read_rows(tmp_path / "desk-bias-curve.csv")) == 6 * 7 * 2
        assert main(["experiment", "--spec", "no_such_spec.json", "--out", str(tmp_path)]) == EXIT_SPEC


class TestAudit:
    def test_default_grid_agrees(self, capsys):
        assert main(["audit"]) == EXIT_OK
        assert "288/288" in capsys.readouterr().out

    def test_budget_exceeded(self, tmp_path):
        spec = {"experiment_id": "a", "mode": "oracle-audit", "distributions": ["uniform"], "support_S": 3,
                "sample_sizes": [6], "options": {"budget": 3}}
        (tmp_path / "a.json").write_text(json.dumps(spec))
        assert main(["audit", "--spec", str(tmp_path / "a.json")]) == EXIT_BUDGET

    def test_exit_code_constants(self):
        assert (EXIT_OK, EXIT_MISMATCH, EXIT_SPEC, EXIT_BUDGET) == (0, 1, 2, 3)


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "kernels" in capsys.readouterr().out
