import json

import pytest
from click.testing import CliRunner

from eclipse.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def build_dataset(runner, tmp_path, n=10, seed=3):
    clean = tmp_path / "clean.jsonl"
    data = tmp_path / "dataset.jsonl"
    r = runner.invoke(main, ["dataset", "synth", "--n", str(n), "--seed", str(seed),
                             "--out", str(clean)])
    assert r.exit_code == 0, r.output
    r = runner.invoke(main, ["dataset", "build", "--in", str(clean),
                             "--out", str(data), "--seed", str(seed)])
    assert r.exit_code == 0, r.output
    return data


def extract_features(runner, tmp_path, data, seed=3):
    features = tmp_path / "features.jsonl"
    r = runner.invoke(main, [
        "features", "extract", "--dataset", str(data), "--out", str(features),
        "--backend", "synthetic", "--seed", str(seed),
    ])
    assert r.exit_code == 0, r.output
    return features


class TestDatasetCommands:
    def test_synth_and_build(self, runner, tmp_path):
        data = build_dataset(runner, tmp_path)
        lines = data.read_text().splitlines()
        assert len(lines) == 21  # header + 20 examples

    def test_build_with_mix(self, runner, tmp_path):
        clean = tmp_path / "clean.jsonl"
        runner.invoke(main, ["dataset", "synth", "--n", "8", "--out", str(clean)])
        data = tmp_path / "d.jsonl"
        r = runner.invoke(main, ["dataset", "build", "--in", str(clean),
                                 "--out", str(data), "--mix", "wrong_number=1.0"])
        assert r.exit_code == 0, r.output
        assert "wrong_number" in r.output

    def test_build_bad_mix_exit_code(self, runner, tmp_path):
        clean = tmp_path / "clean.jsonl"
        runner.invoke(main, ["dataset", "synth", "--n", "4", "--out", str(clean)])
        r = runner.invoke(main, ["dataset", "build", "--in", str(clean),
                                 "--out", str(tmp_path / "d.jsonl"),
                                 "--mix", "wrong_number=0.5"])
        assert r.exit_code == 3


class TestFeaturesExtract:
    def test_audit_output(self, runner, tmp_path):
        data = build_dataset(runner, tmp_path)
        features = extract_features(runner, tmp_path, data)
        assert features.exists()
        lines = features.read_text().splitlines()
        assert len(lines) == 20

    def test_budget_exit_code(self, runner, tmp_path):
        data = build_dataset(runner, tmp_path)
        r = runner.invoke(main, [
            "features", "extract", "--dataset", str(data),
            "--out", str(tmp_path / "f.jsonl"), "--budget", "5",
        ])
        assert r.exit_code == 5

    def test_config_file_with_flag_override(self, runner, tmp_path):
        data = build_dataset(runner, tmp_path)
        config = tmp_path / "run.cfg"
        config.write_text("k = 4\nseed = 3\n")
        features = tmp_path / "f.jsonl"
        r = runner.invoke(main, [
            "features", "extract", "--dataset", str(data), "--out", str(features),
            "--config", str(config),
        ])
        assert r.exit_code == 0, r.output
        audit = json.loads(r.output.strip().splitlines()[-1])
        assert audit["calls_made"] == (4 + 2) * 20
        # flag overrides the file value
        r = runner.invoke(main, [
            "features", "extract", "--dataset", str(data),
            "--out", str(tmp_path / "f2.jsonl"), "--config", str(config), "--k", "3",
        ])
        audit = json.loads(r.output.strip().splitlines()[-1])
        assert audit["calls_made"] == (3 + 2) * 20


class TestTrainEval:
    def test_train_writes_model(self, runner, tmp_path):
        data = build_dataset(runner, tmp_path)
        features = extract_features(runner, tmp_path, data)
        model_path = tmp_path / "model.json"
        r = runner.invoke(main, ["train", "--features", str(features),
                                 "--out", str(model_path)])
        assert r.exit_code == 0, r.output
        assert model_path.exists()
        assert "threshold" in r.output

    def test_eval_writes_artifacts(self, runner, tmp_path):
        data = build_dataset(runner, tmp_path)
        features = extract_features(runner, tmp_path, data)
        out = tmp_path / "out"
        r = runner.invoke(main, [
            "eval", "--features", str(features), "--out", str(out),
            "--folds", "5", "--seed", "3", "--bootstrap", "200",
        ])
        assert r.exit_code == 0, r.output
        assert (out / "report.json").exists()
        assert (out / "manifest.json").exists()
        assert "AUC" in r.output

    def test_ablate_output(self, runner, tmp_path):
        data = build_dataset(runner, tmp_path)
        features = extract_features(runner, tmp_path, data)
        r = runner.invoke(main, ["ablate", "--features", str(features),
                                 "--folds", "5", "--seed", "3"])
        assert r.exit_code == 0, r.output
        assert r.output.count("AUC") == 4

    def test_coverage_output(self, runner, tmp_path):
        data = build_dataset(runner, tmp_path)
        features = extract_features(runner, tmp_path, data)
        r = runner.invoke(main, ["coverage", "--features", str(features),
                                 "--folds", "5", "--seed", "3"])
        assert r.exit_code == 0, r.output
        assert r.output.count("coverage") == 10

    def test_degrade_command(self, runner, tmp_path):
        data = build_dataset(runner, tmp_path, n=8, seed=6)
        out = tmp_path / "out"
        r = runner.invoke(main, ["degrade", "--dataset", str(data),
                                 "--out", str(out), "--seed", "6"])
        assert r.exit_code == 0, r.output
        assert "degraded" in r.output
        assert (out / "degradation.json").exists()

    def test_missing_features_usage_error(self, runner, tmp_path):
        r = runner.invoke(main, ["eval", "--features", str(tmp_path / "nope.jsonl")])
        assert r.exit_code == 2


class TestTheoryCertify:
    def test_reference_case(self, runner, tmp_path):
        out = tmp_path / "cert.json"
        r = runner.invoke(main, [
            "theory", "certify", "--alpha", "1.0", "--lambda", "1.0", "--a", "2.0",
            "--b", "1.0", "--c", "0.0", "--hpref", "1.0", "--cap", "0.0",
            "--out", str(out),
        ])
        assert r.exit_code == 0, r.output
        payload = json.loads(out.read_text())
        assert payload["bound_satisfied"] is True
        assert payload["min_second_derivative"] >= 1.0 - 1e-9
        assert payload["gd_converged"] is True

    def test_invalid_params_exit_code(self, runner):
        r = runner.invoke(main, ["theory", "certify", "--alpha", "-1",
                                 "--lambda", "1", "--a", "2"])
        assert r.exit_code == 3
