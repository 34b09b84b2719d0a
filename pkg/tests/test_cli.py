import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ensemblefuse.cli import main
from ensemblefuse.model_io import read_predictions

SMALL_CONFIG = {
    "seed": 7,
    "synth": {
        "n_samples": 120,
        "class_names": ["alpha", "beta", "gamma"],
        "prevalences": [0.4, 0.2, 0.1],
        "n_features": 6,
        "model_noise": [0.4, 0.9],
    },
    "train": {"max_epochs": 4, "patience": 4, "batch_size": 16},
}


def _write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def fixtures(tmp_path):
    labels = _write_csv(
        tmp_path / "labels.csv",
        ["A", "B"],
        [[0, 1], [0, 0], [1, 1], [1, 0]],
    )
    perfect = _write_csv(
        tmp_path / "perfect.csv",
        ["A", "B"],
        [[0.0, 1.0], [0.0, 0.0], [1.0, 1.0], [1.0, 0.0]],
    )
    constant = _write_csv(
        tmp_path / "constant.csv",
        ["A", "B"],
        [[0.5, 0.5]] * 4,
    )
    noisy = _write_csv(
        tmp_path / "noisy.csv",
        ["A", "B"],
        [[0.2, 0.7], [0.4, 0.1], [0.7, 0.8], [0.9, 0.3]],
    )
    return tmp_path, labels, perfect, constant, noisy


class TestEvaluate:
    def test_perfect_predictions(self, fixtures, capsys):
        tmp, labels, perfect, *_ = fixtures
        out = tmp / "report.json"
        assert main(["evaluate", "--pred", str(perfect), "--labels", str(labels), "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["mean"] == 1.0
        assert payload["per_class"] == {"A": 1.0, "B": 1.0}
        assert payload["defined_count"] == 2
        table = capsys.readouterr().out.splitlines()
        assert table[0].split() == ["A", "B", "Mean"]
        assert table[1].split() == ["1.0000", "1.0000", "1.0000"]

    def test_constant_predictions(self, fixtures):
        tmp, labels, _, constant, _ = fixtures
        out = tmp / "report.json"
        assert main(["evaluate", "--pred", str(constant), "--labels", str(labels), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["mean"] == 0.5

    def test_degenerate_class_reported(self, tmp_path, capsys):
        labels = _write_csv(tmp_path / "y.csv", ["A", "B"], [[0, 1], [1, 1]])
        preds = _write_csv(tmp_path / "p.csv", ["A", "B"], [[0.1, 0.5], [0.9, 0.5]])
        out = tmp_path / "report.json"
        assert main(["evaluate", "--pred", str(preds), "--labels", str(labels), "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["per_class"]["B"] is None
        assert payload["defined_count"] == 1
        assert "undefined" in capsys.readouterr().err

    def test_validation_failure_exits_2(self, fixtures, capsys):
        tmp, labels, *_ = fixtures
        missing = tmp / "nope.csv"
        code = main(["evaluate", "--pred", str(missing), "--labels", str(labels), "--out", str(tmp / "r.json")])
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestLoss:
    def test_bce_mode_matches_oracle(self, fixtures, capsys):
        tmp, labels, _, _, noisy = fixtures
        assert main([
            "loss", "--pred", str(noisy), "--labels", str(labels),
            "--gamma-pos", "0", "--gamma-neg", "0", "--margin", "0",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        p = read_predictions(noisy).values
        y = np.array([[0, 1], [0, 0], [1, 1], [1, 0]], dtype=float)
        eps = 1e-7
        pc = np.clip(p, eps, 1 - eps)
        expected = float(-(y * np.log(pc) + (1 - y) * np.log(1 - pc)).sum() / 4)
        assert payload["loss"] == pytest.approx(expected, abs=1e-12)

    def test_defaults_echoed(self, fixtures, capsys):
        tmp, labels, _, _, noisy = fixtures
        assert main(["loss", "--pred", str(noisy), "--labels", str(labels)]) == 0
        config = json.loads(capsys.readouterr().out)["config"]
        assert config == {
            "gamma_pos": 1.0,
            "gamma_neg": 4.0,
            "margin": 0.05,
            "weighted": False,
            "prob_clamp_epsilon": 1e-7,
        }

    def test_perfect_prediction_loss_tiny(self, fixtures, capsys):
        tmp, labels, perfect, *_ = fixtures
        assert main(["loss", "--pred", str(perfect), "--labels", str(labels), "--weighted"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert 0.0 <= payload["loss"] < 1e-5
        assert payload["config"]["weighted"] is True

    def test_bad_parameter_exits_2(self, fixtures):
        tmp, labels, _, _, noisy = fixtures
        assert main(["loss", "--pred", str(noisy), "--labels", str(labels), "--margin", "1.5"]) == 2


class TestFuse:
    def test_identity_weights_byte_identical(self, fixtures):
        tmp, _, _, _, noisy = fixtures
        canonical = tmp / "canonical.csv"
        from ensemblefuse.model_io import write_predictions

        write_predictions(read_predictions(noisy), canonical)
        out = tmp / "fused.csv"
        assert main(["fuse", "--pred", str(noisy), "--pred", str(tmp / "constant.csv"),
                     "--weights", "1,0", "--out", str(out)]) == 0
        assert out.read_bytes() == canonical.read_bytes()

    def test_midpoint_weights(self, tmp_path):
        zeros = _write_csv(tmp_path / "z.csv", ["A"], [[0.0]] * 3)
        ones = _write_csv(tmp_path / "o.csv", ["A"], [[1.0]] * 3)
        out = tmp_path / "fused.csv"
        assert main(["fuse", "--pred", str(zeros), "--pred", str(ones),
                     "--weights", "0.6,0.4", "--out", str(out)]) == 0
        np.testing.assert_array_equal(read_predictions(out).values, np.full((3, 1), 0.4))

    def test_unnormalized_weights_projected_with_warning(self, fixtures, capsys):
        tmp, _, _, constant, noisy = fixtures
        out = tmp / "fused.csv"
        assert main(["fuse", "--pred", str(noisy), "--pred", str(constant),
                     "--weights", "2,2", "--out", str(out)]) == 0
        assert "projected" in capsys.readouterr().err
        expected = 0.5 * read_predictions(noisy).values + 0.5 * 0.5
        np.testing.assert_allclose(read_predictions(out).values, expected, atol=1e-15)

    def test_weight_arity_mismatch_exits_2(self, fixtures):
        tmp, _, _, constant, noisy = fixtures
        code = main(["fuse", "--pred", str(noisy), "--pred", str(constant),
                     "--weights", "1,0,0", "--out", str(tmp / "f.csv")])
        assert code == 2


class TestRoc:
    def test_perfect_class_hits_corner(self, fixtures):
        tmp, labels, perfect, *_ = fixtures
        out = tmp / "roc.csv"
        assert main(["roc", "--pred", str(perfect), "--labels", str(labels),
                     "--class", "A", "--out", str(out)]) == 0
        rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
        points = {(float(r[1]), float(r[2])) for r in rows}
        assert (0.0, 1.0) in points

    def test_unknown_class_exits_2_listing_names(self, fixtures, capsys):
        tmp, labels, perfect, *_ = fixtures
        code = main(["roc", "--pred", str(perfect), "--labels", str(labels),
                     "--class", "Z", "--out", str(tmp / "roc.csv")])
        assert code == 2
        err = capsys.readouterr().err
        assert "'Z'" in err and "A" in err and "B" in err

    def test_trapezoid_matches_evaluate(self, fixtures):
        tmp, labels, _, _, noisy = fixtures
        report_path = tmp / "report.json"
        roc_path = tmp / "roc.csv"
        assert main(["evaluate", "--pred", str(noisy), "--labels", str(labels), "--out", str(report_path)]) == 0
        assert main(["roc", "--pred", str(noisy), "--labels", str(labels),
                     "--class", "A", "--out", str(roc_path)]) == 0
        rows = np.array(
            [[float(v) for v in line.split(",")] for line in roc_path.read_text().splitlines()[1:]]
        )
        area = float(np.trapezoid(rows[:, 2], rows[:, 1]))
        reported = json.loads(report_path.read_text())["per_class"]["A"]
        assert area == pytest.approx(reported, abs=1e-12)

    def test_degenerate_class_exits_2(self, tmp_path):
        labels = _write_csv(tmp_path / "y.csv", ["A"], [[1], [1]])
        preds = _write_csv(tmp_path / "p.csv", ["A"], [[0.2], [0.8]])
        assert main(["roc", "--pred", str(preds), "--labels", str(labels),
                     "--class", "A", "--out", str(tmp_path / "roc.csv")]) == 2


class TestOptimize:
    def test_duplicate_model_objective_equals_single(self, fixtures, capsys):
        tmp, labels, _, _, noisy = fixtures
        report = tmp / "single.json"
        assert main(["evaluate", "--pred", str(noisy), "--labels", str(labels), "--out", str(report)]) == 0
        single_mean = json.loads(report.read_text())["mean"]
        out = tmp / "weights.json"
        assert main(["optimize", "--pred", str(noisy), "--pred", str(noisy),
                     "--labels", str(labels), "--seed", "3", "--max-gen", "5",
                     "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["objective"] == single_mean
        assert "seeded-population guarantee" in capsys.readouterr().err

    def test_single_model_exits_2(self, fixtures):
        tmp, labels, _, _, noisy = fixtures
        code = main(["optimize", "--pred", str(noisy), "--labels", str(labels),
                     "--seed", "1", "--out", str(tmp / "w.json")])
        assert code == 2

    def test_json_schema(self, fixtures):
        tmp, labels, _, constant, noisy = fixtures
        out = tmp / "weights.json"
        assert main(["optimize", "--pred", str(noisy), "--pred", str(constant),
                     "--labels", str(labels), "--seed", "11", "--max-gen", "8",
                     "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert set(payload) == {"weights", "objective", "generations", "history"}
        assert len(payload["weights"]) == 2


class TestSynthAndTrain:
    def _config_path(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(SMALL_CONFIG), encoding="utf-8")
        return path

    def test_synth_outputs(self, tmp_path, capsys):
        out = tmp_path / "synth"
        assert main(["synth", "--config", str(self._config_path(tmp_path)), "--out", str(out)]) == 0
        for name in (
            "synth_config.json", "features.csv", "labels.csv", "splits.json",
            "model_1.csv", "model_2.csv", "labels_val.csv", "model_1_test.csv",
        ):
            assert (out / name).exists(), name
        splits = json.loads((out / "splits.json").read_text())
        assert len(splits["train"]) + len(splits["test"]) + len(splits["val"]) == 120
        labels = (out / "labels.csv").read_text().splitlines()
        assert labels[0] == "alpha,beta,gamma"
        counts = np.array([[int(v) for v in line.split(",")] for line in labels[1:]]).sum(axis=0)
        np.testing.assert_array_equal(counts, [48, 24, 12])

    def test_synth_deterministic_across_runs(self, tmp_path):
        cfg = self._config_path(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["synth", "--config", str(cfg), "--out", str(b)]) == 0
        for f in sorted(a.iterdir()):
            assert (b / f.name).read_bytes() == f.read_bytes(), f.name

    def test_train_outputs(self, tmp_path, capsys):
        out = tmp_path / "train"
        assert main(["train", "--config", str(self._config_path(tmp_path)), "--out", str(out)]) == 0
        model = json.loads((out / "model.json").read_text())
        assert model["classes"] == ["alpha", "beta", "gamma"]
        assert np.asarray(model["weight"]).shape == (6, 3)
        history = json.loads((out / "history.json").read_text())["epochs"]
        assert len(history) <= 4
        assert {"epoch", "train_loss", "val_mean_auc"} == set(history[0])
        for name in ("toy_val.csv", "toy_test.csv", "labels_val.csv", "labels_test.csv"):
            assert (out / name).exists(), name

    def test_train_deterministic_across_runs(self, tmp_path, numpy_backend):
        cfg = self._config_path(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["train", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["train", "--config", str(cfg), "--out", str(b)]) == 0
        for f in sorted(a.iterdir()):
            assert (b / f.name).read_bytes() == f.read_bytes(), f.name

    def test_seed_env_fallback(self, tmp_path, monkeypatch):
        cfg_without_seed = {k: v for k, v in SMALL_CONFIG.items() if k != "seed"}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg_without_seed), encoding="utf-8")
        env_dir, flag_dir = tmp_path / "env", tmp_path / "flag"
        monkeypatch.setenv("ENSEMBLEFUSE_SEED", "123")
        assert main(["synth", "--config", str(cfg_path), "--out", str(env_dir)]) == 0
        monkeypatch.delenv("ENSEMBLEFUSE_SEED")
        assert main(["synth", "--config", str(cfg_path), "--seed", "123", "--out", str(flag_dir)]) == 0
        assert (env_dir / "labels.csv").read_bytes() == (flag_dir / "labels.csv").read_bytes()

    def test_split_flag_overrides(self, tmp_path):
        out = tmp_path / "synth"
        assert main(["synth", "--config", str(self._config_path(tmp_path)),
                     "--split", "0.5,0.25,0.25", "--out", str(out)]) == 0
        splits = json.loads((out / "splits.json").read_text())
        assert (len(splits["train"]), len(splits["test"]), len(splits["val"])) == (60, 30, 30)

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"synth": {"n_sample": 10}}), encoding="utf-8")
        assert main(["synth", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
        assert "unknown key" in capsys.readouterr().err


class TestConsoleEntryPoint:
    def test_module_invocation(self, fixtures):
        tmp, labels, perfect, *_ = fixtures
        out = tmp / "report.json"
        result = subprocess.run(
            [sys.executable, "-m", "ensemblefuse.cli", "evaluate",
             "--pred", str(perfect), "--labels", str(labels), "--out", str(out)],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
        assert json.loads(out.read_text())["mean"] == 1.0
