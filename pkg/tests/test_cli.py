import csv
import io
import json
from unittest.mock import patch

import numpy as np
import pytest
from click.testing import CliRunner

from spectnt.autograd.gradcheck import GradCheckReport
from spectnt.cli.commands import cli, main
from spectnt.diagnostics import SuiteResult
from spectnt.features.wav import WaveBuffer, write_wav
from spectnt.reporting.formatter import section_markers

MICRO_RUN = {
    "task": "tagging", "frames": 8, "bins": 16, "p_t": 2, "k": 8, "d": 8, "h_k": 2, "h_d": 2,
    "o_d": 4, "L": 1, "dropout": 0.0, "batch_size": 4,
}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(MICRO_RUN))
    return path


@pytest.fixture
def trained(runner, run_config, tagging_dataset, tmp_path):
    out = tmp_path / "run"
    result = runner.invoke(cli, [
        "train", "--config", str(run_config), "--data", str(tagging_dataset), "--out", str(out),
        "--steps", "2", "--eval-every", "1",
    ])
    assert result.exit_code == 0, result.output
    return out


class TestGenDataCommand:
    def test_writes_manifest(self, runner, tmp_path):
        out = tmp_path / "chords"
        result = runner.invoke(cli, [
            "gen-data", "--task", "chord", "--out", str(out), "--train-size", "3",
            "--val-size", "2", "--test-size", "1", "--frames", "8", "--workers", "2",
        ])
        assert result.exit_code == 0, result.output
        assert "Wrote 6 chord clip(s) (3/2/1)" in result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["spec"]["frames"] == 8
        assert len(list((out / "train").glob("*.stnt"))) == 3

    def test_invalid_spec_is_config_error(self, runner, tmp_path):
        args = ["gen-data", "--task", "chord", "--classes", "10", "--out", str(tmp_path)]
        result = runner.invoke(cli, args)
        assert result.exit_code == 2
        assert "config error" in result.output

    def test_unknown_task(self, runner, tmp_path):
        result = runner.invoke(cli, ["gen-data", "--task", "speech", "--out", str(tmp_path)])
        assert result.exit_code == 2


class TestTrainCommand:
    def test_writes_run_outputs(self, trained):
        for name in ("run.json", "history.csv", "best.stnc", "last.stnc"):
            assert (trained / name).exists()
        assert json.loads((trained / "run.json").read_text())["steps"] == 2

    def test_data_from_run_config(self, runner, tagging_dataset, tmp_path):
        path = tmp_path / "with-data.json"
        path.write_text(json.dumps({**MICRO_RUN, "data": str(tagging_dataset)}))
        out = tmp_path / "run"
        result = runner.invoke(cli, ["train", "--config", str(path), "--out", str(out), "--steps", "1"])
        assert result.exit_code == 0, result.output
        assert json.loads((out / "run.json").read_text())["data"] == str(tagging_dataset)

    def test_data_flag_wins_over_run_config(self, runner, tagging_dataset, tmp_path):
        path = tmp_path / "with-data.json"
        path.write_text(json.dumps({**MICRO_RUN, "data": str(tmp_path / "missing")}))
        out = tmp_path / "run"
        result = runner.invoke(cli, [
            "train", "--config", str(path), "--data", str(tagging_dataset), "--out", str(out),
            "--steps", "1",
        ])
        assert result.exit_code == 0, result.output
        assert (out / "last.stnc").exists()

    def test_requires_output_dir(self, runner, run_config, tagging_dataset, monkeypatch):
        monkeypatch.delenv("SPECTNT_OUT", raising=False)
        result = runner.invoke(cli, ["train", "--config", str(run_config), "--data", str(tagging_dataset)])
        assert result.exit_code == 2
        assert "output directory" in result.output

    def test_task_mismatch(self, runner, tmp_path, tagging_dataset):
        result = runner.invoke(cli, [
            "train", "--preset", "chord-desk", "--data", str(tagging_dataset), "--out", str(tmp_path),
        ])
        assert result.exit_code == 2
        assert "tagging clips" in result.output

    def test_out_from_environment(self, runner, run_config, tagging_dataset, tmp_path):
        out = tmp_path / "env-run"
        result = runner.invoke(
            cli,
            ["train", "--config", str(run_config), "--data", str(tagging_dataset), "--steps", "1"],
            env={"SPECTNT_OUT": str(out)},
        )
        assert result.exit_code == 0, result.output
        assert (out / "last.stnc").exists()


class TestEvalCommand:
    def test_prints_metrics(self, runner, trained, tagging_dataset):
        args = ["eval", "--checkpoint", str(trained / "last.stnc"), "--data", str(tagging_dataset)]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        doc = json.loads(result.output)
        assert set(doc["metrics"]) == {"roc_auc", "pr_auc"}
        assert doc["counts"]["clips"] == 4

    def test_min_metric_failure(self, runner, trained, tagging_dataset):
        result = runner.invoke(cli, [
            "eval", "--checkpoint", str(trained / "last.stnc"), "--data", str(tagging_dataset),
            "--min-metric", "101",
        ])
        assert result.exit_code == 1
        assert "is below 101.0%" in result.output

    def test_unknown_split(self, runner, trained, tagging_dataset):
        result = runner.invoke(cli, [
            "eval", "--checkpoint", str(trained / "last.stnc"), "--data", str(tagging_dataset),
            "--split", "holdout",
        ])
        assert result.exit_code == 2

    def test_corrupt_checkpoint(self, runner, tmp_path, tagging_dataset):
        bad = tmp_path / "bad.stnc"
        bad.write_bytes(b"nope")
        result = runner.invoke(cli, ["eval", "--checkpoint", str(bad), "--data", str(tagging_dataset)])
        assert result.exit_code == 3
        assert "FileFormatError" in result.output


class TestPredictCommand:
    def test_tensor_inputs_to_stdout(self, runner, trained, tagging_dataset):
        inputs = sorted((tagging_dataset / "test").glob("*.stnt"))[:2]
        args = ["predict", "--checkpoint", str(trained / "last.stnc"), *map(str, inputs)]
        result = runner.invoke(cli, args)
        assert result.exit_code == 0, result.output
        rows = list(csv.reader(io.StringIO(result.output)))
        assert rows[0] == ["input", "tag_0", "tag_1", "tag_2", "tag_3"]
        assert [r[0] for r in rows[1:]] == [p.name for p in inputs]
        assert all(0.0 < float(v) < 1.0 for v in rows[1][1:])

    def test_writes_output_file(self, runner, trained, tagging_dataset, tmp_path):
        inputs = sorted((tagging_dataset / "val").glob("*.stnt"))
        output = tmp_path / "pred.csv"
        result = runner.invoke(cli, [
            "predict", "--checkpoint", str(trained / "last.stnc"), "--output", str(output), *map(str, inputs),
        ])
        assert result.exit_code == 0, result.output
        assert len(output.read_text().splitlines()) == 1 + len(inputs)

    def test_wav_with_wrong_geometry_is_runtime_error(self, runner, trained, tmp_path):
        wav = tmp_path / "tone.wav"
        t = np.arange(22050 * 5) / 22050
        write_wav(wav, WaveBuffer(0.3 * np.sin(2 * np.pi * 440 * t), 22050))
        result = runner.invoke(cli, ["predict", "--checkpoint", str(trained / "last.stnc"), str(wav)])
        assert result.exit_code == 3
        assert "DimensionError" in result.output


class TestGradcheckCommand:
    @staticmethod
    def suite(error):
        return SuiteResult({"model_full": GradCheckReport({"fpe": error}, 1e-5, 1e-4)})

    def test_passing_suite(self, runner):
        with patch("spectnt.cli.commands.run_suite", return_value=self.suite(1e-7)) as run:
            result = runner.invoke(cli, ["gradcheck", "--seed", "3", "--skip-layers"])
        assert result.exit_code == 0
        assert "gradcheck passed" in result.output
        run.assert_called_once_with(seed=3, max_checks=12, layers=False)

    def test_failing_suite(self, runner):
        with patch("spectnt.cli.commands.run_suite", return_value=self.suite(0.5)):
            result = runner.invoke(cli, ["gradcheck"])
        assert result.exit_code == 1
        assert "FAIL" in result.output


class TestAblateCommand:
    def test_prints_and_updates_report(self, runner, run_config, tagging_dataset, tmp_path):
        report = tmp_path / "REPORT.md"
        report.write_text("# Results\n")
        result = runner.invoke(cli, [
            "ablate", "--config", str(run_config), "--data", str(tagging_dataset), "--steps", "1",
            "--eval-every", "1", "--variants", "full", "--variants", "A3", "--report", str(report),
        ])
        assert result.exit_code == 0, result.output
        start, end = section_markers("tagging")
        assert start in result.output
        content = report.read_text()
        assert content.startswith("# Results")
        assert "| A3 |" in content and end in content

    def test_needs_evaluation(self, runner, run_config, tagging_dataset):
        result = runner.invoke(cli, [
            "ablate", "--config", str(run_config), "--data", str(tagging_dataset), "--eval-every", "0",
        ])
        assert result.exit_code == 2


class TestMain:
    def test_unknown_flag(self):
        assert main(["train", "--bogus"]) == 2

    def test_success(self, tmp_path):
        assert main(["gen-data", "--task", "tagging", "--out", str(tmp_path), "--train-size", "2",
                     "--val-size", "1", "--test-size", "1"]) == 0

    def test_config_error(self, tmp_path):
        assert main(["gen-data", "--task", "chord", "--bins", "12", "--out", str(tmp_path)]) == 2
