from __future__ import annotations

import json

import pytest
import yaml

from scanhist.cli import main
from test_harness import EASY_CONFIG


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(EASY_CONFIG))
    return path


class TestCli:
    def test_train_then_eval_and_features(self, tmp_path, config_path, capsys):
        train_out = tmp_path / "train"
        assert main(["train", "--config", str(config_path), "--out", str(train_out)]) == 0
        shown = capsys.readouterr().out
        assert "test accuracy" in shown
        assert (train_out / "checkpoint.npz").is_file()

        synth_out = tmp_path / "synth"
        assert main(["synth", "--config", str(config_path), "--out", str(synth_out)]) == 0
        manifest = synth_out / "manifest.csv"
        assert manifest.is_file()

        eval_out = tmp_path / "eval"
        assert main([
            "eval", "--checkpoint", str(train_out / "checkpoint.npz"),
            "--manifest", str(manifest), "--target", "subject",
            "--out", str(eval_out),
        ]) == 0
        report = json.loads((eval_out / "report.json").read_text())
        assert report["command"] == "eval"
        assert 0.0 <= report["accuracy"] <= 1.0

        feat_out = tmp_path / "features"
        first_recording = synth_out / "recordings" / "rec_00000.csv"
        assert main([
            "features", "--model", str(train_out / "checkpoint.npz"),
            "--recording", str(first_recording), "--out", str(feat_out),
        ]) == 0
        assert (feat_out / "features.csv").is_file()
        assert (feat_out / "features.png").is_file()

    def test_seed_flag_overrides_config(self, tmp_path, config_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        main(["train", "--config", str(config_path), "--out", str(out_a), "--seed", "99"])
        main(["train", "--config", str(config_path), "--out", str(out_b), "--seed", "99"])
        report_a = json.loads((out_a / "report.json").read_text())
        report_b = json.loads((out_b / "report.json").read_text())
        assert report_a["seed"] == 99
        report_a.pop("wall_clock_seconds")
        report_b.pop("wall_clock_seconds")
        assert report_a == report_b

    def test_sweep_command(self, tmp_path):
        doc = json.loads(json.dumps(EASY_CONFIG))
        doc["schedule"]["total_epochs"] = 3
        doc["schedule"]["switch_epoch"] = 2
        doc["sweep"] = {"angle_set_counts": [8, 16], "set_sizes": [2], "repeats": 1}
        config = tmp_path / "sweep.yaml"
        config.write_text(yaml.safe_dump(doc))
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(config), "--out", str(out)]) == 0
        assert (out / "sweep.csv").is_file()
        assert (out / "sweep.png").is_file()
        table = (out / "sweep.txt").read_text()
        assert "best" in table

    def test_bad_config_exits_nonzero(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("data: {}\n")
        assert main(["train", "--config", str(bad)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_help_lists_config_keys(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        assert "range_lr" in capsys.readouterr().out
