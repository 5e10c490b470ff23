from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from scanhist.checkpoint import CheckpointError
from scanhist.config import sweep_spec_from_dict, train_config_from_dict
from scanhist.dataset import load_manifest, load_recordings, split_disjoint
from scanhist.features import forward, init_bank, save_bank
from scanhist.gaze import compute_angles
from scanhist.harness import (
    derive_seeds,
    run_eval,
    run_features,
    run_sweep,
    run_synth,
    run_train,
)

EASY_CONFIG = {
    "seed": 11,
    "data": {
        "target": "subject",
        "split_fraction": 0.5,
        "synthetic": {
            "classes": [
                {"name": "east", "modes": [{"mean": 0, "concentration": 8}]},
                {"name": "north", "modes": [{"mean": 90, "concentration": 8}]},
            ],
            "samples_per_recording": 40,
            "recordings_per_class": 16,
        },
    },
    "features": {"num_sets": 32, "set_size": 2, "range_lr": 0.001},
    "network": {"hidden_layers": [16]},
    "schedule": {
        "lr_initial": 0.01, "lr_reduced": 0.001, "switch_epoch": 6,
        "total_epochs": 8, "batch_size": 8, "validation_fraction": 0.2,
    },
}


def easy_config():
    return train_config_from_dict(EASY_CONFIG)


def strip_wall_clock(report_dict):
    out = dict(report_dict)
    out.pop("wall_clock_seconds")
    return out


class TestRunTrain:
    def test_writes_report_checkpoint_and_figures(self, tmp_path):
        outcome = run_train(easy_config(), out_dir=tmp_path)
        assert (tmp_path / "report.json").is_file()
        assert (tmp_path / "report.txt").is_file()
        assert (tmp_path / "history.csv").is_file()
        assert (tmp_path / "training_curves.png").is_file()
        assert (tmp_path / "checkpoint.npz").is_file()
        assert 0.0 <= outcome.report.accuracy <= 1.0
        assert outcome.report.validation_accuracy is not None
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["config"]["features"]["num_sets"] == 32
        assert report["accuracy"] == outcome.report.accuracy
        # the echoed config is complete: it reconstructs the very same run
        rebuilt = train_config_from_dict(report["config"])
        assert rebuilt.resolved() == report["config"]

    def test_converges_on_easy_synthetic(self, tmp_path):
        outcome = run_train(easy_config(), out_dir=None)
        assert outcome.report.accuracy >= 0.9
        assert outcome.report.validation_accuracy >= 0.9

    def test_rerun_is_identical_up_to_wall_clock(self, tmp_path):
        first = run_train(easy_config(), out_dir=tmp_path / "a")
        second = run_train(easy_config(), out_dir=tmp_path / "b")
        assert strip_wall_clock(first.report.to_dict()) == strip_wall_clock(
            second.report.to_dict()
        )
        assert (tmp_path / "a/history.csv").read_text() == (tmp_path / "b/history.csv").read_text()


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    data_dir = tmp_path_factory.mktemp("synthdata")
    config = easy_config()
    manifest_path = run_synth(config, data_dir)
    from dataclasses import replace

    from scanhist.config import DataParams

    file_config = replace(
        config,
        data=DataParams(manifest=str(manifest_path), target=config.data.target,
                        synthetic=None, split_fraction=0.5),
    )
    outcome = run_train(file_config, out_dir=out)
    return out, manifest_path, file_config, outcome


class TestRunEval:
    def test_eval_on_training_half_matches_validation(self, trained, tmp_path):
        out, manifest_path, config, outcome = trained
        # rebuild the training half exactly as run_train derived it
        split_seed = derive_seeds(config.seed, 4)[0]
        manifest = load_manifest(manifest_path, config.data.target)
        train_m, _ = split_disjoint(manifest, fraction=0.5, seed=split_seed)
        train_manifest = tmp_path / "train_manifest.csv"
        with open(train_manifest, "w", newline="") as fh:
            writer = csv.writer(fh)
            for entry in train_m.entries:
                writer.writerow([entry.path, entry.subject_id, entry.stimulus_id])
        report = run_eval(out / "checkpoint.npz", train_manifest, "subject")
        assert report.accuracy >= outcome.report.validation_accuracy - 0.05

    def test_eval_twice_identical(self, trained):
        out, manifest_path, config, _ = trained
        a = run_eval(out / "checkpoint.npz", manifest_path, "subject")
        b = run_eval(out / "checkpoint.npz", manifest_path, "subject")
        assert strip_wall_clock(a.to_dict()) == strip_wall_clock(b.to_dict())

    def test_eval_does_not_mutate_checkpoint(self, trained):
        out, manifest_path, _, _ = trained
        before = (out / "checkpoint.npz").read_bytes()
        run_eval(out / "checkpoint.npz", manifest_path, "subject")
        assert (out / "checkpoint.npz").read_bytes() == before

    def test_truncated_checkpoint_clean_error(self, trained, tmp_path):
        out, manifest_path, _, _ = trained
        broken = tmp_path / "broken.npz"
        data = (out / "checkpoint.npz").read_bytes()
        broken.write_bytes(data[: len(data) // 3])
        with pytest.raises(CheckpointError):
            run_eval(broken, manifest_path, "subject")


def sweep_doc(counts, sizes, repeats, epochs=4):
    doc = json.loads(json.dumps(EASY_CONFIG))
    doc["schedule"]["total_epochs"] = epochs
    doc["schedule"]["switch_epoch"] = epochs - 1
    doc["sweep"] = {"angle_set_counts": counts, "set_sizes": sizes, "repeats": repeats}
    return doc


class TestRunSweep:
    def test_grid_shape_and_outputs(self, tmp_path):
        spec = sweep_spec_from_dict(sweep_doc([8, 16], [1, 2], repeats=1))
        result = run_sweep(spec, out_dir=tmp_path)
        assert len(result.cells) == 4
        assert all(len(c.accuracies) == 1 for c in result.cells)
        assert result.best in result.cells
        assert (tmp_path / "sweep.csv").is_file()
        assert (tmp_path / "sweep.txt").is_file()
        assert (tmp_path / "sweep.png").is_file()
        with open(tmp_path / "sweep.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4  # cells x repeats

    def test_rerun_identical(self):
        spec = sweep_spec_from_dict(sweep_doc([8], [1, 2], repeats=2))
        a = run_sweep(spec)
        b = run_sweep(spec)
        assert [c.accuracies for c in a.cells] == [c.accuracies for c in b.cells]

    def test_failing_cell_recorded_not_fatal(self, tmp_path):
        spec = sweep_spec_from_dict(sweep_doc([8], [1, 0], repeats=1))
        result = run_sweep(spec, out_dir=tmp_path)
        good = [c for c in result.cells if c.error is None]
        bad = [c for c in result.cells if c.error is not None]
        assert len(good) == 1 and len(bad) == 1
        assert bad[0].set_size == 0
        assert "failed" in (tmp_path / "sweep.txt").read_text()

    def test_empty_grid_rejected(self):
        with pytest.raises(Exception, match="sweep"):
            sweep_spec_from_dict(sweep_doc([], [], repeats=1))

    def test_accuracy_rises_with_set_count_on_average(self):
        # 2x2 grid, 5 repeat seeds; only the ordering is asserted
        from accept_fixtures import TREND_SWEEP_DOC

        doc = json.loads(json.dumps(TREND_SWEEP_DOC))
        doc["sweep"] = {"angle_set_counts": [16, 64], "set_sizes": [2, 3], "repeats": 5}
        result = run_sweep(sweep_spec_from_dict(doc))
        assert len(result.cells) == 4
        mean_at = lambda count: np.mean(
            [c.mean_accuracy for c in result.cells if c.angle_sets == count]
        )
        assert mean_at(64) >= mean_at(16)


class TestRunFeaturesAndSynth:
    def test_synth_manifest_round_trips(self, tmp_path):
        manifest_path = run_synth(easy_config(), tmp_path)
        manifest = load_manifest(manifest_path, "subject")
        assert len(manifest) == 32
        recs = load_recordings(manifest)
        assert {r.subject_id for r in recs} == {"east", "north"}

    def test_features_dump_matches_forward_bit_exactly(self, tmp_path):
        manifest_path = run_synth(easy_config(), tmp_path / "data")
        manifest = load_manifest(manifest_path, "subject")
        recs = load_recordings(manifest)
        bank = init_bank(8, 2, seed=5)
        bank_path = tmp_path / "bank.txt"
        save_bank(bank, bank_path)
        rec_path = manifest.entries[0].path
        csv_path, empty = run_features(bank_path, rec_path, tmp_path / "feat")
        assert not empty
        tensor, _ = forward(bank, compute_angles(recs[0]))
        with open(csv_path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 8 * 4
        for row in rows:
            i, b = int(row["set_index"]), int(row["bin_index"])
            assert float(row["value"]) == tensor.values[i, b]
        sums = tensor.values.sum(axis=1)
        np.testing.assert_allclose(sums, 1.0, atol=1e-9)
        assert (tmp_path / "feat" / "window_counts.csv").is_file()
        assert (tmp_path / "feat" / "features.png").is_file()

    def test_short_recording_flagged(self, tmp_path):
        bank = init_bank(4, 3, seed=1)
        bank_path = tmp_path / "bank.txt"
        save_bank(bank, bank_path)
        rec_path = tmp_path / "tiny.csv"
        rec_path.write_text("x,y\n0,0\n1,1\n")  # one angle < set_size
        csv_path, empty = run_features(bank_path, rec_path, tmp_path / "feat")
        assert empty
        with open(csv_path) as fh:
            values = [float(r["value"]) for r in csv.DictReader(fh)]
        assert all(v == 0.0 for v in values)
