from __future__ import annotations

import numpy as np
import pytest

from scanhist.checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from scanhist.config import (
    ConfigError,
    load_sweep_spec,
    load_train_config,
    train_config_from_dict,
)
from scanhist.dataset import ClassTarget
from scanhist.features import SignMode, init_bank
from scanhist.network import FeedforwardClassifier, NetworkSpec, TrainSchedule

SYNTH_YAML = """
seed: 7
data:
  target: subject
  split_fraction: 0.5
  synthetic:
    classes:
      - name: east
        modes: [{mean: 0, concentration: 8}]
      - name: north
        modes: [{mean: 90, concentration: 8}]
    samples_per_recording: 40
    recordings_per_class: 10
features:
  num_sets: 32
  set_size: 3
  range_lr: 0.01
network:
  hidden_layers: [16]
schedule:
  total_epochs: 4
  switch_epoch: 2
  batch_size: 8
"""


class TestTrainConfig:
    def test_yaml_round_trip_through_resolved(self, tmp_path):
        cfg_path = tmp_path / "c.yaml"
        cfg_path.write_text(SYNTH_YAML)
        config = load_train_config(cfg_path)
        assert config.seed == 7
        assert config.features.num_sets == 32
        assert config.features.sign_mode is SignMode.ADDITIVE
        assert config.data.target is ClassTarget.SUBJECT
        resolved = config.resolved()
        # resolved dict reconstructs the identical config
        assert train_config_from_dict(resolved).resolved() == resolved

    def test_defaults_follow_schedule(self):
        config = train_config_from_dict(
            {"data": {"synthetic": {
                "classes": [
                    {"name": "a", "modes": [{"mean": 0, "concentration": 5}]},
                    {"name": "b", "modes": [{"mean": 90, "concentration": 5}]},
                ],
                "samples_per_recording": 10,
                "recordings_per_class": 4,
            }}}
        )
        assert config.schedule.lr_initial == 1e-3
        assert config.schedule.lr_reduced == 1e-4
        assert config.schedule.switch_epoch == 50
        assert config.schedule.total_epochs == 100
        assert config.schedule.momentum == 0.9
        assert config.schedule.validation_fraction == 0.2

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown keys"):
            train_config_from_dict({"data": {"manifest": "m.csv", "typo_key": 1}})

    def test_needs_exactly_one_data_source(self):
        with pytest.raises(ConfigError, match="exactly one"):
            train_config_from_dict({"data": {}})

    def test_sweep_spec(self, tmp_path):
        cfg_path = tmp_path / "s.yaml"
        cfg_path.write_text(SYNTH_YAML + "\nsweep:\n  angle_set_counts: [16, 64]\n  set_sizes: [2, 3]\n  repeats: 2\n")
        spec = load_sweep_spec(cfg_path)
        assert spec.angle_set_counts == (16, 64)
        assert spec.set_sizes == (2, 3)
        assert spec.repeats == 2
        assert spec.base.seed == 7

    def test_sweep_requires_grid(self, tmp_path):
        cfg_path = tmp_path / "s.yaml"
        cfg_path.write_text(SYNTH_YAML)
        with pytest.raises(ConfigError, match="sweep"):
            load_sweep_spec(cfg_path)


class TestCheckpoint:
    def make_checkpoint(self):
        bank = init_bank(6, 2, seed=12, init_range=(15.0, 45.0))
        network = FeedforwardClassifier(
            NetworkSpec(bank.feature_dim, (5,), 3, weight_init_seed=8)
        )
        return Checkpoint(
            bank=bank,
            network=network,
            schedule=TrainSchedule(total_epochs=10, switch_epoch=5),
            class_names=("a", "b", "c"),
            best_epoch=4,
            best_val_accuracy=0.75,
        )

    def test_round_trip_exact(self, tmp_path):
        ckpt = self.make_checkpoint()
        path = tmp_path / "model.npz"
        save_checkpoint(path, ckpt)
        loaded = load_checkpoint(path)
        assert np.array_equal(loaded.bank.bases, ckpt.bank.bases)
        assert np.array_equal(loaded.bank.ranges, ckpt.bank.ranges)
        for wa, wb in zip(loaded.network.weights, ckpt.network.weights):
            assert np.array_equal(wa, wb)
        assert loaded.class_names == ("a", "b", "c")
        assert loaded.best_epoch == 4
        assert loaded.schedule == ckpt.schedule

    def test_truncated_file_clean_error(self, tmp_path):
        ckpt = self.make_checkpoint()
        path = tmp_path / "model.npz"
        save_checkpoint(path, ckpt)
        path.write_bytes(path.read_bytes()[: path.stat().st_size // 2])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "junk.npz"
        path.write_text("nonsense")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
