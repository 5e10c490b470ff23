"""Model checkpoints: one .npz bundling the network, the bank, and metadata.

The bank is embedded in its flat text serialization so a checkpoint and a
standalone bank file always agree. Weights are stored as float64 arrays,
which round-trips exactly.
"""
from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .features import AngleSetBank, dumps_bank, loads_bank
from .network import FeedforwardClassifier, NetworkSpec, TrainSchedule

_FORMAT = "scanhist-checkpoint-v1"


class CheckpointError(ValueError):
    """Raised for unreadable or inconsistent checkpoint files."""


@dataclass
class Checkpoint:
    bank: AngleSetBank
    network: FeedforwardClassifier
    schedule: TrainSchedule
    class_names: tuple[str, ...]
    best_epoch: Optional[int]
    best_val_accuracy: float


def save_checkpoint(path: "str | Path", ckpt: Checkpoint) -> None:
    spec = ckpt.network.spec
    meta = {
        "format": _FORMAT,
        "network": {
            "input_dim": spec.input_dim,
            "hidden_layers": list(spec.hidden_layers),
            "num_classes": spec.num_classes,
            "weight_init_seed": spec.weight_init_seed,
            "activation": spec.activation,
        },
        "schedule": {
            "lr_initial": ckpt.schedule.lr_initial,
            "lr_reduced": ckpt.schedule.lr_reduced,
            "switch_epoch": ckpt.schedule.switch_epoch,
            "total_epochs": ckpt.schedule.total_epochs,
            "momentum": ckpt.schedule.momentum,
            "batch_size": ckpt.schedule.batch_size,
            "validation_fraction": ckpt.schedule.validation_fraction,
        },
        "class_names": list(ckpt.class_names),
        "best_epoch": ckpt.best_epoch,
        "best_val_accuracy": ckpt.best_val_accuracy,
        "num_layers": len(ckpt.network.weights),
    }
    arrays = {
        "meta": np.array(json.dumps(meta)),
        "bank_text": np.array(dumps_bank(ckpt.bank)),
    }
    for i, (w, b) in enumerate(zip(ckpt.network.weights, ckpt.network.biases)):
        arrays[f"weight_{i}"] = w
        arrays[f"bias_{i}"] = b
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path: "str | Path") -> Checkpoint:
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("format") != _FORMAT:
                raise CheckpointError(f"{path}: unknown checkpoint format {meta.get('format')!r}")
            bank = loads_bank(str(data["bank_text"]))
            spec = NetworkSpec(
                input_dim=int(meta["network"]["input_dim"]),
                hidden_layers=tuple(meta["network"]["hidden_layers"]),
                num_classes=int(meta["network"]["num_classes"]),
                weight_init_seed=int(meta["network"]["weight_init_seed"]),
                activation=meta["network"]["activation"],
            )
            network = FeedforwardClassifier(spec)
            num_layers = int(meta["num_layers"])
            weights = [np.array(data[f"weight_{i}"]) for i in range(num_layers)]
            biases = [np.array(data[f"bias_{i}"]) for i in range(num_layers)]
    except CheckpointError:
        raise
    except (OSError, KeyError, ValueError, zipfile.BadZipFile, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot load checkpoint {path}: {exc}") from exc

    for w, stored in zip(network.weights, weights):
        if w.shape != stored.shape:
            raise CheckpointError(f"{path}: stored weights do not match the network spec")
    network.weights = weights
    network.biases = biases
    if spec.input_dim != bank.feature_dim:
        raise CheckpointError(
            f"{path}: network input {spec.input_dim} does not match "
            f"bank features {bank.feature_dim}"
        )
    schedule = TrainSchedule(**meta["schedule"])
    return Checkpoint(
        bank=bank,
        network=network,
        schedule=schedule,
        class_names=tuple(meta["class_names"]),
        best_epoch=meta["best_epoch"],
        best_val_accuracy=float(meta["best_val_accuracy"]),
    )
