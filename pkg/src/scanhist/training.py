"""Joint training of the angle-range bank and the classifier head.

Every minibatch runs the histogram forward pass, the network forward and
backward passes, an SGD step on the network, and one deferred range update
on the bank. Per-recording bin gradients are accumulated in recording order
and applied once per batch, so results do not depend on how the
accumulation might be parallelized. The returned model is the epoch
snapshot with the highest validation accuracy (earliest epoch on ties).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import ClassTarget, class_label
from .features import (
    AngleSetBank,
    SignMode,
    accumulate_range_updates,
    apply_range_updates,
    forward,
    renormalize_gradient,
    reset_range_updates,
)
from .gaze import AngleSequence, GazeRecording, compute_angles
from .network import FeedforwardClassifier, MomentumSGD, TrainSchedule

_EVAL_BATCH = 256


@dataclass(frozen=True)
class LabeledData:
    """Angle sequences with integer class labels and the label vocabulary."""

    sequences: tuple[AngleSequence, ...]
    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sequences", tuple(self.sequences))
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.shape != (len(self.sequences),):
            raise ValueError("labels must be one integer per sequence")
        if len(self.sequences) and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise ValueError("labels must index into class_names")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.sequences)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


def labeled_from_recordings(
    recordings: Sequence[GazeRecording],
    target: ClassTarget,
    class_names: Optional[Sequence[str]] = None,
) -> LabeledData:
    """Turn recordings into angle sequences labeled by the chosen target.

    ``class_names`` fixes the label vocabulary (e.g. the one a model was
    trained with); by default it is the sorted set of labels present.
    """
    raw = [class_label(r, target) for r in recordings]
    names = tuple(class_names) if class_names is not None else tuple(sorted(set(raw)))
    index = {name: i for i, name in enumerate(names)}
    unknown = sorted(set(raw) - set(names))
    if unknown:
        raise ValueError(f"recordings carry labels outside the class vocabulary: {unknown}")
    labels = np.array([index[r] for r in raw], dtype=np.int64)
    return LabeledData(
        sequences=tuple(compute_angles(r) for r in recordings),
        labels=labels,
        class_names=names,
    )


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    learning_rate: float
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


@dataclass
class TrainResult:
    bank: AngleSetBank
    network: FeedforwardClassifier
    history: list[EpochStats]
    best_epoch: Optional[int]
    best_val_accuracy: float


def feature_matrix(bank: AngleSetBank, sequences: Sequence[AngleSequence]) -> np.ndarray:
    """Stack flattened feature tensors for a list of sequences."""
    out = np.empty((len(sequences), bank.feature_dim))
    for i, seq in enumerate(sequences):
        tensor, _ = forward(bank, seq)
        out[i] = tensor.flattened()
    return out


def evaluate(
    bank: AngleSetBank,
    network: FeedforwardClassifier,
    data: LabeledData,
) -> "tuple[float, float, np.ndarray]":
    """Forward-only pass; returns (mean loss, accuracy, predicted labels)."""
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    preds = np.empty(len(data), dtype=np.int64)
    total_loss = 0.0
    for start in range(0, len(data), _EVAL_BATCH):
        stop = min(start + _EVAL_BATCH, len(data))
        x = feature_matrix(bank, data.sequences[start:stop])
        probs = network.forward_batch(x)
        labels = data.labels[start:stop]
        total_loss += network.loss(probs, labels) * (stop - start)
        preds[start:stop] = np.argmax(probs, axis=1)
    accuracy = float(np.mean(preds == data.labels))
    return total_loss / len(data), accuracy, preds


def best_epoch(history: Sequence[EpochStats]) -> Optional[int]:
    """Epoch with maximum validation accuracy; earliest wins ties."""
    best: Optional[int] = None
    best_acc = -1.0
    for stats in history:
        if stats.val_accuracy > best_acc:
            best_acc = stats.val_accuracy
            best = stats.epoch
    return best


def train(
    bank: AngleSetBank,
    network: FeedforwardClassifier,
    data: LabeledData,
    schedule: TrainSchedule,
    range_lr: float,
    sign_mode: "str | SignMode" = SignMode.ADDITIVE,
    seed: int = 0,
    renormalize: bool = False,
) -> TrainResult:
    """Run the joint loop on an already identity-disjoint training split.

    A validation subset of ``schedule.validation_fraction`` is carved from
    ``data`` (seeded, random), the rest is the optimization set. The bank
    and network are mutated during training; the result carries snapshots
    from the best validation epoch. ``range_lr = 0`` freezes the bank.

    With ADDITIVE sign handling the loss gradient is negated before it
    reaches the bank, so a bin whose growth would reduce the loss widens the
    ranges of the checks that fired into it; DESCENT feeds the raw loss
    gradient and subtracts. Both routes move the ranges identically.
    """
    sign_mode = SignMode.parse(sign_mode)
    if len(data) == 0:
        raise ValueError("training dataset is empty")
    if len(np.unique(data.labels)) < 2:
        raise ValueError("training dataset contains a single class")
    if network.spec.input_dim != bank.feature_dim:
        raise ValueError(
            f"network input {network.spec.input_dim} does not match bank features {bank.feature_dim}"
        )

    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(data))
    n_val = int(round(schedule.validation_fraction * len(data)))
    n_val = min(max(n_val, 1), len(data) - 1)
    val_idx, fit_idx = perm[:n_val], perm[n_val:]
    fit_sequences = [data.sequences[i] for i in fit_idx]
    fit_labels = data.labels[fit_idx]
    val_data = LabeledData(
        sequences=tuple(data.sequences[i] for i in val_idx),
        labels=data.labels[val_idx],
        class_names=data.class_names,
    )
    if len(np.unique(fit_labels)) < 2:
        raise ValueError("validation carve left a single-class training split; use more data")

    history: list[EpochStats] = []
    if schedule.total_epochs == 0:
        return TrainResult(bank, network, history, best_epoch=None, best_val_accuracy=float("nan"))

    optimizer = MomentumSGD(network, schedule.momentum)
    frozen_bank = range_lr == 0.0
    fit_features = feature_matrix(bank, fit_sequences) if frozen_bank else None

    best_bank = bank.copy()
    best_network = network.copy()
    best_acc = -1.0
    best_at: Optional[int] = None

    for epoch in range(schedule.total_epochs):
        lr = schedule.learning_rate(epoch)
        order = rng.permutation(len(fit_sequences))
        epoch_loss = 0.0
        epoch_correct = 0
        for start in range(0, len(order), schedule.batch_size):
            batch = order[start : start + schedule.batch_size]
            labels = fit_labels[batch]
            if frozen_bank:
                x = fit_features[batch]
                tensors, traces = None, None
            else:
                tensors, traces = [], []
                x = np.empty((len(batch), bank.feature_dim))
                for row, i in enumerate(batch):
                    tensor, trace = forward(bank, fit_sequences[i])
                    tensors.append(tensor)
                    traces.append(trace)
                    x[row] = tensor.flattened()

            probs = network.forward_batch(x)
            loss = network.loss(probs, labels)
            grads_w, grads_b, input_grad = network.backward_batch(labels)
            optimizer.step(network, grads_w, grads_b, lr)

            if not frozen_bank:
                reset_range_updates(bank)
                for row in range(len(batch)):
                    g = input_grad[row].reshape(bank.num_sets, bank.num_bins)
                    if renormalize:
                        g = renormalize_gradient(tensors[row], g)
                    if sign_mode is SignMode.ADDITIVE:
                        g = -g
                    accumulate_range_updates(bank, traces[row], g)
                apply_range_updates(bank, range_lr, sign_mode)

            epoch_loss += loss * len(batch)
            epoch_correct += int(np.sum(np.argmax(probs, axis=1) == labels))

        val_loss, val_acc, _ = evaluate(bank, network, val_data)
        history.append(
            EpochStats(
                epoch=epoch,
                learning_rate=lr,
                train_loss=epoch_loss / len(fit_sequences),
                train_accuracy=epoch_correct / len(fit_sequences),
                val_loss=val_loss,
                val_accuracy=val_acc,
            )
        )
        if val_acc > best_acc:
            best_acc = val_acc
            best_at = epoch
            best_bank = bank.copy()
            best_network = network.copy()

    return TrainResult(
        bank=best_bank,
        network=best_network,
        history=history,
        best_epoch=best_at,
        best_val_accuracy=best_acc,
    )
