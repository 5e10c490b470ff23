"""Run reports, metrics, and figure rendering.

Every run produces a machine-readable ``report.json`` (full precision, with
the resolved configuration echoed) and a human-readable ``report.txt``
table with accuracies rounded to two decimals. Figures are rendered to PNG
next to the delimited outputs.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .training import EpochStats


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    support: int


def accuracy_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("need equally sized, non-empty label arrays")
    return float(np.sum(y_true == y_pred)) / y_true.size


def per_class_metrics(
    y_true: np.ndarray, y_pred: np.ndarray, class_names: Sequence[str]
) -> "dict[str, ClassMetrics]":
    """Precision and recall per class; 0 when a denominator is empty."""
    out: dict[str, ClassMetrics] = {}
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    for idx, name in enumerate(class_names):
        tp = int(np.sum((y_pred == idx) & (y_true == idx)))
        predicted = int(np.sum(y_pred == idx))
        actual = int(np.sum(y_true == idx))
        out[name] = ClassMetrics(
            precision=tp / predicted if predicted else 0.0,
            recall=tp / actual if actual else 0.0,
            support=actual,
        )
    return out


@dataclass
class RunReport:
    """Everything needed to reconstruct and judge one run."""

    command: str
    config: dict
    seed: int
    accuracy: float
    validation_accuracy: Optional[float]
    best_epoch: Optional[int]
    per_class: "dict[str, ClassMetrics]"
    train_size: int
    test_size: int
    wall_clock_seconds: float
    class_names: tuple[str, ...] = ()
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "validation_accuracy": self.validation_accuracy,
            "best_epoch": self.best_epoch,
            "per_class": {
                name: {"precision": m.precision, "recall": m.recall, "support": m.support}
                for name, m in self.per_class.items()
            },
            "train_size": self.train_size,
            "test_size": self.test_size,
            "class_names": list(self.class_names),
            "notes": list(self.notes),
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def write_report(report: RunReport, out_dir: "str | Path") -> "tuple[Path, Path]":
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    json_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")

    lines = [f"command: {report.command}", f"seed: {report.seed}"]
    if report.validation_accuracy is not None:
        lines.append(f"validation accuracy (best epoch {report.best_epoch}): "
                     f"{report.validation_accuracy:.2f}")
    lines.append(f"accuracy: {report.accuracy:.2f}")
    lines.append(f"train/test sizes: {report.train_size}/{report.test_size}")
    for note in report.notes:
        lines.append(f"note: {note}")
    lines.append("")
    lines.append(f"{'class':<24}{'precision':>10}{'recall':>10}{'support':>10}")
    for name, m in report.per_class.items():
        lines.append(f"{name:<24}{m.precision:>10.2f}{m.recall:>10.2f}{m.support:>10d}")
    txt_path = out_dir / "report.txt"
    txt_path.write_text("\n".join(lines) + "\n")
    return json_path, txt_path


def write_history_csv(history: Sequence[EpochStats], path: "str | Path") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["epoch", "learning_rate", "train_loss", "train_accuracy", "val_loss", "val_accuracy"]
        )
        for s in history:
            writer.writerow(
                [s.epoch, repr(s.learning_rate), repr(s.train_loss), repr(s.train_accuracy),
                 repr(s.val_loss), repr(s.val_accuracy)]
            )


def plot_history(history: Sequence[EpochStats], path: "str | Path") -> None:
    """Loss and accuracy curves over epochs."""
    epochs = [s.epoch for s in history]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax_loss.plot(epochs, [s.train_loss for s in history], label="train")
    ax_loss.plot(epochs, [s.val_loss for s in history], label="validation")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("cross-entropy loss")
    ax_loss.legend()
    ax_acc.plot(epochs, [s.train_accuracy for s in history], label="train")
    ax_acc.plot(epochs, [s.val_accuracy for s in history], label="validation")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.05)
    ax_acc.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(
    counts: Sequence[int],
    sizes: Sequence[int],
    mean_accuracy: np.ndarray,
    path: "str | Path",
) -> None:
    """Heatmap of mean validation accuracy over the parameter grid."""
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(sizes), 1.0 + 0.7 * len(counts)))
    masked = np.ma.masked_invalid(np.asarray(mean_accuracy, dtype=np.float64))
    im = ax.imshow(masked, cmap="viridis", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(len(sizes)), [str(s) for s in sizes])
    ax.set_yticks(range(len(counts)), [str(c) for c in counts])
    ax.set_xlabel("set size")
    ax.set_ylabel("angle sets")
    mask = np.ma.getmaskarray(masked)
    for i in range(len(counts)):
        for j in range(len(sizes)):
            if not mask[i, j]:
                ax.text(j, i, f"{masked[i, j]:.2f}", ha="center", va="center", color="white")
    fig.colorbar(im, ax=ax, label="mean validation accuracy")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_features(values: np.ndarray, path: "str | Path", max_sets: int = 64) -> None:
    """Heatmap of the first ``max_sets`` per-set histograms."""
    shown = np.asarray(values)[:max_sets]
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(shown, cmap="magma", aspect="auto", vmin=0.0, vmax=max(shown.max(), 1e-12))
    ax.set_xlabel("bin index")
    ax.set_ylabel("set index")
    fig.colorbar(im, ax=ax, label="normalized count")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
