"""End-to-end run drivers behind the CLI: train, eval, sweep, features, synth.

Seed handling: one user-facing seed per run is expanded into independent
streams (split, bank init, network init, training shuffles) via
``numpy.random.SeedSequence``, so reruns with the same seed are exactly
reproducible and sweep repeats do not share randomness.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import SweepSpec, TrainConfig
from .dataset import (
    ClassTarget,
    load_manifest,
    load_recording,
    load_recordings,
    split_disjoint,
    split_items,
    write_recording_csv,
)
from .features import forward, init_bank, load_bank
from .gaze import GazeRecording, compute_angles
from .network import FeedforwardClassifier, NetworkSpec
from .reporting import (
    RunReport,
    per_class_metrics,
    plot_features,
    plot_history,
    plot_sweep,
    write_history_csv,
    write_report,
)
from .synthetic import generate_synthetic
from .training import evaluate, labeled_from_recordings, train


def derive_seeds(seed: int, n: int, salt: "tuple[int, ...]" = ()) -> list[int]:
    """Expand one seed into ``n`` independent 63-bit integers."""
    ss = np.random.SeedSequence([seed, *salt])
    return [int(s) for s in ss.generate_state(n, dtype=np.uint64) >> np.uint64(1)]


def _load_dataset(config: TrainConfig, seed: int) -> "tuple[list[GazeRecording], list[GazeRecording], ClassTarget]":
    """Materialize recordings and split them into disjoint halves."""
    data = config.data
    if data.manifest is not None:
        manifest = load_manifest(data.manifest, data.target)
        train_m, test_m = split_disjoint(manifest, fraction=data.split_fraction, seed=seed)
        return load_recordings(train_m), load_recordings(test_m), data.target
    recordings = generate_synthetic(data.synthetic, seed=seed)
    train_r, test_r = split_items(recordings, ClassTarget.SUBJECT, data.split_fraction, seed)
    return train_r, test_r, ClassTarget.SUBJECT


@dataclass
class TrainOutcome:
    report: RunReport
    checkpoint: Checkpoint
    history: list


def run_train(
    config: TrainConfig,
    out_dir: "str | Path | None" = None,
    evaluate_test: bool = True,
) -> TrainOutcome:
    """Split, train with an internal validation carve, evaluate on the held-out
    half, and (when ``out_dir`` is given) write report, curves, and checkpoint."""
    started = time.perf_counter()
    split_seed, bank_seed, net_seed, train_seed = derive_seeds(config.seed, 4)

    train_recs, test_recs, target = _load_dataset(config, split_seed)
    all_labels = sorted(
        {r.subject_id if target is ClassTarget.SUBJECT else r.stimulus_id
         for r in [*train_recs, *test_recs]}
    )
    train_data = labeled_from_recordings(train_recs, target, class_names=all_labels)
    test_data = labeled_from_recordings(test_recs, target, class_names=all_labels)

    f = config.features
    bank = init_bank(
        f.num_sets, f.set_size, seed=bank_seed, init_range=f.init_range, range_min=f.range_min
    )
    network = FeedforwardClassifier(
        NetworkSpec(
            input_dim=bank.feature_dim,
            hidden_layers=config.network.hidden_layers,
            num_classes=len(all_labels),
            weight_init_seed=net_seed,
        )
    )
    result = train(
        bank,
        network,
        train_data,
        config.schedule,
        range_lr=f.range_lr,
        sign_mode=f.sign_mode,
        seed=train_seed,
        renormalize=f.renormalize_gradient,
    )

    if evaluate_test:
        _, test_acc, preds = evaluate(result.bank, result.network, test_data)
        per_class = per_class_metrics(test_data.labels, preds, all_labels)
    else:
        test_acc, per_class = float("nan"), {}

    report = RunReport(
        command="train",
        config=config.resolved(),
        seed=config.seed,
        accuracy=test_acc,
        validation_accuracy=result.best_val_accuracy,
        best_epoch=result.best_epoch,
        per_class=per_class,
        train_size=len(train_data),
        test_size=len(test_data),
        wall_clock_seconds=time.perf_counter() - started,
        class_names=tuple(all_labels),
    )
    ckpt = Checkpoint(
        bank=result.bank,
        network=result.network,
        schedule=config.schedule,
        class_names=tuple(all_labels),
        best_epoch=result.best_epoch,
        best_val_accuracy=result.best_val_accuracy,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_report(report, out_dir)
        write_history_csv(result.history, out_dir / "history.csv")
        if result.history:
            plot_history(result.history, out_dir / "training_curves.png")
        save_checkpoint(out_dir / "checkpoint.npz", ckpt)
    return TrainOutcome(report=report, checkpoint=ckpt, history=result.history)


def run_eval(
    checkpoint_path: "str | Path",
    manifest_path: "str | Path",
    target: "str | ClassTarget",
    out_dir: "str | Path | None" = None,
) -> RunReport:
    """Forward-only evaluation of a checkpoint on a manifest."""
    started = time.perf_counter()
    ckpt = load_checkpoint(checkpoint_path)
    manifest = load_manifest(manifest_path, target)
    recordings = load_recordings(manifest)
    data = labeled_from_recordings(recordings, manifest.class_target, class_names=ckpt.class_names)
    _, acc, preds = evaluate(ckpt.bank, ckpt.network, data)
    report = RunReport(
        command="eval",
        config={"checkpoint": str(checkpoint_path), "manifest": str(manifest_path),
                "target": manifest.class_target.value},
        seed=ckpt.bank.rng_seed,
        accuracy=acc,
        validation_accuracy=ckpt.best_val_accuracy,
        best_epoch=ckpt.best_epoch,
        per_class=per_class_metrics(data.labels, preds, ckpt.class_names),
        train_size=0,
        test_size=len(data),
        wall_clock_seconds=time.perf_counter() - started,
        class_names=ckpt.class_names,
    )
    if out_dir is not None:
        write_report(report, Path(out_dir))
    return report


@dataclass
class SweepCell:
    angle_sets: int
    set_size: int
    accuracies: list
    error: Optional[str] = None

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else float("nan")


@dataclass
class SweepResult:
    cells: list
    best: Optional[SweepCell]

    def mean_grid(self, counts: Sequence[int], sizes: Sequence[int]) -> np.ndarray:
        grid = np.full((len(counts), len(sizes)), np.nan)
        for cell in self.cells:
            grid[counts.index(cell.angle_sets), sizes.index(cell.set_size)] = cell.mean_accuracy
        return grid


def run_sweep(spec: SweepSpec, out_dir: "str | Path | None" = None) -> SweepResult:
    """Train one run per (angle set count, set size, repeat) and tabulate mean
    validation accuracy per cell. A failing cell is recorded, not fatal."""
    cells: list[SweepCell] = []
    for count in spec.angle_set_counts:
        for size in spec.set_sizes:
            cell = SweepCell(angle_sets=count, set_size=size, accuracies=[])
            for repeat in range(spec.repeats):
                try:
                    features = replace(spec.base.features, num_sets=count, set_size=size)
                    run_seed = derive_seeds(spec.base.seed, 1, salt=(count, size, repeat))[0]
                    cfg = replace(spec.base, features=features, seed=run_seed)
                    outcome = run_train(cfg, out_dir=None, evaluate_test=False)
                except Exception as exc:  # cell failure must not kill the sweep
                    cell.error = f"{type(exc).__name__}: {exc}"
                    break
                cell.accuracies.append(outcome.report.validation_accuracy)
            cells.append(cell)

    scored = [c for c in cells if c.accuracies and not np.isnan(c.mean_accuracy)]
    best = max(scored, key=lambda c: c.mean_accuracy) if scored else None
    result = SweepResult(cells=cells, best=best)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "sweep.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["angle_sets", "set_size", "repeat", "validation_accuracy"])
            for cell in cells:
                for repeat, acc in enumerate(cell.accuracies):
                    writer.writerow([cell.angle_sets, cell.set_size, repeat, repr(acc)])
        lines = [f"{'angle sets':>12}{'set size':>10}{'mean val acc':>14}"]
        for cell in cells:
            shown = "failed" if cell.error else f"{cell.mean_accuracy:.2f}"
            marker = "  <- best" if best is cell else ""
            lines.append(f"{cell.angle_sets:>12}{cell.set_size:>10}{shown:>14}{marker}")
            if cell.error:
                lines.append(f"    error: {cell.error}")
        (out_dir / "sweep.txt").write_text("\n".join(lines) + "\n")
        counts = list(spec.angle_set_counts)
        sizes = list(spec.set_sizes)
        plot_sweep(counts, sizes, result.mean_grid(counts, sizes), out_dir / "sweep.png")
    return result


def run_features(
    model_path: "str | Path",
    recording_path: "str | Path",
    out_dir: "str | Path",
) -> "tuple[Path, bool]":
    """Dump the feature tensor of one recording as CSV plus a heatmap.

    ``model_path`` may be a checkpoint (.npz) or a bank text file. Returns
    the CSV path and a flag that is True when the recording was too short
    to fill any window.
    """
    model_path = Path(model_path)
    if model_path.suffix == ".npz":
        bank = load_checkpoint(model_path).bank
    else:
        bank = load_bank(model_path)
    recording = load_recording(recording_path)
    tensor, _ = forward(bank, compute_angles(recording))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "features.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["set_index", "bin_index", "value"])
        for i in range(bank.num_sets):
            for b in range(bank.num_bins):
                writer.writerow([i, b, repr(float(tensor.values[i, b]))])
    with open(out_dir / "window_counts.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["set_index", "window_count"])
        for i in range(bank.num_sets):
            writer.writerow([i, int(tensor.window_counts[i])])
    plot_features(tensor.values, out_dir / "features.png")
    empty = bool(np.all(tensor.window_counts == 0))
    return csv_path, empty


def run_synth(config: TrainConfig, out_dir: "str | Path") -> Path:
    """Write the configured synthetic dataset as gaze CSVs plus a manifest."""
    if config.data.synthetic is None:
        raise ValueError("config has no synthetic data section")
    seed = derive_seeds(config.seed, 1, salt=(0xDA7A,))[0]
    recordings = generate_synthetic(config.data.synthetic, seed=seed)
    out_dir = Path(out_dir)
    (out_dir / "recordings").mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.csv"
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "subject_id", "stimulus_id"])
        for i, rec in enumerate(recordings):
            rel = f"recordings/rec_{i:05d}.csv"
            write_recording_csv(out_dir / rel, rec)
            writer.writerow([rel, rec.subject_id, rec.stimulus_id])
    return manifest_path
