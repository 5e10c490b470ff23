"""Command line interface.

Subcommands: train, eval, sweep, features, synth. All of them take
``--config``, ``--seed`` (overrides the config seed), and ``--out``.
Configuration files are YAML (JSON is valid YAML); run ``scanhist train
--help`` for the recognized keys and their defaults.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    ConfigError,
    TrainConfig,
    load_sweep_spec,
    load_train_config,
)

_CONFIG_HELP = """\
config file keys (YAML, defaults in parentheses):
  seed: int (0)
  data:
    manifest: path to manifest CSV  |  synthetic: inline generator spec
    target: subject | stimulus (subject)
    split_fraction: train share of the disjoint split (0.5)
    synthetic:
      classes: [{name, modes: [{mean, concentration, weight (1.0)}]}]
      samples_per_recording, recordings_per_class, step_length ([0.8, 1.2])
  features:
    num_sets (512), set_size (4), init_range ([10, 60]), range_min (0.5)
    range_lr (0.001), sign_mode: additive | descent (additive)
    renormalize_gradient: bool (false)
  network:
    hidden_layers ([256, 128])
  schedule:
    lr_initial (0.001), lr_reduced (0.0001), switch_epoch (50),
    total_epochs (100), momentum (0.9), batch_size (32),
    validation_fraction (0.2)
  sweep:                                  # sweep command only
    angle_set_counts, set_sizes, repeats (1)
"""


def _add_common(parser: argparse.ArgumentParser, need_config: bool = True) -> None:
    parser.add_argument("--config", required=need_config, help="path to the YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory for reports and artifacts")


def _load_config(args: argparse.Namespace) -> TrainConfig:
    config = load_train_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _cmd_train(args: argparse.Namespace) -> int:
    from .harness import run_train

    config = _load_config(args)
    out_dir = Path(args.out) if args.out else Path("run_train")
    outcome = run_train(config, out_dir=out_dir)
    report = outcome.report
    print(
        f"train: test accuracy {report.accuracy:.2f}, best validation "
        f"{report.validation_accuracy:.2f} at epoch {report.best_epoch}"
    )
    print(f"report and checkpoint written to {out_dir}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    from .harness import run_eval

    out_dir = Path(args.out) if args.out else Path("run_eval")
    report = run_eval(args.checkpoint, args.manifest, args.target, out_dir=out_dir)
    print(f"eval: accuracy {report.accuracy:.2f} on {report.test_size} recordings")
    print(f"report written to {out_dir}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    from .harness import run_sweep

    spec = load_sweep_spec(args.config)
    if args.seed is not None:
        spec = replace(spec, base=replace(spec.base, seed=args.seed))
    out_dir = Path(args.out) if args.out else Path("run_sweep")
    result = run_sweep(spec, out_dir=out_dir)
    for cell in result.cells:
        shown = "failed" if cell.error else f"{cell.mean_accuracy:.2f}"
        print(f"sweep: angle_sets={cell.angle_sets} set_size={cell.set_size} "
              f"mean val accuracy {shown}")
    if result.best is not None:
        print(f"best cell: angle_sets={result.best.angle_sets} "
              f"set_size={result.best.set_size} ({result.best.mean_accuracy:.2f})")
    print(f"sweep table written to {out_dir}")
    return 0


def _cmd_features(args: argparse.Namespace) -> int:
    from .harness import run_features

    out_dir = Path(args.out) if args.out else Path("run_features")
    csv_path, empty = run_features(args.model, args.recording, out_dir)
    if empty:
        print("warning: recording shorter than the set size; all features are zero")
    print(f"features written to {csv_path}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    from .harness import run_synth

    config = _load_config(args)
    out_dir = Path(args.out) if args.out else Path("run_synth")
    manifest = run_synth(config, out_dir)
    print(f"synthetic dataset written; manifest at {manifest}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scanhist",
        description="Scanpath classification with trainable angle-range histogram features.",
        epilog=_CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and evaluate on the held-out half")
    _add_common(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a manifest")
    _add_common(p_eval, need_config=False)
    p_eval.add_argument("--checkpoint", required=True, help="checkpoint .npz to load")
    p_eval.add_argument("--manifest", required=True, help="manifest CSV to evaluate")
    p_eval.add_argument("--target", default="subject", help="subject or stimulus")
    p_eval.set_defaults(func=_cmd_eval)

    p_sweep = sub.add_parser("sweep", help="run the parameter grid and tabulate accuracy")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_feat = sub.add_parser("features", help="dump the feature tensor of one recording")
    _add_common(p_feat, need_config=False)
    p_feat.add_argument("--model", required=True, help="checkpoint .npz or bank text file")
    p_feat.add_argument("--recording", required=True, help="gaze CSV file")
    p_feat.set_defaults(func=_cmd_features)

    p_synth = sub.add_parser("synth", help="write the configured synthetic dataset to disk")
    _add_common(p_synth)
    p_synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
