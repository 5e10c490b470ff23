"""Run configuration: YAML/JSON config files, defaults, and resolution.

A config file is a nested key/value document. Every run report echoes the
fully resolved configuration (defaults filled in), so a run can be
reconstructed from its report alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .dataset import ClassTarget
from .features import SignMode
from .network import TrainSchedule
from .synthetic import AngleMode, SyntheticClass, SyntheticSpec


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration files."""


def _require_keys(section: Mapping[str, Any], allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


@dataclass(frozen=True)
class FeatureParams:
    num_sets: int = 512
    set_size: int = 4
    init_range: "tuple[float, float]" = (10.0, 60.0)
    range_min: float = 0.5
    range_lr: float = 1e-3
    sign_mode: SignMode = SignMode.ADDITIVE
    renormalize_gradient: bool = False

    def __post_init__(self) -> None:
        if self.num_sets < 1 or self.set_size < 1:
            raise ConfigError(
                f"need num_sets >= 1 and set_size >= 1, got {self.num_sets}, {self.set_size}"
            )
        if self.range_lr < 0.0:
            raise ConfigError(f"range_lr must be >= 0, got {self.range_lr}")


@dataclass(frozen=True)
class NetworkParams:
    hidden_layers: tuple[int, ...] = (256, 128)


@dataclass(frozen=True)
class DataParams:
    """Either a manifest on disk or an inline synthetic spec."""

    manifest: Optional[str] = None
    target: ClassTarget = ClassTarget.SUBJECT
    synthetic: Optional[SyntheticSpec] = None
    split_fraction: float = 0.5

    def __post_init__(self) -> None:
        if (self.manifest is None) == (self.synthetic is None):
            raise ConfigError("data section needs exactly one of 'manifest' or 'synthetic'")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError(f"split_fraction must be in (0, 1), got {self.split_fraction}")


@dataclass(frozen=True)
class TrainConfig:
    data: DataParams
    features: FeatureParams = field(default_factory=FeatureParams)
    network: NetworkParams = field(default_factory=NetworkParams)
    schedule: TrainSchedule = field(default_factory=TrainSchedule)
    seed: int = 0

    def resolved(self) -> dict:
        """Fully expanded configuration, suitable for echoing into reports."""
        data: dict[str, Any] = {
            "target": self.data.target.value,
            "split_fraction": self.data.split_fraction,
        }
        if self.data.manifest is not None:
            data["manifest"] = self.data.manifest
        if self.data.synthetic is not None:
            spec = self.data.synthetic
            data["synthetic"] = {
                "classes": [
                    {
                        "name": c.name,
                        "modes": [
                            {"mean": m.mean, "concentration": m.concentration, "weight": m.weight}
                            for m in c.modes
                        ],
                    }
                    for c in spec.classes
                ],
                "samples_per_recording": spec.samples_per_recording,
                "recordings_per_class": spec.recordings_per_class,
                "step_length": list(spec.step_length),
            }
        return {
            "seed": self.seed,
            "data": data,
            "features": {
                "num_sets": self.features.num_sets,
                "set_size": self.features.set_size,
                "init_range": list(self.features.init_range),
                "range_min": self.features.range_min,
                "range_lr": self.features.range_lr,
                "sign_mode": self.features.sign_mode.value,
                "renormalize_gradient": self.features.renormalize_gradient,
            },
            "network": {"hidden_layers": list(self.network.hidden_layers)},
            "schedule": {
                "lr_initial": self.schedule.lr_initial,
                "lr_reduced": self.schedule.lr_reduced,
                "switch_epoch": self.schedule.switch_epoch,
                "total_epochs": self.schedule.total_epochs,
                "momentum": self.schedule.momentum,
                "batch_size": self.schedule.batch_size,
                "validation_fraction": self.schedule.validation_fraction,
            },
        }


@dataclass(frozen=True)
class SweepSpec:
    """The parameter grid: every (angle set count, set size) cell is trained
    ``repeats`` times with distinct derived seeds."""

    angle_set_counts: tuple[int, ...]
    set_sizes: tuple[int, ...]
    repeats: int
    base: TrainConfig

    def __post_init__(self) -> None:
        if not self.angle_set_counts or not self.set_sizes:
            raise ConfigError("sweep grid must list angle_set_counts and set_sizes")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")


def _parse_synthetic(section: Mapping[str, Any]) -> SyntheticSpec:
    _require_keys(
        section,
        {"classes", "samples_per_recording", "recordings_per_class", "step_length"},
        "data.synthetic",
    )
    try:
        classes = []
        for cls in section["classes"]:
            modes = tuple(
                AngleMode(
                    mean=float(m["mean"]),
                    concentration=float(m["concentration"]),
                    weight=float(m.get("weight", 1.0)),
                )
                for m in cls["modes"]
            )
            classes.append(SyntheticClass(name=str(cls["name"]), modes=modes))
        step_length = section.get("step_length", (0.8, 1.2))
        return SyntheticSpec(
            classes=tuple(classes),
            samples_per_recording=int(section["samples_per_recording"]),
            recordings_per_class=int(section["recordings_per_class"]),
            step_length=(float(step_length[0]), float(step_length[1])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid synthetic spec: {exc}") from exc


def _parse_data(section: Mapping[str, Any]) -> DataParams:
    _require_keys(section, {"manifest", "target", "synthetic", "split_fraction"}, "data")
    synthetic = _parse_synthetic(section["synthetic"]) if "synthetic" in section else None
    return DataParams(
        manifest=section.get("manifest"),
        target=ClassTarget.parse(section.get("target", "subject")),
        synthetic=synthetic,
        split_fraction=float(section.get("split_fraction", 0.5)),
    )


def _parse_features(section: Mapping[str, Any]) -> FeatureParams:
    _require_keys(
        section,
        {"num_sets", "set_size", "init_range", "range_min", "range_lr", "sign_mode",
         "renormalize_gradient"},
        "features",
    )
    init_range = section.get("init_range", (10.0, 60.0))
    return FeatureParams(
        num_sets=int(section.get("num_sets", 512)),
        set_size=int(section.get("set_size", 4)),
        init_range=(float(init_range[0]), float(init_range[1])),
        range_min=float(section.get("range_min", 0.5)),
        range_lr=float(section.get("range_lr", 1e-3)),
        sign_mode=SignMode.parse(section.get("sign_mode", "additive")),
        renormalize_gradient=bool(section.get("renormalize_gradient", False)),
    )


def _parse_network(section: Mapping[str, Any]) -> NetworkParams:
    _require_keys(section, {"hidden_layers"}, "network")
    return NetworkParams(hidden_layers=tuple(int(h) for h in section.get("hidden_layers", (256, 128))))


def _parse_schedule(section: Mapping[str, Any]) -> TrainSchedule:
    allowed = {"lr_initial", "lr_reduced", "switch_epoch", "total_epochs", "momentum",
               "batch_size", "validation_fraction"}
    _require_keys(section, allowed, "schedule")
    defaults = TrainSchedule()
    try:
        return TrainSchedule(
            lr_initial=float(section.get("lr_initial", defaults.lr_initial)),
            lr_reduced=float(section.get("lr_reduced", defaults.lr_reduced)),
            switch_epoch=int(section.get("switch_epoch", defaults.switch_epoch)),
            total_epochs=int(section.get("total_epochs", defaults.total_epochs)),
            momentum=float(section.get("momentum", defaults.momentum)),
            batch_size=int(section.get("batch_size", defaults.batch_size)),
            validation_fraction=float(
                section.get("validation_fraction", defaults.validation_fraction)
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def train_config_from_dict(doc: Mapping[str, Any]) -> TrainConfig:
    _require_keys(dict(doc), {"data", "features", "network", "schedule", "seed", "sweep"}, "config")
    if "data" not in doc:
        raise ConfigError("config needs a 'data' section")
    return TrainConfig(
        data=_parse_data(doc["data"]),
        features=_parse_features(doc.get("features", {})),
        network=_parse_network(doc.get("network", {})),
        schedule=_parse_schedule(doc.get("schedule", {})),
        seed=int(doc.get("seed", 0)),
    )


def sweep_spec_from_dict(doc: Mapping[str, Any]) -> SweepSpec:
    if "sweep" not in doc:
        raise ConfigError("sweep config needs a 'sweep' section")
    section = doc["sweep"]
    _require_keys(section, {"angle_set_counts", "set_sizes", "repeats"}, "sweep")
    base = train_config_from_dict(doc)
    return SweepSpec(
        angle_set_counts=tuple(int(c) for c in section.get("angle_set_counts", ())),
        set_sizes=tuple(int(s) for s in section.get("set_sizes", ())),
        repeats=int(section.get("repeats", 1)),
        base=base,
    )


def load_config_doc(path: "str | Path") -> dict:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    return doc


def load_train_config(path: "str | Path") -> TrainConfig:
    return train_config_from_dict(load_config_doc(path))


def load_sweep_spec(path: "str | Path") -> SweepSpec:
    return sweep_spec_from_dict(load_config_doc(path))
