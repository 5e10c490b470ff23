"""Synthetic scanpath generator with controllable class separation.

Each class draws inter-sample movement directions from its own mixture of
wrapped unimodal angular distributions (von Mises modes). Recordings are
random walks whose step directions follow the class mixture, so the angle
statistics recovered by :func:`scanhist.gaze.compute_angles` differ across
classes by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaze import GazeRecording, GazeSample, wrap_degrees


@dataclass(frozen=True)
class AngleMode:
    """One preferred direction: mean in degrees, von Mises concentration.

    ``concentration=math.inf`` collapses the mode to a point mass, every
    draw is exactly ``mean``.
    """

    mean: float
    concentration: float
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean < 360.0:
            raise ValueError(f"mode mean must be in [0, 360), got {self.mean}")
        if not (self.concentration >= 0.0):
            raise ValueError(f"concentration must be >= 0, got {self.concentration}")
        if self.weight <= 0.0:
            raise ValueError(f"mode weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class SyntheticClass:
    name: str
    modes: tuple[AngleMode, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ValueError(f"class {self.name!r} needs at least one angle mode")


@dataclass(frozen=True)
class SyntheticSpec:
    classes: tuple[SyntheticClass, ...]
    samples_per_recording: int
    recordings_per_class: int
    step_length: "tuple[float, float]" = (0.8, 1.2)

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        if len(self.classes) < 2:
            raise ValueError("synthetic spec needs at least 2 classes")
        if self.samples_per_recording < 2:
            raise ValueError("recordings need at least 2 samples")
        if self.recordings_per_class < 1:
            raise ValueError("recordings_per_class must be >= 1")
        lo, hi = self.step_length
        if not (0.0 < lo <= hi):
            raise ValueError(f"step_length bounds must satisfy 0 < lo <= hi, got {self.step_length}")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValueError(f"class names must be unique, got {names}")


def _draw_angles(cls: SyntheticClass, n: int, rng: np.random.Generator) -> np.ndarray:
    weights = np.array([m.weight for m in cls.modes], dtype=np.float64)
    weights /= weights.sum()
    picks = rng.choice(len(cls.modes), size=n, p=weights)
    out = np.empty(n, dtype=np.float64)
    for idx, mode in enumerate(cls.modes):
        mask = picks == idx
        count = int(mask.sum())
        if count == 0:
            continue
        if math.isinf(mode.concentration):
            out[mask] = mode.mean
        else:
            draws = rng.vonmises(np.deg2rad(mode.mean), mode.concentration, size=count)
            out[mask] = wrap_degrees(np.rad2deg(draws))
    return out


def generate_synthetic(spec: SyntheticSpec, seed: int) -> list[GazeRecording]:
    """Generate labeled recordings, deterministically for a given seed.

    The class name becomes the subject_id; each recording gets a unique
    stimulus_id, so a subject-target split stays feasible. Timestamps tick
    at 4 ms (a 250 Hz tracker cadence).
    """
    rng = np.random.default_rng(seed)
    recordings: list[GazeRecording] = []
    n_steps = spec.samples_per_recording - 1
    lo, hi = spec.step_length
    for cls in spec.classes:
        for r in range(spec.recordings_per_class):
            angles = _draw_angles(cls, n_steps, rng)
            lengths = rng.uniform(lo, hi, size=n_steps)
            rad = np.deg2rad(angles)
            xs = np.concatenate([[0.0], np.cumsum(lengths * np.cos(rad))])
            ys = np.concatenate([[0.0], np.cumsum(lengths * np.sin(rad))])
            samples = tuple(
                GazeSample(float(x), float(y), t=4.0 * i)
                for i, (x, y) in enumerate(zip(xs, ys))
            )
            recordings.append(
                GazeRecording(samples, subject_id=cls.name, stimulus_id=f"{cls.name}-r{r:04d}")
            )
    return recordings
