"""Core gaze domain types and inter-sample angle computation.

A scanpath is handled as the raw ordered sequence of 2-D gaze samples; no
fixation or saccade detection is applied. The only derived quantity is the
sequence of inter-sample movement directions, expressed in degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class RecordingTooShortError(ValueError):
    """Raised when a recording has fewer than two samples."""


@dataclass(frozen=True)
class GazeSample:
    """One gaze position. Units are whatever the tracker produced (pixels,
    normalized coordinates); they only need to be consistent within a
    recording. ``t`` is an optional timestamp in milliseconds."""

    x: float
    y: float
    t: Optional[float] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"gaze sample coordinates must be finite, got ({self.x}, {self.y})")
        if self.t is not None and not math.isfinite(self.t):
            raise ValueError(f"gaze sample timestamp must be finite, got {self.t}")


@dataclass(frozen=True)
class GazeRecording:
    """An ordered scanpath with its subject and stimulus labels."""

    samples: tuple[GazeSample, ...]
    subject_id: str
    stimulus_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if len(self.samples) < 2:
            raise RecordingTooShortError(
                f"recording needs at least 2 samples to define an angle, got {len(self.samples)}"
            )
        times = [s.t for s in self.samples if s.t is not None]
        if len(times) == len(self.samples):
            for a, b in zip(times, times[1:]):
                if b < a:
                    raise ValueError(f"timestamps must be non-decreasing, got {a} then {b}")

    def __len__(self) -> int:
        return len(self.samples)

    def xy(self) -> np.ndarray:
        """Sample positions as a float array of shape (n, 2)."""
        return np.array([(s.x, s.y) for s in self.samples], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class AngleSequence:
    """Inter-sample movement directions in degrees, each in [0, 360)."""

    angles: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.angles, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"angle sequence must be 1-D, got shape {arr.shape}")
        if arr.size and (np.min(arr) < 0.0 or np.max(arr) >= 360.0):
            raise ValueError("angles must lie in [0, 360)")
        arr.setflags(write=False)
        object.__setattr__(self, "angles", arr)

    def __len__(self) -> int:
        return int(self.angles.size)


def wrap_degrees(angles: np.ndarray) -> np.ndarray:
    """Map arbitrary degree values into [0, 360)."""
    wrapped = np.mod(angles, 360.0)
    # np.mod can round a tiny negative up to exactly 360.0.
    return np.where(wrapped == 360.0, 0.0, wrapped)


def compute_angles(recording: GazeRecording) -> AngleSequence:
    """Direction of each displacement vector between consecutive samples.

    Angle j is the direction of ``sample[j+1] - sample[j]``, measured
    counterclockwise from the positive x axis and mapped into [0, 360).
    A zero displacement (repeated sample) yields angle 0, which keeps the
    sequence aligned with the sample order.
    """
    pts = recording.xy()
    deltas = np.diff(pts, axis=0)
    raw = np.degrees(np.arctan2(deltas[:, 1], deltas[:, 0]))
    return AngleSequence(wrap_degrees(raw))


def circular_mean_degrees(angles: Sequence[float]) -> float:
    """Circular mean of angles in degrees, in [0, 360).

    Computed from the mean resultant vector, so the 0/360 wraparound is
    handled correctly. Undefined (raises) for an empty input.
    """
    arr = np.asarray(angles, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("circular mean of an empty sequence is undefined")
    rad = np.deg2rad(arr)
    mean = math.degrees(math.atan2(np.mean(np.sin(rad)), np.mean(np.cos(rad))))
    return float(wrap_degrees(np.array(mean)))
