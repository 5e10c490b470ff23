from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scanhist.gaze import (
    AngleSequence,
    GazeRecording,
    GazeSample,
    RecordingTooShortError,
    circular_mean_degrees,
    compute_angles,
    wrap_degrees,
)


def recording(points, subject="s", stimulus="i"):
    return GazeRecording(tuple(GazeSample(x, y) for x, y in points), subject, stimulus)


class TestGazeTypes:
    def test_sample_rejects_non_finite(self):
        with pytest.raises(ValueError):
            GazeSample(float("nan"), 0.0)
        with pytest.raises(ValueError):
            GazeSample(0.0, float("inf"))

    def test_recording_needs_two_samples(self):
        with pytest.raises(RecordingTooShortError):
            recording([(0.0, 0.0)])

    def test_timestamps_must_not_decrease(self):
        samples = (GazeSample(0, 0, t=10.0), GazeSample(1, 0, t=5.0))
        with pytest.raises(ValueError, match="non-decreasing"):
            GazeRecording(samples, "s", "i")

    def test_angle_sequence_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            AngleSequence(np.array([0.0, 360.0]))
        with pytest.raises(ValueError):
            AngleSequence(np.array([-1.0]))


class TestComputeAngles:
    @pytest.mark.parametrize(
        "points,expected",
        [
            ([(0, 0), (1, 0)], [0.0]),
            ([(0, 0), (0, 1), (-1, 1)], [90.0, 180.0]),
            ([(0, 0), (1, 1)], [45.0]),
            ([(0, 0), (0, -1)], [270.0]),
        ],
    )
    def test_axis_aligned_and_diagonal(self, points, expected):
        assert compute_angles(recording(points)).angles.tolist() == expected

    def test_zero_displacement_gives_zero(self):
        seq = compute_angles(recording([(2.0, 3.0), (2.0, 3.0), (2.0, 4.0)]))
        assert seq.angles[0] == 0.0
        assert seq.angles[1] == 90.0

    def test_length_is_samples_minus_one(self, rng):
        pts = rng.normal(size=(17, 2))
        rec = recording([tuple(p) for p in pts])
        assert len(compute_angles(rec)) == 16

# Points on a 1/8 grid keep the arithmetic exact: sums and differences of
# such values carry no rounding, so the invariants can be asserted tightly.
grid_coord = st.integers(-8000, 8000).map(lambda v: v / 8.0)
grid_points = st.lists(st.tuples(grid_coord, grid_coord), min_size=2, max_size=12)


class TestAngleInvariances:
    @given(grid_points, st.floats(0.0, 360.0, exclude_max=True))
    @settings(max_examples=60, deadline=None)
    def test_rotation_shifts_angles(self, points, phi):
        base = compute_angles(recording(points)).angles
        rad = math.radians(phi)
        rotated = [
            (x * math.cos(rad) - y * math.sin(rad), x * math.sin(rad) + y * math.cos(rad))
            for x, y in points
        ]
        moved = compute_angles(recording(rotated)).angles
        for j, (a, b) in enumerate(zip(base, moved)):
            dx, dy = np.subtract(points[j + 1], points[j])
            if dx == 0.0 and dy == 0.0:
                continue  # zero steps pin to angle 0 and do not rotate
            diff = (b - a - phi) % 360.0
            assert min(diff, 360.0 - diff) < 1e-9

    @given(grid_points, grid_coord, grid_coord)
    @settings(max_examples=60, deadline=None)
    def test_translation_leaves_angles_unchanged(self, points, tx, ty):
        base = compute_angles(recording(points)).angles
        shifted = compute_angles(recording([(x + tx, y + ty) for x, y in points])).angles
        assert np.array_equal(base, shifted)


class TestWrapAndCircularMean:
    def test_wrap_tiny_negative_stays_in_range(self):
        assert 0.0 <= float(wrap_degrees(np.array(-1e-18))) < 360.0

    def test_circular_mean_wraps_seam(self):
        mean = circular_mean_degrees([350.0, 10.0])
        assert min(mean, 360.0 - mean) < 1e-9

    def test_circular_mean_empty_raises(self):
        with pytest.raises(ValueError):
            circular_mean_degrees([])
