from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scanhist.gaze import AngleSequence
from scanhist.synthetic import AngleMode, SyntheticClass, SyntheticSpec


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


def make_sequence(values) -> AngleSequence:
    return AngleSequence(np.asarray(values, dtype=np.float64))


@pytest.fixture
def two_class_spec() -> SyntheticSpec:
    """Two well-separated classes; easy to classify from angle statistics."""
    return SyntheticSpec(
        classes=(
            SyntheticClass("east", (AngleMode(0.0, 8.0),)),
            SyntheticClass("north", (AngleMode(90.0, 8.0),)),
        ),
        samples_per_recording=60,
        recordings_per_class=24,
    )
