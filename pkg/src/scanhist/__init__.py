"""Scanpath classification with trainable angle-range histogram features."""

from .dataset import (
    ClassTarget,
    DatasetManifest,
    ManifestEntry,
    ManifestError,
    SplitInfeasibleError,
    load_manifest,
    load_recording,
    load_recordings,
    split_disjoint,
    split_items,
)
from .features import (
    AngleCheck,
    AngleSet,
    AngleSetBank,
    FeatureTensor,
    FiredTrace,
    SignMode,
    backward,
    check_fires,
    forward,
    init_bank,
    load_bank,
    renormalize_gradient,
    save_bank,
)
from .gaze import (
    AngleSequence,
    GazeRecording,
    GazeSample,
    RecordingTooShortError,
    circular_mean_degrees,
    compute_angles,
)
from .network import FeedforwardClassifier, NetworkSpec, TrainSchedule
from .synthetic import AngleMode, SyntheticClass, SyntheticSpec, generate_synthetic
from .training import LabeledData, evaluate, labeled_from_recordings, train

__version__ = "0.1.0"

__all__ = [
    "AngleCheck",
    "AngleMode",
    "AngleSequence",
    "AngleSet",
    "AngleSetBank",
    "ClassTarget",
    "DatasetManifest",
    "FeatureTensor",
    "FeedforwardClassifier",
    "FiredTrace",
    "GazeRecording",
    "GazeSample",
    "LabeledData",
    "ManifestEntry",
    "ManifestError",
    "NetworkSpec",
    "RecordingTooShortError",
    "SignMode",
    "SplitInfeasibleError",
    "SyntheticClass",
    "SyntheticSpec",
    "TrainSchedule",
    "backward",
    "check_fires",
    "circular_mean_degrees",
    "compute_angles",
    "evaluate",
    "forward",
    "generate_synthetic",
    "init_bank",
    "labeled_from_recordings",
    "load_bank",
    "load_manifest",
    "load_recording",
    "load_recordings",
    "renormalize_gradient",
    "save_bank",
    "split_disjoint",
    "split_items",
    "train",
]
