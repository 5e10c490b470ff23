"""Dataset ingestion: gaze CSV files, manifests, and disjoint splitting.

File formats:

* gaze CSV: one sample per line, ``x,y`` or ``x,y,t``; an optional header
  line is detected automatically; LF or CRLF endings both work.
* manifest CSV: one recording per line, ``path,subject_id,stimulus_id``;
  paths are resolved relative to the manifest's directory.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, TypeVar

import numpy as np

from .gaze import GazeRecording, GazeSample


class ManifestError(ValueError):
    """Raised for unreadable, malformed, or inconsistent manifests."""


class SplitInfeasibleError(ValueError):
    """Raised when no disjoint split can place every class on both sides."""


class ClassTarget(Enum):
    """What the classifier should predict."""

    SUBJECT = "subject"
    STIMULUS = "stimulus"

    @classmethod
    def parse(cls, value: "str | ClassTarget") -> "ClassTarget":
        if isinstance(value, ClassTarget):
            return value
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown class target {value!r}; expected 'subject' or 'stimulus'"
            ) from None


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    subject_id: str
    stimulus_id: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    class_target: ClassTarget

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ManifestError("manifest is empty")
        classes = {class_label(e, self.class_target) for e in self.entries}
        if len(classes) < 2:
            only = next(iter(classes))
            raise ManifestError(
                f"need >= 2 classes for target {self.class_target.value!r}, "
                f"manifest has only {only!r}"
            )

    def __len__(self) -> int:
        return len(self.entries)


def class_label(item: "ManifestEntry | GazeRecording", target: ClassTarget) -> str:
    return item.subject_id if target is ClassTarget.SUBJECT else item.stimulus_id


def group_label(item: "ManifestEntry | GazeRecording", target: ClassTarget) -> str:
    """The identity that must not leak across the split (the other axis)."""
    return item.stimulus_id if target is ClassTarget.SUBJECT else item.subject_id


def _looks_like_header(row: Sequence[str]) -> bool:
    try:
        float(row[0])
    except ValueError:
        return True
    return False


def load_recording(path: "str | Path", subject_id: str = "", stimulus_id: str = "") -> GazeRecording:
    """Parse one gaze CSV file into a :class:`GazeRecording`."""
    path = Path(path)
    samples: list[GazeSample] = []
    try:
        with open(path, newline="") as fh:
            rows = [
                [cell.strip() for cell in row]
                for row in csv.reader(fh)
                if row and any(cell.strip() for cell in row)
            ]
    except OSError as exc:
        raise ManifestError(f"cannot read gaze file {path}: {exc}") from exc
    if rows and _looks_like_header(rows[0]):
        rows = rows[1:]
    for lineno, row in enumerate(rows, start=1):
        if len(row) not in (2, 3):
            raise ManifestError(
                f"{path}:{lineno}: expected 'x,y' or 'x,y,t', got {len(row)} fields"
            )
        try:
            x, y = float(row[0]), float(row[1])
            t = float(row[2]) if len(row) == 3 else None
        except ValueError as exc:
            raise ManifestError(f"{path}:{lineno}: non-numeric value ({exc})") from None
        samples.append(GazeSample(x, y, t))
    try:
        return GazeRecording(tuple(samples), subject_id=subject_id, stimulus_id=stimulus_id)
    except ValueError as exc:
        raise ManifestError(f"{path}: {exc}") from exc


def load_manifest(path: "str | Path", target: "str | ClassTarget") -> DatasetManifest:
    """Read a manifest CSV and validate that every referenced file parses.

    Parse problems are collected per file and reported together, so one bad
    recording does not hide the others.
    """
    path = Path(path)
    target = ClassTarget.parse(target)
    try:
        with open(path, newline="") as fh:
            rows = [
                [cell.strip() for cell in row]
                for row in csv.reader(fh)
                if row and any(cell.strip() for cell in row)
            ]
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if rows and rows[0][:1] == ["path"]:
        rows = rows[1:]
    if not rows:
        raise ManifestError(f"manifest {path} is empty")

    entries: list[ManifestEntry] = []
    failures: list[str] = []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != 3:
            raise ManifestError(
                f"{path}:{lineno}: expected 'path,subject_id,stimulus_id', got {len(row)} fields"
            )
        rec_path = (path.parent / row[0]).resolve()
        if not rec_path.is_file():
            failures.append(f"{path}:{lineno}: missing file {rec_path}")
            continue
        try:
            load_recording(rec_path, subject_id=row[1], stimulus_id=row[2])
        except ManifestError as exc:
            failures.append(str(exc))
            continue
        entries.append(ManifestEntry(rec_path, subject_id=row[1], stimulus_id=row[2]))
    if failures:
        raise ManifestError(
            "manifest has unloadable recordings:\n  " + "\n  ".join(failures)
        )
    return DatasetManifest(tuple(entries), class_target=target)


def load_recordings(manifest: DatasetManifest) -> list[GazeRecording]:
    """Load every recording referenced by the manifest, in manifest order."""
    return [
        load_recording(e.path, subject_id=e.subject_id, stimulus_id=e.stimulus_id)
        for e in manifest.entries
    ]


_T = TypeVar("_T")

_SPLIT_ATTEMPTS = 100


def split_items(
    items: Sequence[_T],
    target: ClassTarget,
    fraction: float,
    seed: int,
) -> "tuple[list[_T], list[_T]]":
    """Split labeled items so no group identity leaks across the halves.

    For target SUBJECT the stimulus sets of the halves are disjoint; for
    target STIMULUS the subject sets are. ``fraction`` is the share of
    groups assigned to the first half. Both halves must end up containing
    every class of the chosen target; group assignments are retried with
    seed-derived shuffles when a random partition misses a class, and a
    class that only ever occurs under a single group is reported as
    infeasible. Deterministic given the seed; item order is preserved.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"split fraction must be in (0, 1), got {fraction}")
    items = list(items)
    classes = sorted({class_label(i, target) for i in items})
    groups = sorted({group_label(i, target) for i in items})
    if len(groups) < 2:
        raise SplitInfeasibleError(
            f"cannot split: every recording shares the single group {groups[0]!r}"
        )

    groups_per_class: dict[str, set[str]] = {c: set() for c in classes}
    for item in items:
        groups_per_class[class_label(item, target)].add(group_label(item, target))
    stuck = [c for c, g in groups_per_class.items() if len(g) < 2]
    if stuck:
        raise SplitInfeasibleError(
            "classes confined to a single "
            f"{group_label_name(target)} cannot appear in both halves: {stuck}"
        )

    n_train = int(round(fraction * len(groups)))
    n_train = min(max(n_train, 1), len(groups) - 1)
    rng = np.random.default_rng(seed)
    for _ in range(_SPLIT_ATTEMPTS):
        order = list(rng.permutation(len(groups)))
        train_groups = {groups[i] for i in order[:n_train]}
        train = [i for i in items if group_label(i, target) in train_groups]
        test = [i for i in items if group_label(i, target) not in train_groups]
        train_classes = {class_label(i, target) for i in train}
        test_classes = {class_label(i, target) for i in test}
        if train_classes == set(classes) == test_classes:
            return train, test
    missing = sorted(set(classes) - (train_classes & test_classes))
    raise SplitInfeasibleError(
        f"no feasible split found in {_SPLIT_ATTEMPTS} attempts; "
        f"classes not coverable on both sides: {missing}"
    )


def group_label_name(target: ClassTarget) -> str:
    return "stimulus" if target is ClassTarget.SUBJECT else "subject"


def split_disjoint(
    manifest: DatasetManifest,
    fraction: float = 0.5,
    seed: int = 0,
    target: Optional[ClassTarget] = None,
) -> "tuple[DatasetManifest, DatasetManifest]":
    """Partition a manifest into identity-disjoint train and test halves."""
    target = manifest.class_target if target is None else ClassTarget.parse(target)
    train, test = split_items(manifest.entries, target, fraction, seed)
    return (
        DatasetManifest(tuple(train), class_target=target),
        DatasetManifest(tuple(test), class_target=target),
    )


def write_recording_csv(path: "str | Path", recording: GazeRecording) -> None:
    """Write a recording back out in the gaze CSV format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        has_t = all(s.t is not None for s in recording.samples)
        writer.writerow(["x", "y", "t"] if has_t else ["x", "y"])
        for s in recording.samples:
            row = [repr(s.x), repr(s.y)]
            if has_t:
                row.append(repr(s.t))
            writer.writerow(row)
