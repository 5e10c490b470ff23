"""Trainable angle-range histogram features.

The feature layer holds a bank of angle sets. Each set is an ordered list of
checks; a check fires when an inter-sample angle falls within a trainable
half-width ``range`` of its fixed ``base`` angle (circular distance, so the
0/360 seam is handled). Sliding a window of ``set_size`` consecutive angles
over a sequence, the fired checks of a window form a binary index
(bit k set when check k fired), and the indexed bin of the set's histogram
is incremented. The normalized histograms are the features handed to a
classifier.

Training adapts only the ranges. Bin gradients arriving from the classifier
are accumulated per check over every window in which the check fired, and
the accumulated update is applied to the ranges once, after all windows have
been visited. The two phases are deliberate: applying updates mid-pass would
change the very checks whose firing pattern produced the stored indices.
The bin counts are step functions of the ranges, so this is a surrogate
update rule, not an exact derivative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .gaze import AngleSequence

RANGE_MAX = 180.0

# Chunk of sets processed at once in the vectorized passes; bounds the
# (chunk x windows x set_size) intermediate.
_SET_CHUNK = 512


class SignMode(Enum):
    """How the accumulated bin gradient moves a range.

    ADDITIVE adds ``lr * accumulated`` to the range, so a positive bin
    gradient means "grow". DESCENT subtracts it, the right choice when the
    incoming values are raw loss derivatives. The training loop negates loss
    gradients before an ADDITIVE update, making the two modes agree.
    """

    ADDITIVE = "additive"
    DESCENT = "descent"

    @classmethod
    def parse(cls, value: "str | SignMode") -> "SignMode":
        if isinstance(value, SignMode):
            return value
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown sign mode {value!r}; expected 'additive' or 'descent'"
            ) from None


@dataclass(frozen=True)
class AngleCheck:
    """One base angle plus trainable half-width, with its update buffer."""

    base: float
    range: float
    range_update: float = 0.0


@dataclass(frozen=True)
class AngleSet:
    """The ordered checks applied to one window of consecutive angles."""

    checks: tuple[AngleCheck, ...]
    set_index: int


@dataclass(eq=False)
class AngleSetBank:
    """All angle sets of the layer, stored as flat parameter arrays.

    ``bases`` and ``ranges`` have shape (num_sets, set_size); check k of set
    i lives at [i, k]. ``range_updates`` is the per-check gradient
    accumulator, zeroed before and after every range update.
    """

    bases: np.ndarray
    ranges: np.ndarray
    rng_seed: int
    range_min: float = 0.5
    range_updates: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.bases = np.ascontiguousarray(self.bases, dtype=np.float64)
        self.ranges = np.ascontiguousarray(self.ranges, dtype=np.float64)
        if self.bases.ndim != 2 or self.bases.shape != self.ranges.shape:
            raise ValueError(
                f"bases and ranges must share a (num_sets, set_size) shape, "
                f"got {self.bases.shape} and {self.ranges.shape}"
            )
        if not 0.0 < self.range_min <= RANGE_MAX:
            raise ValueError(f"range_min must be in (0, {RANGE_MAX}], got {self.range_min}")
        if self.range_updates is None:
            self.range_updates = np.zeros_like(self.ranges)
        else:
            self.range_updates = np.ascontiguousarray(self.range_updates, dtype=np.float64)
            if self.range_updates.shape != self.ranges.shape:
                raise ValueError("range_updates shape must match ranges")

    @property
    def num_sets(self) -> int:
        return self.bases.shape[0]

    @property
    def set_size(self) -> int:
        return self.bases.shape[1]

    @property
    def num_bins(self) -> int:
        return 1 << self.set_size

    @property
    def feature_dim(self) -> int:
        return self.num_sets * self.num_bins

    def check(self, set_index: int, check_index: int) -> AngleCheck:
        return AngleCheck(
            base=float(self.bases[set_index, check_index]),
            range=float(self.ranges[set_index, check_index]),
            range_update=float(self.range_updates[set_index, check_index]),
        )

    @property
    def sets(self) -> list[AngleSet]:
        return [
            AngleSet(tuple(self.check(i, k) for k in range(self.set_size)), set_index=i)
            for i in range(self.num_sets)
        ]

    def copy(self) -> "AngleSetBank":
        return AngleSetBank(
            bases=self.bases.copy(),
            ranges=self.ranges.copy(),
            rng_seed=self.rng_seed,
            range_min=self.range_min,
            range_updates=self.range_updates.copy(),
        )


@dataclass(frozen=True, eq=False)
class FeatureTensor:
    """Per-set histograms over window indices.

    ``values`` are the normalized rows (each nonempty row sums to 1),
    ``counts`` the raw integer histograms, and ``window_counts`` the number
    of windows each set saw. A sequence shorter than the set size yields
    all-zero rows with ``window_counts == 0``; that is a flag, not an error.
    """

    values: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    window_counts: np.ndarray = field(repr=False)

    @property
    def shape(self) -> "tuple[int, int]":
        return self.values.shape  # type: ignore[return-value]

    def flattened(self) -> np.ndarray:
        """Set-major flattening (set 0 bins 0..B-1, then set 1, ...)."""
        return self.values.reshape(-1)


@dataclass(frozen=True, eq=False)
class FiredTrace:
    """Histogram index of every (set, window) pair from a forward pass.

    Bit k of an index records whether check k fired, so the backward pass
    can recover the fired checks without re-evaluating anything.
    """

    indices: np.ndarray = field(repr=False)  # (num_sets, num_windows), int64

    @property
    def num_windows(self) -> int:
        return int(self.indices.shape[1])


def init_bank(
    num_sets: int,
    set_size: int,
    seed: int,
    init_range: "tuple[float, float]" = (10.0, 60.0),
    range_min: float = 0.5,
) -> AngleSetBank:
    """Randomly initialize a bank: bases uniform on [0, 360), ranges uniform
    on ``init_range``. Deterministic for a given seed."""
    if num_sets < 1 or set_size < 1:
        raise ValueError(f"need num_sets >= 1 and set_size >= 1, got {num_sets}, {set_size}")
    lo, hi = float(init_range[0]), float(init_range[1])
    if not (range_min <= lo <= hi <= RANGE_MAX):
        raise ValueError(
            f"init_range must satisfy {range_min} <= lo <= hi <= {RANGE_MAX}, got ({lo}, {hi})"
        )
    rng = np.random.default_rng(seed)
    bases = rng.uniform(0.0, 360.0, size=(num_sets, set_size))
    ranges = rng.uniform(lo, hi, size=(num_sets, set_size))
    return AngleSetBank(bases=bases, ranges=ranges, rng_seed=seed, range_min=range_min)


def circular_distance(a: "float | np.ndarray", b: "float | np.ndarray") -> "float | np.ndarray":
    """Shortest angular distance in degrees, in [0, 180]."""
    d = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    return np.minimum(d, 360.0 - d)


def check_fires(check: AngleCheck, angle: float) -> bool:
    """True iff the angle lies within ``check.range`` of ``check.base``."""
    return bool(circular_distance(angle, check.base) <= check.range)


def _window_view(angles: np.ndarray, set_size: int) -> np.ndarray:
    return np.lib.stride_tricks.sliding_window_view(angles, set_size)


def _window_indices(bank: AngleSetBank, windows: np.ndarray) -> np.ndarray:
    """Histogram index of every (set, window) pair, shape (num_sets, W)."""
    n_windows = windows.shape[0]
    weights = (1 << np.arange(bank.set_size, dtype=np.int64))
    indices = np.empty((bank.num_sets, n_windows), dtype=np.int64)
    for start in range(0, bank.num_sets, _SET_CHUNK):
        stop = min(start + _SET_CHUNK, bank.num_sets)
        diff = np.abs(windows[None, :, :] - bank.bases[start:stop, None, :])
        dist = np.minimum(diff, 360.0 - diff)
        fires = dist <= bank.ranges[start:stop, None, :]
        indices[start:stop] = fires @ weights
    return indices


def forward(bank: AngleSetBank, seq: AngleSequence) -> "tuple[FeatureTensor, FiredTrace]":
    """Histogram pass over every full window of the sequence.

    Window starts run over 0 .. len(seq) - set_size, so each set sees
    ``len(seq) - set_size + 1`` windows and the raw counts of a set sum to
    exactly that number. Rows are then normalized to sum to 1.
    """
    angles = seq.angles
    n_windows = len(seq) - bank.set_size + 1
    if n_windows <= 0:
        shape = (bank.num_sets, bank.num_bins)
        tensor = FeatureTensor(
            values=np.zeros(shape),
            counts=np.zeros(shape, dtype=np.int64),
            window_counts=np.zeros(bank.num_sets, dtype=np.int64),
        )
        return tensor, FiredTrace(np.zeros((bank.num_sets, 0), dtype=np.int64))

    indices = _window_indices(bank, _window_view(angles, bank.set_size))
    flat = (indices + (np.arange(bank.num_sets, dtype=np.int64)[:, None] * bank.num_bins)).ravel()
    counts = np.bincount(flat, minlength=bank.feature_dim).reshape(bank.num_sets, bank.num_bins)
    values = counts / float(n_windows)
    window_counts = np.full(bank.num_sets, n_windows, dtype=np.int64)
    return FeatureTensor(values=values, counts=counts, window_counts=window_counts), FiredTrace(indices)


def reset_range_updates(bank: AngleSetBank) -> None:
    bank.range_updates.fill(0.0)


def accumulate_range_updates(bank: AngleSetBank, trace: FiredTrace, grad: np.ndarray) -> None:
    """Phase 1 of the range update: sum bin gradients into the accumulators.

    For every (set, window) the stored index selects the bin gradient, and
    that value is added to the accumulator of each check whose bit is set in
    the index. Ranges are only read here, never written, so accumulation
    over many windows (or many recordings) stays self-consistent.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != (bank.num_sets, bank.num_bins):
        raise ValueError(
            f"gradient shape {grad.shape} does not match bank ({bank.num_sets}, {bank.num_bins})"
        )
    indices = trace.indices
    if indices.shape[0] != bank.num_sets:
        raise ValueError("trace does not belong to this bank")
    if indices.shape[1] == 0:
        return
    bits = np.arange(bank.set_size, dtype=np.int64)
    for start in range(0, bank.num_sets, _SET_CHUNK):
        stop = min(start + _SET_CHUNK, bank.num_sets)
        idx = indices[start:stop]
        g = np.take_along_axis(grad[start:stop], idx, axis=1)
        fired = ((idx[:, :, None] >> bits) & 1).astype(np.float64)
        bank.range_updates[start:stop] += np.einsum("sw,swk->sk", g, fired)


def apply_range_updates(bank: AngleSetBank, range_lr: float, sign_mode: SignMode) -> None:
    """Phase 2: move each range by ``+-lr * accumulator``, clamp, zero buffers."""
    sign = 1.0 if sign_mode is SignMode.ADDITIVE else -1.0
    np.add(bank.ranges, sign * range_lr * bank.range_updates, out=bank.ranges)
    np.clip(bank.ranges, bank.range_min, RANGE_MAX, out=bank.ranges)
    bank.range_updates.fill(0.0)


def backward(
    bank: AngleSetBank,
    seq: AngleSequence,
    trace: FiredTrace,
    grad: np.ndarray,
    range_lr: float,
    sign_mode: "str | SignMode" = SignMode.ADDITIVE,
) -> AngleSetBank:
    """One full range-adaptation pass for a single sequence.

    Requires the trace produced by :func:`forward` on the same bank and
    sequence; the indices replay everything the update needs. The bank is
    mutated in place and returned.
    """
    sign_mode = SignMode.parse(sign_mode)
    expected = max(len(seq) - bank.set_size + 1, 0)
    if trace.num_windows != expected:
        raise ValueError(
            f"trace has {trace.num_windows} windows but sequence implies {expected}"
        )
    reset_range_updates(bank)
    accumulate_range_updates(bank, trace, grad)
    apply_range_updates(bank, range_lr, sign_mode)
    return bank


def renormalize_gradient(tensor: FeatureTensor, upstream: np.ndarray) -> np.ndarray:
    """Pull a gradient at the normalized histograms back to the raw counts.

    For a row with raw sum S and normalized values h, the chain rule through
    c -> c / sum(c) gives ``out_b = (upstream_b - sum_c upstream_c * h_c) / S``.
    Rows that saw no windows map to zero. Optional preprocessing; the
    default update path feeds bin gradients to the ranges unmodified.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != tensor.values.shape:
        raise ValueError(
            f"upstream shape {upstream.shape} does not match features {tensor.values.shape}"
        )
    out = np.zeros_like(upstream)
    nonempty = tensor.window_counts > 0
    if np.any(nonempty):
        u = upstream[nonempty]
        h = tensor.values[nonempty]
        s = tensor.window_counts[nonempty].astype(np.float64)[:, None]
        out[nonempty] = (u - (u * h).sum(axis=1, keepdims=True)) / s
    return out


_BANK_FORMAT = "scanhist-bank-v1"


def dumps_bank(bank: AngleSetBank) -> str:
    """Serialize the bank as versioned flat text, one check per line.

    Floats are written with ``repr``, which round-trips float64 exactly.
    """
    lines = [
        _BANK_FORMAT,
        f"num_sets={bank.num_sets}",
        f"set_size={bank.set_size}",
        f"seed={bank.rng_seed}",
        f"range_min={bank.range_min!r}",
        "set_index,check_index,base,range",
    ]
    for i in range(bank.num_sets):
        for k in range(bank.set_size):
            lines.append(f"{i},{k},{float(bank.bases[i, k])!r},{float(bank.ranges[i, k])!r}")
    return "\n".join(lines) + "\n"


def save_bank(bank: AngleSetBank, path: "str | Path") -> None:
    Path(path).write_text(dumps_bank(bank))


def loads_bank(text: str) -> AngleSetBank:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _BANK_FORMAT:
        raise ValueError(f"not a {_BANK_FORMAT} file")
    header: dict[str, str] = {}
    body_start = 1
    for ln in lines[1:]:
        if "=" not in ln:
            break
        key, _, value = ln.partition("=")
        header[key] = value
        body_start += 1
    try:
        num_sets = int(header["num_sets"])
        set_size = int(header["set_size"])
        seed = int(header["seed"])
        range_min = float(header["range_min"])
    except KeyError as exc:
        raise ValueError(f"bank header is missing {exc}") from None
    rows = lines[body_start:]
    if rows and rows[0].startswith("set_index"):
        rows = rows[1:]
    if len(rows) != num_sets * set_size:
        raise ValueError(f"expected {num_sets * set_size} check lines, found {len(rows)}")
    bases = np.empty((num_sets, set_size))
    ranges = np.empty((num_sets, set_size))
    for row in rows:
        parts = row.split(",")
        if len(parts) != 4:
            raise ValueError(f"malformed check line {row!r}")
        i, k = int(parts[0]), int(parts[1])
        bases[i, k] = float(parts[2])
        ranges[i, k] = float(parts[3])
    return AngleSetBank(bases=bases, ranges=ranges, rng_seed=seed, range_min=range_min)


def load_bank(path: "str | Path") -> AngleSetBank:
    return loads_bank(Path(path).read_text())
