"""Core domain types: vocabularies, label tracks, sequences, transitions.

A recording session is annotated at four granularities (phase, step, and one
verb track per hand). Each granularity has a closed vocabulary that always
contains an ``Idle`` label, and every track is a dense per-frame sequence of
label indices sampled at a fixed rate (30 Hz by default).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

DEFAULT_RATE_HZ = 30.0
DEFAULT_SAMPLE_PERIOD_MS = 1000.0 / DEFAULT_RATE_HZ


class PegevalError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(PegevalError):
    """A domain object violates its invariants."""


class Granularity(str, Enum):
    PHASE = "phase"
    STEP = "step"
    VERB_LEFT = "verb_left"
    VERB_RIGHT = "verb_right"


GRANULARITIES = (
    Granularity.PHASE,
    Granularity.STEP,
    Granularity.VERB_LEFT,
    Granularity.VERB_RIGHT,
)


@dataclass(frozen=True)
class Vocabulary:
    """Closed, ordered label set for one granularity."""

    granularity: Granularity
    labels: tuple[str, ...]
    idle_index: int

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"duplicate labels in {self.granularity.value} vocabulary")
        if not 0 <= self.idle_index < len(self.labels):
            raise ValidationError("idle_index out of range")
        object.__setattr__(
            self, "_lookup", {name.casefold(): i for i, name in enumerate(self.labels)}
        )

    def __len__(self) -> int:
        return len(self.labels)

    def index_of(self, name: str) -> int:
        """Case-insensitive label lookup; raises KeyError for unknown labels."""
        try:
            return self._lookup[name.strip().casefold()]
        except KeyError:
            raise KeyError(f"unknown {self.granularity.value} label {name!r}") from None

    @property
    def idle_label(self) -> str:
        return self.labels[self.idle_index]


PHASE_VOCABULARY = Vocabulary(
    Granularity.PHASE, ("TransferL2R", "TransferR2L", "Idle"), idle_index=2
)

STEP_VOCABULARY = Vocabulary(
    Granularity.STEP,
    tuple(f"Block{i}L2R" for i in range(1, 7))
    + tuple(f"Block{i}R2L" for i in range(1, 7))
    + ("Idle",),
    idle_index=12,
)

_VERB_LABELS = ("Catch", "Drop", "Extract", "Hold", "Insert", "Touch", "Idle")
VERB_LEFT_VOCABULARY = Vocabulary(Granularity.VERB_LEFT, _VERB_LABELS, idle_index=6)
VERB_RIGHT_VOCABULARY = Vocabulary(Granularity.VERB_RIGHT, _VERB_LABELS, idle_index=6)

VOCABULARIES = {
    Granularity.PHASE: PHASE_VOCABULARY,
    Granularity.STEP: STEP_VOCABULARY,
    Granularity.VERB_LEFT: VERB_LEFT_VOCABULARY,
    Granularity.VERB_RIGHT: VERB_RIGHT_VOCABULARY,
}


def vocabulary_for(granularity: Granularity) -> Vocabulary:
    return VOCABULARIES[granularity]


@dataclass(frozen=True)
class LabelTrack:
    """Dense per-frame label indices for one granularity.

    ``labels`` is stored as a read-only int64 array. Construction checks the
    structural invariants (non-empty, 1-D, positive period); index-range
    violations are reported by :func:`validate_sequence` as diagnostics so a
    malformed prediction can be described rather than rejected outright.
    """

    granularity: Granularity
    labels: np.ndarray
    sample_period_ms: float = DEFAULT_SAMPLE_PERIOD_MS

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("label track must be a non-empty 1-D sequence")
        if self.sample_period_ms <= 0:
            raise ValidationError("sample_period_ms must be positive")
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    def check_bounds(self) -> None:
        """Raise ValidationError if any index falls outside the vocabulary."""
        vocab = vocabulary_for(self.granularity)
        if self.labels.min() < 0 or self.labels.max() >= len(vocab):
            raise ValidationError(
                f"label index out of range for {self.granularity.value} vocabulary"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def vocabulary(self) -> Vocabulary:
        return vocabulary_for(self.granularity)

    def label_names(self) -> list[str]:
        vocab = self.vocabulary
        return [vocab.labels[i] for i in self.labels]

    def with_labels(self, labels: np.ndarray) -> "LabelTrack":
        return LabelTrack(self.granularity, labels, self.sample_period_ms)


@dataclass(frozen=True)
class Transition:
    """Label change between frame index-1 and index."""

    index: int
    time_ms: float
    kind: tuple[int, int]  # (from_label, to_label) as vocabulary indices

    @property
    def from_label(self) -> int:
        return self.kind[0]

    @property
    def to_label(self) -> int:
        return self.kind[1]


@dataclass(frozen=True)
class MetricConfig:
    """Configuration for application-dependent score re-estimation.

    acceptable_delay_ms: half-width of the transition window; a predicted
        transition within this delay of a ground-truth transition of the same
        kind is not counted as an error.
    match_source_label: when True a transition kind is the ordered
        (from, to) pair; when False only the destination label must agree.
    """

    acceptable_delay_ms: float = 250.0
    match_source_label: bool = True

    def __post_init__(self):
        if self.acceptable_delay_ms < 0:
            raise ValidationError("acceptable_delay_ms must be >= 0")


@dataclass(frozen=True)
class WorkflowSequence:
    """One recorded session: four aligned label tracks plus an identifier."""

    sequence_id: str
    phase: LabelTrack
    step: LabelTrack
    verb_left: LabelTrack
    verb_right: LabelTrack

    def track(self, granularity: Granularity) -> LabelTrack:
        return getattr(self, granularity.value)

    def tracks(self) -> dict[Granularity, LabelTrack]:
        return {g: self.track(g) for g in GRANULARITIES}

    def __len__(self) -> int:
        return len(self.phase)

    @property
    def sample_period_ms(self) -> float:
        return self.phase.sample_period_ms


def find_transitions(track: LabelTrack) -> list[Transition]:
    """All frame indices i where labels[i-1] != labels[i], ascending."""
    labels = track.labels
    idx = np.nonzero(labels[1:] != labels[:-1])[0] + 1
    period = track.sample_period_ms
    return [
        Transition(int(i), float(i) * period, (int(labels[i - 1]), int(labels[i])))
        for i in idx
    ]


def validate_sequence(seq: WorkflowSequence) -> list[str]:
    """Invariant diagnostics for a sequence; empty list means well-formed.

    Track construction already rejects out-of-vocabulary indices, so the
    reachable diagnostics are cross-track mismatches in length or sampling
    period, plus index-range checks for tracks built through other paths.
    """
    diagnostics: list[str] = []
    lengths = [len(seq.track(g)) for g in GRANULARITIES]
    periods = [seq.track(g).sample_period_ms for g in GRANULARITIES]
    ref_len = max(set(lengths), key=lengths.count)
    ref_period = max(set(periods), key=periods.count)
    for g in GRANULARITIES:
        track = seq.track(g)
        if track.granularity != g:
            diagnostics.append(f"{g.value}: track carries granularity {track.granularity.value}")
        if len(track) != ref_len:
            diagnostics.append(
                f"{g.value}: length {len(track)} differs from common length {ref_len}"
            )
        if track.sample_period_ms != ref_period:
            diagnostics.append(
                f"{g.value}: sample period {track.sample_period_ms} differs from "
                f"common period {ref_period}"
            )
        vocab = vocabulary_for(g)
        bad = np.nonzero((track.labels < 0) | (track.labels >= len(vocab)))[0]
        if bad.size:
            diagnostics.append(
                f"{g.value}: label index {int(track.labels[bad[0]])} out of range "
                f"at frame {int(bad[0])}"
            )
    return diagnostics
