from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from pegeval.core import Granularity, LabelTrack, WorkflowSequence

FIXTURES = Path(__file__).parent / "fixtures"
PUBLISHED = FIXTURES / "published"


def load_published_column(name: str, column: str = "ad_accuracy") -> np.ndarray:
    """One score column from a published per-sequence fixture, by sequence id."""
    with open(PUBLISHED / f"{name}.csv", newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: r["sequence"])
    return np.array([float(r[column]) for r in rows])


def make_sequence(
    phase, step, verb_left, verb_right, sequence_id="test", period=1000.0 / 30.0
) -> WorkflowSequence:
    return WorkflowSequence(
        sequence_id,
        LabelTrack(Granularity.PHASE, np.asarray(phase), period),
        LabelTrack(Granularity.STEP, np.asarray(step), period),
        LabelTrack(Granularity.VERB_LEFT, np.asarray(verb_left), period),
        LabelTrack(Granularity.VERB_RIGHT, np.asarray(verb_right), period),
    )


def constant_sequence(n_frames: int, sequence_id="const") -> WorkflowSequence:
    zeros = np.zeros(n_frames, dtype=np.int64)
    return make_sequence(zeros, zeros, zeros, zeros, sequence_id)


@pytest.fixture(scope="session")
def synthetic_sequence():
    from pegeval.synth import GeneratorParams, generate

    return generate(GeneratorParams(seed=123))
