from __future__ import annotations

import json

import numpy as np
import pytest

from pegeval.core import (
    GRANULARITIES,
    Granularity,
    MetricConfig,
    PegevalError,
    find_transitions,
    validate_sequence,
    vocabulary_for,
)
from pegeval.metrics import balanced_scores, confusion, evaluate_sequence
from pegeval.synth import (
    CorpusSpec,
    GeneratorParams,
    PerturbParams,
    generate,
    perturb,
    write_corpus,
)


def _segments(track):
    boundaries = [t.index for t in find_transitions(track)]
    points = [0] + boundaries + [len(track)]
    labels = track.labels
    return [
        (int(labels[a]), a, b) for a, b in zip(points, points[1:])
    ]


class TestGenerate:
    def test_deterministic_per_seed(self):
        a = generate(GeneratorParams(seed=4))
        b = generate(GeneratorParams(seed=4))
        for g in GRANULARITIES:
            assert (a.track(g).labels == b.track(g).labels).all()

    def test_different_seeds_differ(self):
        a = generate(GeneratorParams(seed=1))
        b = generate(GeneratorParams(seed=2))
        assert len(a) != len(b) or (a.step.labels != b.step.labels).any()

    def test_validates_across_seeds(self):
        # spot check; the full 10,000-seed sweep holds and takes ~12 s
        for seed in range(1000):
            assert validate_sequence(generate(GeneratorParams(seed=seed))) == []

    def test_twelve_step_segments_in_order(self):
        seq = generate(GeneratorParams(seed=8))
        vocab = vocabulary_for(Granularity.STEP)
        non_idle = [s for s in _segments(seq.step) if s[0] != vocab.idle_index]
        assert len(non_idle) == 12
        names = [vocab.labels[s[0]] for s in non_idle]
        assert names == [f"Block{i}L2R" for i in range(1, 7)] + [
            f"Block{i}R2L" for i in range(1, 7)
        ]

    def test_phase_idle_iff_step_idle(self):
        seq = generate(GeneratorParams(seed=9))
        phase_idle = seq.phase.labels == vocabulary_for(Granularity.PHASE).idle_index
        step_idle = seq.step.labels == vocabulary_for(Granularity.STEP).idle_index
        assert (phase_idle == step_idle).all()

    def test_idle_fraction_near_target(self):
        fractions = []
        for seed in range(90):
            seq = generate(GeneratorParams(seed=seed))
            fractions.append(
                float((seq.phase.labels == vocabulary_for(Granularity.PHASE).idle_index).mean())
            )
        mean_fraction = float(np.mean(fractions))
        assert 0.025 <= mean_fraction <= 0.055

    def test_verb_pattern_within_step(self):
        seq = generate(GeneratorParams(seed=10))
        vocab = vocabulary_for(Granularity.VERB_LEFT)
        names = {i: n for i, n in enumerate(vocab.labels)}
        # left hand is the source during L2R: catch, extract, hold per step
        left = [names[s[0]] for s in _segments(seq.verb_left) if names[s[0]] != "Idle"]
        assert left[:3] == ["Catch", "Extract", "Hold"]
        # and the destination during R2L: catch, hold, insert
        assert left[3 * 6 :][:3] == ["Catch", "Hold", "Insert"]

    def test_min_segment_spacing_respected(self):
        params = GeneratorParams(seed=11)
        seq = generate(params)
        frames_per_gap = params.min_gap_ms / (1000.0 / params.rate_hz)
        for g in GRANULARITIES:
            transitions = [t.index for t in find_transitions(seq.track(g))]
            gaps = np.diff([0] + transitions + [len(seq)])
            assert gaps.min() >= int(frames_per_gap) - 1

    def test_invalid_params_rejected(self):
        with pytest.raises(PegevalError):
            GeneratorParams(step_duration_ms=(100.0, 200.0))
        with pytest.raises(PegevalError):
            GeneratorParams(rate_hz=0.0)

    def test_missing_insert_anomaly(self):
        vocab = vocabulary_for(Granularity.VERB_RIGHT)
        insert = vocab.index_of("Insert")
        baseline = generate(GeneratorParams(seed=12))
        # the right hand is the destination of all six L2R steps
        assert len([s for s in _segments(baseline.verb_right) if s[0] == insert]) == 6
        seq = generate(GeneratorParams(seed=12, missing_insert_step=3))
        right_inserts = [s for s in _segments(seq.verb_right) if s[0] == insert]
        assert len(right_inserts) == 5
        # the left hand (R2L destination) is unaffected
        left_inserts = [s for s in _segments(seq.verb_left) if s[0] == insert]
        assert len(left_inserts) == 6

    def test_step_overlap_anomaly_resolved_to_later(self):
        with pytest.warns(UserWarning, match="overlap"):
            seq = generate(GeneratorParams(seed=13, step_overlap_at=2))
        vocab = vocabulary_for(Granularity.STEP)
        names = [vocab.labels[s[0]] for s in _segments(seq.step) if s[0] != vocab.idle_index]
        assert names == [f"Block{i}L2R" for i in range(1, 7)] + [
            f"Block{i}R2L" for i in range(1, 7)
        ]


class TestPerturb:
    def test_zero_perturbation_is_identity(self, synthetic_sequence):
        out = perturb(synthetic_sequence, PerturbParams(seed=99))
        for g in GRANULARITIES:
            assert (out.track(g).labels == synthetic_sequence.track(g).labels).all()

    def test_kinds_preserved_under_jitter(self, synthetic_sequence):
        out = perturb(
            synthetic_sequence,
            PerturbParams(seed=1, transition_jitter_ms=(-200.0, 200.0), unique_matching=True),
        )
        for g in GRANULARITIES:
            base = [t.kind for t in find_transitions(synthetic_sequence.track(g))]
            moved = [t.kind for t in find_transitions(out.track(g))]
            assert base == moved

    def test_jitter_within_delay_gives_perfect_ad(self, synthetic_sequence):
        out = perturb(
            synthetic_sequence,
            PerturbParams(seed=2, transition_jitter_ms=(-233.3, 233.3), unique_matching=True),
        )
        scores = evaluate_sequence(synthetic_sequence, out, MetricConfig(250.0))
        assert scores.combined_ad_accuracy() == 1.0

    def test_excessive_jitter_rejected_in_unique_mode(self, synthetic_sequence):
        with pytest.raises(PegevalError):
            perturb(
                synthetic_sequence,
                PerturbParams(
                    seed=3, transition_jitter_ms=(-5000.0, 5000.0), unique_matching=True
                ),
            )

    def test_full_label_noise_destroys_accuracy(self, synthetic_sequence):
        out = perturb(synthetic_sequence, PerturbParams(seed=4, label_noise_rate=1.0))
        for g in GRANULARITIES:
            counts = confusion(synthetic_sequence.track(g), out.track(g))
            assert counts.tp.sum() == 0
            assert balanced_scores(counts).balanced_accuracy == 0.0

    def test_dropped_granularity_is_constant_idle(self, synthetic_sequence):
        out = perturb(
            synthetic_sequence,
            PerturbParams(drop_granularities=frozenset({Granularity.PHASE})),
        )
        idle = vocabulary_for(Granularity.PHASE).idle_index
        assert (out.phase.labels == idle).all()
        assert (out.step.labels == synthetic_sequence.step.labels).all()

    def test_noise_rate_validated(self):
        with pytest.raises(PegevalError):
            PerturbParams(label_noise_rate=1.5)


class TestWriteCorpus:
    def test_layout_and_manifest(self, tmp_path):
        ids = write_corpus(tmp_path / "corpus", CorpusSpec(n_sequences=3, base_seed=5))
        assert len(ids) == 3
        manifest = json.loads((tmp_path / "corpus" / "manifest.json").read_text())
        assert [s["id"] for s in manifest["sequences"]] == ids
        for seq_id in ids:
            seq_dir = tmp_path / "corpus" / seq_id
            assert (seq_dir / "annotation.txt").exists()
            assert (seq_dir / "kinematics.csv").exists()

    def test_round_trips_through_ingest(self, tmp_path):
        from pegeval.ingest import parse_annotation_file, parse_kinematics

        write_corpus(tmp_path / "c", CorpusSpec(n_sequences=1, base_seed=2))
        seq_dir = next(p for p in (tmp_path / "c").iterdir() if p.is_dir())
        seq = parse_annotation_file((seq_dir / "annotation.txt").read_bytes())
        kin = parse_kinematics((seq_dir / "kinematics.csv").read_bytes())
        assert len(seq) == kin.shape[0]
