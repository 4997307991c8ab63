"""Synthetic peg-transfer ground truth and controlled prediction perturbation.

The generator lays out a full session in interval space (milliseconds) and
resamples it to dense tracks, so its output exercises the same path as parsed
real annotations. The grammar: a left-to-right phase of six block-transfer
steps, an idle gap, then a right-to-left phase of six steps. Within each step
the source hand catches, extracts and holds the block; the destination hand
catches it mid-step (the hand-off), holds, and inserts it on the peg. Every
emitted segment is at least ``min_gap_ms`` long, which bounds the spacing of
label transitions from below; that bound is what makes jittered predictions
uniquely matchable in the application-dependent metric.

The perturber moves transition boundaries by seeded offsets with kinds
preserved, optionally adds uniform label noise, and can blank whole
granularities to exercise the missing-prediction ranking rule.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    GRANULARITIES,
    Granularity,
    LabelTrack,
    PegevalError,
    WorkflowSequence,
    find_transitions,
    vocabulary_for,
)
from .ingest import (
    KINEMATIC_DIMENSIONS,
    IntervalAnnotation,
    emit_annotation,
    emit_kinematics,
    resample_intervals,
)

N_BLOCKS = 6
STEP_OVERLAP_MS = 500.0  # overlap injected by the step_overlap anomaly


@dataclass(frozen=True)
class GeneratorParams:
    seed: int = 0
    rate_hz: float = 30.0
    step_duration_ms: tuple[float, float] = (9500.0, 13000.0)
    catch_ms: tuple[float, float] = (700.0, 1200.0)
    extract_ms: tuple[float, float] = (700.0, 1400.0)
    insert_ms: tuple[float, float] = (700.0, 1400.0)
    reach_ms: tuple[float, float] = (600.0, 1000.0)  # idle before the first catch
    idle_gap_ms: tuple[float, float] = (1200.0, 2400.0)  # head / phase change / tail
    inter_step_gap_ms: tuple[float, float] = (0.0, 0.0)  # optional idle between steps
    min_gap_ms: float = 600.0
    # anomaly injection (regression fixtures for known ground-truth quirks)
    missing_insert_step: int | None = None  # 0-based step index, absent insert verb
    step_overlap_at: int | None = None  # step s: step s+1 starts before s ends

    def __post_init__(self):
        for name in ("step_duration_ms", "catch_ms", "extract_ms", "insert_ms",
                     "reach_ms", "idle_gap_ms", "inter_step_gap_ms"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise PegevalError(f"{name} must be a non-negative (low, high) range")
        if self.rate_hz <= 0:
            raise PegevalError("rate_hz must be positive")
        if self.min_gap_ms < 0:
            raise PegevalError("min_gap_ms must be >= 0")
        fixed_max = (
            self.reach_ms[1] + self.catch_ms[1] + self.extract_ms[1]
            + self.catch_ms[1] + self.insert_ms[1]
        )
        if self.step_duration_ms[0] < fixed_max + 3 * self.min_gap_ms:
            raise PegevalError(
                "step_duration_ms lower bound cannot fit the verb segments plus "
                f"three spacing gaps (needs >= {fixed_max + 3 * self.min_gap_ms:.0f} ms)"
            )


@dataclass(frozen=True)
class PerturbParams:
    seed: int = 0
    transition_jitter_ms: tuple[float, float] = (0.0, 0.0)  # signed offset range
    label_noise_rate: float = 0.0
    drop_granularities: frozenset[Granularity] = frozenset()
    unique_matching: bool = False  # enforce jitter < min transition gap / 2

    def __post_init__(self):
        lo, hi = self.transition_jitter_ms
        if hi < lo:
            raise PegevalError("transition_jitter_ms must be a (low, high) range")
        if not 0.0 <= self.label_noise_rate <= 1.0:
            raise PegevalError("label_noise_rate must lie in [0, 1]")
        object.__setattr__(self, "drop_granularities", frozenset(self.drop_granularities))


def _draw(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return float(rng.uniform(lo, hi)) if hi > lo else lo


def _step_timeline(rng, params: GeneratorParams, start: float, with_insert: bool):
    """Absolute verb interval times for one step starting at ``start``."""
    duration = _draw(rng, params.step_duration_ms)
    reach = _draw(rng, params.reach_ms)
    catch_src = _draw(rng, params.catch_ms)
    extract = _draw(rng, params.extract_ms)
    catch_dst = _draw(rng, params.catch_ms)
    insert = _draw(rng, params.insert_ms)
    flexible = duration - (reach + catch_src + extract + catch_dst + insert)
    spare = flexible - 3 * params.min_gap_ms
    weights = rng.uniform(1.0, 2.0, size=3)
    carry, hold_dst, tail = params.min_gap_ms + spare * weights / weights.sum()

    t0 = start + reach
    t1 = t0 + catch_src        # src catch ends, extract begins
    t2 = t1 + extract          # extract ends, src hold begins
    t3 = t2 + carry            # dst catch begins
    t4 = t3 + catch_dst        # hand-off: src hold ends, dst hold begins
    t5 = t4 + hold_dst         # dst insert begins
    t6 = t5 + insert
    src = [("Catch", t0, t1), ("Extract", t1, t2), ("Hold", t2, t4)]
    dst = [("Catch", t3, t4), ("Hold", t4, t5)]
    if with_insert:
        dst.append(("Insert", t5, t6))
    else:
        dst[-1] = ("Hold", t4, t6)  # block falls into place; insert absent
    return duration, src, dst


def generate(params: GeneratorParams, sequence_id: str | None = None) -> WorkflowSequence:
    """Deterministic synthetic session for the given parameters."""
    rng = np.random.default_rng(params.seed)
    phase_entries: list[tuple[str, float, float]] = []
    step_entries: list[tuple[str, float, float]] = []
    verb_entries: dict[Granularity, list[tuple[str, float, float]]] = {
        Granularity.VERB_LEFT: [],
        Granularity.VERB_RIGHT: [],
    }

    t = _draw(rng, params.idle_gap_ms)
    step_index = 0
    for phase_label, direction in (("TransferL2R", "L2R"), ("TransferR2L", "R2L")):
        src_hand = Granularity.VERB_LEFT if direction == "L2R" else Granularity.VERB_RIGHT
        dst_hand = Granularity.VERB_RIGHT if direction == "L2R" else Granularity.VERB_LEFT
        for block in range(1, N_BLOCKS + 1):
            start = t
            if params.step_overlap_at is not None and step_index == params.step_overlap_at + 1:
                start = t - STEP_OVERLAP_MS
            with_insert = params.missing_insert_step != step_index
            duration, src, dst = _step_timeline(rng, params, start, with_insert)
            end = start + duration
            step_entries.append((f"Block{block}{direction}", start, end))
            phase_entries.append((phase_label, start, end))
            verb_entries[src_hand].extend(src)
            verb_entries[dst_hand].extend(dst)
            t = end + _draw(rng, params.inter_step_gap_ms)
            step_index += 1
        t += _draw(rng, params.idle_gap_ms)
    duration_ms = t

    tracks = {}
    for g, entries in (
        (Granularity.PHASE, phase_entries),
        (Granularity.STEP, step_entries),
        (Granularity.VERB_LEFT, verb_entries[Granularity.VERB_LEFT]),
        (Granularity.VERB_RIGHT, verb_entries[Granularity.VERB_RIGHT]),
    ):
        ann = IntervalAnnotation(g, tuple(entries))
        tracks[g] = resample_intervals(ann, params.rate_hz, duration_ms)

    return WorkflowSequence(
        sequence_id if sequence_id is not None else f"{params.seed:04d}",
        tracks[Granularity.PHASE],
        tracks[Granularity.STEP],
        tracks[Granularity.VERB_LEFT],
        tracks[Granularity.VERB_RIGHT],
    )


def _min_boundary_spacing(track: LabelTrack) -> int:
    """Smallest spacing (frames) between transitions, including track ends."""
    boundaries = [t.index for t in find_transitions(track)]
    if not boundaries:
        return len(track)
    pts = [0] + boundaries + [len(track)]
    return min(b - a for a, b in zip(pts, pts[1:]))


def _perturb_track(track: LabelTrack, params: PerturbParams, rng) -> LabelTrack:
    n = len(track)
    lo_f = params.transition_jitter_ms[0] / track.sample_period_ms
    hi_f = params.transition_jitter_ms[1] / track.sample_period_ms
    if params.unique_matching:
        max_abs = max(abs(lo_f), abs(hi_f))
        spacing = _min_boundary_spacing(track)
        if max_abs >= spacing / 2:
            raise PegevalError(
                f"jitter up to {max_abs:.1f} frames is too large for unique "
                f"matching (minimum transition spacing is {spacing} frames)"
            )
    transitions = find_transitions(track)
    boundaries = np.array([t.index for t in transitions], dtype=np.int64)
    seg_labels = np.concatenate(
        [[track.labels[0]], [t.to_label for t in transitions]]
    ).astype(np.int64)
    offsets_ms = rng.uniform(params.transition_jitter_ms[0], params.transition_jitter_ms[1],
                             size=boundaries.size)
    shifted = boundaries + np.rint(offsets_ms / track.sample_period_ms).astype(np.int64)
    shifted = np.clip(shifted, 1, n - 1)
    shifted = np.maximum.accumulate(shifted)  # keep boundary order in loose mode
    labels = np.empty(n, dtype=np.int64)
    prev = 0
    for label, boundary in zip(seg_labels[:-1], shifted):
        labels[prev:boundary] = label
        prev = boundary
    labels[prev:] = seg_labels[-1]

    if params.label_noise_rate > 0:
        vocab_size = len(vocabulary_for(track.granularity))
        noisy = rng.random(n) < params.label_noise_rate
        if noisy.any():
            bump = rng.integers(1, vocab_size, size=int(noisy.sum()))
            labels[noisy] = (labels[noisy] + bump) % vocab_size
    return track.with_labels(labels)


def perturb(gt: WorkflowSequence, params: PerturbParams) -> WorkflowSequence:
    """Controlled prediction: jittered boundaries, label noise, dropped tracks."""
    rng = np.random.default_rng(params.seed)
    out = {}
    for g in GRANULARITIES:
        track = gt.track(g)
        if g in params.drop_granularities:
            idle = vocabulary_for(g).idle_index
            out[g] = track.with_labels(np.full(len(track), idle, dtype=np.int64))
            continue
        out[g] = _perturb_track(track, params, rng)
    return WorkflowSequence(
        gt.sequence_id,
        out[Granularity.PHASE],
        out[Granularity.STEP],
        out[Granularity.VERB_LEFT],
        out[Granularity.VERB_RIGHT],
    )


def synthetic_kinematics(n_frames: int, seed: int = 0, rate_hz: float = 30.0) -> np.ndarray:
    """Smooth random-walk kinematics (28 columns) to exercise file formats."""
    rng = np.random.default_rng(seed)
    dt = 1.0 / rate_hz
    out = np.empty((n_frames, KINEMATIC_DIMENSIONS), dtype=np.float64)
    col = 0
    for _hand in range(2):
        pos = np.cumsum(rng.normal(0.0, 0.05, size=(n_frames, 3)), axis=0) + rng.uniform(-5, 5, 3)
        quat = np.cumsum(rng.normal(0.0, 0.01, size=(n_frames, 4)), axis=0) + np.array([1.0, 0, 0, 0])
        quat /= np.linalg.norm(quat, axis=1, keepdims=True)
        aperture = 25.0 + 10.0 * np.sin(np.linspace(0, 3 * np.pi, n_frames) + rng.uniform(0, np.pi))
        lin_vel = np.vstack([np.zeros(3), np.diff(pos, axis=0) / dt])
        ang_vel = np.cumsum(rng.normal(0.0, 0.5, size=(n_frames, 3)), axis=0)
        out[:, col : col + 3] = pos
        out[:, col + 3 : col + 7] = quat
        out[:, col + 7] = aperture
        out[:, col + 8 : col + 11] = lin_vel
        out[:, col + 11 : col + 14] = ang_vel
        col += 14
    return out


@dataclass(frozen=True)
class CorpusSpec:
    n_sequences: int = 10
    base_seed: int = 0
    params: GeneratorParams = field(default_factory=GeneratorParams)


def write_corpus(out_dir: str | Path, spec: CorpusSpec) -> list[str]:
    """Write ground-truth sequences in the on-disk layout plus a manifest.

    Layout: ``<out_dir>/<sequence_id>/{annotation.txt, kinematics.csv}``.
    Returns the sequence ids written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = []
    manifest: dict = {"base_seed": spec.base_seed, "params": asdict(spec.params), "sequences": []}
    for i in range(spec.n_sequences):
        seed = spec.base_seed + i
        params = GeneratorParams(**{**asdict(spec.params), "seed": seed})
        seq = generate(params)
        seq_dir = out / seq.sequence_id
        seq_dir.mkdir(exist_ok=True)
        (seq_dir / "annotation.txt").write_text(emit_annotation(seq))
        kin = synthetic_kinematics(len(seq), seed=seed, rate_hz=params.rate_hz)
        (seq_dir / "kinematics.csv").write_text(emit_kinematics(kin))
        manifest["sequences"].append({"id": seq.sequence_id, "seed": seed, "frames": len(seq)})
        ids.append(seq.sequence_id)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return ids
