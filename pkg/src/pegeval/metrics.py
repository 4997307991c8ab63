"""Balanced classification scores, application-dependent re-estimation, IoU.

Frame-by-frame scores are macro-averaged over classes to counter the heavy
class imbalance of the label tracks (idle dominates the verb level).
"Balanced accuracy" here is macro-averaged recall, the standard definition;
it is the quantity that drives team ranking, in its application-dependent
(AD) form.

AD re-estimation: predicted transitions of the same kind that fall within an
acceptable delay ``d`` of a ground-truth transition are not clinically
meaningful errors. Matched transition pairs have the frames between them
relabelled to the ground truth before scoring, so AD scores are computed on a
corrected copy of the prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .core import (
    GRANULARITIES,
    Granularity,
    LabelTrack,
    MetricConfig,
    PegevalError,
    WorkflowSequence,
    find_transitions,
    vocabulary_for,
)
from .ingest import N_MASK_CLASSES, SegmentationMask

SCORE_NAMES = ("accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class ClassCounts:
    """Per-class TP/FP/FN tallies for one (ground truth, prediction) pair."""

    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return self.tp + self.fn

    @property
    def n_frames(self) -> int:
        return int(self.support.sum())


@dataclass(frozen=True)
class ScoreSet:
    balanced_accuracy: float
    balanced_precision: float
    balanced_recall: float
    balanced_f1: float

    def as_dict(self) -> dict[str, float]:
        return {
            "accuracy": self.balanced_accuracy,
            "precision": self.balanced_precision,
            "recall": self.balanced_recall,
            "f1": self.balanced_f1,
        }


@dataclass(frozen=True)
class GranularityScores:
    frame_by_frame: ScoreSet
    application_dependent: ScoreSet


@dataclass(frozen=True)
class SequenceScores:
    """Eight ScoreSets for one sequence: FbF and AD per granularity."""

    sequence_id: str
    per_granularity: dict[Granularity, GranularityScores]

    def combined_ad_accuracy(self) -> float:
        return float(
            np.mean(
                [self.per_granularity[g].application_dependent.balanced_accuracy
                 for g in GRANULARITIES]
            )
        )

    def combined(self) -> GranularityScores:
        """Mean of the four granularities, score by score."""
        def mean_set(pick) -> ScoreSet:
            sets = [pick(self.per_granularity[g]) for g in GRANULARITIES]
            return ScoreSet(
                float(np.mean([s.balanced_accuracy for s in sets])),
                float(np.mean([s.balanced_precision for s in sets])),
                float(np.mean([s.balanced_recall for s in sets])),
                float(np.mean([s.balanced_f1 for s in sets])),
            )

        return GranularityScores(
            mean_set(lambda g: g.frame_by_frame),
            mean_set(lambda g: g.application_dependent),
        )


def confusion(gt: LabelTrack, pred: LabelTrack) -> ClassCounts:
    """Frame-wise per-class TP/FP/FN tallies."""
    if gt.granularity != pred.granularity:
        raise PegevalError("granularity mismatch")
    if len(gt) != len(pred):
        raise PegevalError(f"length mismatch: {len(gt)} vs {len(pred)}")
    gt.check_bounds()
    pred.check_bounds()
    n_classes = len(vocabulary_for(gt.granularity))
    tp, fp, fn = _accel.confusion_counts(gt.labels, pred.labels, n_classes)
    return ClassCounts(tp, fp, fn)


def balanced_scores(counts: ClassCounts) -> ScoreSet:
    """Macro-averaged accuracy/precision/recall/F1 from per-class tallies.

    Zero-support classes are excluded from recall (and accuracy); classes
    with no predictions are excluded from precision; classes absent from both
    ground truth and prediction are excluded from F1.
    """
    tp = counts.tp.astype(np.float64)
    fp = counts.fp.astype(np.float64)
    fn = counts.fn.astype(np.float64)
    support = tp + fn
    predicted = tp + fp
    if not (support > 0).any():
        raise PegevalError("no class has support; scores are undefined")
    recall = float(np.mean(tp[support > 0] / support[support > 0]))
    if (predicted > 0).any():
        precision = float(np.mean(tp[predicted > 0] / predicted[predicted > 0]))
    else:
        precision = 0.0
    f1_mask = (support + predicted) > 0
    f1 = float(np.mean(2 * tp[f1_mask] / (2 * tp[f1_mask] + fp[f1_mask] + fn[f1_mask])))
    return ScoreSet(
        balanced_accuracy=recall,
        balanced_precision=precision,
        balanced_recall=recall,
        balanced_f1=f1,
    )


def ad_correct(gt: LabelTrack, pred: LabelTrack, cfg: MetricConfig) -> LabelTrack:
    """Corrected copy of ``pred`` for application-dependent scoring.

    Each ground-truth transition is matched (chronologically, greedily) to
    the nearest unmatched predicted transition of the same kind within the
    acceptable delay; ties go to the earlier predicted transition. For every
    matched pair the predicted frames between the two transition indices get
    the ground-truth labels.
    """
    if len(gt) != len(pred):
        raise PegevalError(f"length mismatch: {len(gt)} vs {len(pred)}")
    d = cfg.acceptable_delay_ms
    gt_ts = find_transitions(gt)
    pred_ts = find_transitions(pred)
    corrected = pred.labels.copy()
    if not gt_ts or not pred_ts:
        return pred.with_labels(corrected)
    p_index = np.array([t.index for t in pred_ts], dtype=np.int64)
    p_time = np.array([t.time_ms for t in pred_ts], dtype=np.float64)
    p_from = np.array([t.from_label for t in pred_ts], dtype=np.int64)
    p_to = np.array([t.to_label for t in pred_ts], dtype=np.int64)
    used = np.zeros(len(pred_ts), dtype=bool)
    for g_tr in gt_ts:
        dt = np.abs(p_time - g_tr.time_ms)
        candidates = ~used & (dt <= d) & (p_to == g_tr.to_label)
        if cfg.match_source_label:
            candidates &= p_from == g_tr.from_label
        if not candidates.any():
            continue
        # nearest |dt| wins; argmin keeps the first (earliest) of equally
        # distant candidates, which is the tie rule
        cand_idx = np.nonzero(candidates)[0]
        j = cand_idx[np.argmin(dt[cand_idx])]
        used[j] = True
        lo = min(g_tr.index, int(p_index[j]))
        hi = max(g_tr.index, int(p_index[j]))
        corrected[lo:hi] = gt.labels[lo:hi]
    return pred.with_labels(corrected)


def evaluate_tracks(gt: LabelTrack, pred: LabelTrack, cfg: MetricConfig) -> GranularityScores:
    """Frame-by-frame and application-dependent ScoreSets for one granularity."""
    fbf = balanced_scores(confusion(gt, pred))
    ad = balanced_scores(confusion(gt, ad_correct(gt, pred, cfg)))
    return GranularityScores(frame_by_frame=fbf, application_dependent=ad)


def evaluate_sequence(
    gt: WorkflowSequence, pred: WorkflowSequence, cfg: MetricConfig | None = None
) -> SequenceScores:
    """Evaluate all four granularities of a predicted sequence."""
    cfg = cfg or MetricConfig()
    if len(gt) != len(pred):
        raise PegevalError(
            f"sequence {gt.sequence_id}: length mismatch {len(gt)} vs {len(pred)}"
        )
    per = {g: evaluate_tracks(gt.track(g), pred.track(g), cfg) for g in GRANULARITIES}
    return SequenceScores(gt.sequence_id or pred.sequence_id, per)


def iou_per_class(gt: SegmentationMask, pred: SegmentationMask) -> np.ndarray:
    """Per-class IoU for one mask pair; NaN where the union is empty."""
    if gt.class_map.shape != pred.class_map.shape:
        raise PegevalError(
            f"mask dimensions differ: {gt.class_map.shape} vs {pred.class_map.shape}"
        )
    inter, union = _accel.iou_counts(
        gt.class_map.astype(np.int64), pred.class_map.astype(np.int64), N_MASK_CLASSES
    )
    out = np.full(N_MASK_CLASSES, np.nan, dtype=np.float64)
    nz = union > 0
    out[nz] = inter[nz] / union[nz]
    return out


def mean_iou_frame(gt: SegmentationMask, pred: SegmentationMask) -> float:
    """Mean IoU over the classes present in either mask of the pair.

    Classes with an empty union are excluded from the mean so the score stays
    well-defined for frames that do not show every class.
    """
    per_class = iou_per_class(gt, pred)
    return float(np.nanmean(per_class))


@dataclass(frozen=True)
class IouAggregate:
    per_class: np.ndarray  # mean IoU per class over frames where the class occurs
    macro: float

    def as_dict(self) -> dict[str, float]:
        from .ingest import MASK_CLASS_NAMES

        out = {name: float(v) for name, v in zip(MASK_CLASS_NAMES, self.per_class)}
        out["macro"] = self.macro
        return out


def mean_iou_aggregate(
    pairs: list[tuple[SegmentationMask, SegmentationMask]],
) -> IouAggregate:
    """Per-class and macro mean IoU over a list of mask pairs."""
    if not pairs:
        raise PegevalError("empty mask pair list")
    stacked = np.vstack([iou_per_class(gt, pred) for gt, pred in pairs])
    present = ~np.isnan(stacked)
    per_class = np.full(stacked.shape[1], np.nan)
    seen = present.any(axis=0)
    per_class[seen] = np.nansum(np.where(present, stacked, 0.0), axis=0)[seen] / present.sum(axis=0)[seen]
    macro = float(per_class[seen].mean())
    return IouAggregate(per_class=per_class, macro=macro)
