"""Evaluation toolkit for multi-granularity peg-transfer workflow recognition."""

from .core import (
    GRANULARITIES,
    Granularity,
    LabelTrack,
    MetricConfig,
    PegevalError,
    Transition,
    ValidationError,
    Vocabulary,
    WorkflowSequence,
    find_transitions,
    validate_sequence,
    vocabulary_for,
)
from .ingest import (
    IntervalAnnotation,
    ParseError,
    SegmentationMask,
    emit_annotation,
    emit_kinematics,
    emit_mask,
    parse_annotation_file,
    parse_kinematics,
    parse_mask,
    resample_intervals,
)
from .metrics import (
    ClassCounts,
    GranularityScores,
    ScoreSet,
    SequenceScores,
    ad_correct,
    balanced_scores,
    confusion,
    evaluate_sequence,
    evaluate_tracks,
    mean_iou_aggregate,
    mean_iou_frame,
)
from .ranking import (
    RANKING_METHODS,
    TeamTaskResults,
    bootstrap_stability,
    rank,
    rank_all_methods,
    stability,
    team_score,
)
from .stats import (
    Alternative,
    PValueMethod,
    TestResult,
    UndefinedTestError,
    compare_tasks,
    mann_whitney_u,
    wilcoxon_signed_rank,
)
from .causality import (
    CausalityVerdict,
    ModelUnderTest,
    execution_time_report,
    make_prefixes,
    run_causality_test,
    throughput_check,
)
from .synth import GeneratorParams, PerturbParams, generate, perturb, write_corpus

__version__ = "0.1.0"
