"""KPI troubleshooting pipeline.

Detect anomalous timeslots in a multivariate KPI matrix, rank the KPIs that
explain them, re-weight the ranking with counters learned from past cases,
and evaluate every stage against expert labels.
"""

from .core import (
    Dataset,
    FeatureRanking,
    GroundTruth,
    ScoreSeries,
    derive_feature_labels,
    derive_timeslot_labels,
    rank_features,
)
from .detectors import (
    BinarizationPolicy,
    DetectorSpec,
    HyperGrid,
    binarize,
    grid_search,
    ideal_ensemble,
    oracle_detector,
    run_detector,
)
from .errors import DegenerateConfigError, EmptyDataError, HurraError, InputFormatError, UndefinedMetricError
from .knowledge import EKBase, EKGains, case_counters, ek_apply, ek_merge, ek_update
from .metrics import (
    ConfusionCounts,
    average_ranks,
    ndcg,
    nemenyi_cd,
    pr_auc,
    precision_recall,
    reading_effort,
    roc_auc,
)
from .pipeline import PipelineConfig, bench, leave_one_out, run_case
from .preprocess import PreprocessReport, preprocess
from .scoring import FSKind, FSPolicy, feature_scores, fs_average, fs_rank
from .synthetic import AnomalyKind, BaseKind, SynthSpec, generate, generate_corpus

__version__ = "0.1.0"

__all__ = [
    "AnomalyKind", "BaseKind", "BinarizationPolicy", "ConfusionCounts", "Dataset",
    "DegenerateConfigError", "DetectorSpec", "EKBase", "EKGains", "EmptyDataError", "FSKind",
    "FSPolicy", "FeatureRanking", "GroundTruth", "HurraError", "HyperGrid", "InputFormatError",
    "PipelineConfig", "PreprocessReport", "ScoreSeries", "SynthSpec", "UndefinedMetricError",
    "average_ranks", "bench", "binarize", "case_counters", "derive_feature_labels",
    "derive_timeslot_labels", "ek_apply", "ek_merge", "ek_update", "feature_scores", "fs_average",
    "fs_rank", "generate", "generate_corpus", "grid_search", "ideal_ensemble", "leave_one_out",
    "ndcg", "nemenyi_cd", "oracle_detector", "pr_auc", "precision_recall", "preprocess",
    "rank_features", "reading_effort", "roc_auc", "run_case", "run_detector",
]
