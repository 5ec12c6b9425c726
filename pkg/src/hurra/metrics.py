"""Detection and ranking metrics, plus rank-based algorithm comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .core import FeatureRanking, ScoreSeries
from .errors import UndefinedMetricError

# Studentized range statistic divided by sqrt(2), infinite degrees of freedom,
# for k = 2..20 compared algorithms.
NEMENYI_Q = {
    0.05: (1.960, 2.344, 2.569, 2.728, 2.850, 2.948, 3.031, 3.102, 3.164, 3.219,
           3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544),
    0.10: (1.645, 2.052, 2.291, 2.460, 2.589, 2.693, 2.780, 2.855, 2.920, 2.978,
           3.030, 3.077, 3.120, 3.159, 3.196, 3.230, 3.261, 3.291, 3.319),
}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @classmethod
    def from_labels(cls, predicted: np.ndarray, actual: np.ndarray) -> ConfusionCounts:
        p = np.asarray(predicted).astype(bool)
        a = np.asarray(actual).astype(bool)
        return cls(int((p & a).sum()), int((p & ~a).sum()), int((~p & a).sum()), int((~p & ~a).sum()))


def precision_recall(c: ConfusionCounts) -> tuple[float, float]:
    """Raises ``UndefinedMetricError`` on a zero denominator."""
    if c.tp + c.fp == 0:
        raise UndefinedMetricError("precision undefined: no timeslot flagged (TP + FP = 0)")
    if c.tp + c.fn == 0:
        raise UndefinedMetricError("recall undefined: no positive label (TP + FN = 0)")
    return c.tp / (c.tp + c.fp), c.tp / (c.tp + c.fn)


def _score_array(scores: ScoreSeries | np.ndarray | Sequence[float]) -> np.ndarray:
    if isinstance(scores, ScoreSeries):
        return scores.scores
    return np.asarray(scores, dtype=np.float64).ravel()


def _threshold_blocks(scores, labels) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Cumulative TP/FP at each distinct score, thresholds descending."""
    s = _score_array(scores)
    y = np.asarray(labels).ravel().astype(bool)
    if s.size != y.size:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("labels must contain both anomalous and normal timeslots")
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    # last index of each block of tied scores
    block_end = np.r_[np.nonzero(np.diff(s_sorted))[0], s.size - 1]
    tp = np.cumsum(y_sorted)[block_end]
    fp = (block_end + 1) - tp
    return tp, fp, n_pos, n_neg


def pr_auc(scores, labels) -> float:
    """Area under the precision-recall curve as step-wise average precision.

    Thresholds sweep every distinct score; tied scores enter together.
    ``sum_i (R_i - R_{i-1}) * P_i`` with ``R_0 = 0``. A constant scorer gets
    exactly the positive prevalence.
    """
    tp, fp, n_pos, _ = _threshold_blocks(scores, labels)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def roc_auc(scores, labels) -> float:
    """Trapezoidal area under the (FPR, TPR) curve."""
    tp, fp, n_pos, n_neg = _threshold_blocks(scores, labels)
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def _check_gt(ranking: FeatureRanking, gt_features) -> set[str]:
    gt = set(gt_features)
    if not gt:
        raise UndefinedMetricError("no ground-truth anomalous feature")
    missing = gt.difference(ranking.features)
    if missing:
        raise ValueError(f"ground-truth features absent from ranking: {sorted(missing)}")
    return gt


def ndcg(ranking: FeatureRanking, gt_features) -> float:
    """Normalized discounted cumulative gain with binary relevance."""
    gt = _check_gt(ranking, gt_features)
    dcg = sum(1.0 / math.log2(i + 1) for i, f in enumerate(ranking.features, start=1) if f in gt)
    idcg = sum(1.0 / math.log2(i + 1) for i in range(1, len(gt) + 1))
    return dcg / idcg


def reading_effort(ranking: FeatureRanking, gt_features) -> tuple[int, int, int]:
    """``(m, t, e)``: position of the last flagged feature, number of flagged
    features, and non-flagged features read before reaching it."""
    gt = _check_gt(ranking, gt_features)
    m = max(ranking.position(f) for f in gt)
    t = len(gt)
    return m, t, m - t


def average_ranks(metric: np.ndarray | Sequence[Sequence[float]]) -> np.ndarray:
    """Mean rank per algorithm of an ``(algorithms, datasets)`` matrix.

    Within each dataset rank 1 is the highest metric; ties share the
    average rank.
    """
    M = np.asarray(metric, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("expected a non-empty (algorithms, datasets) matrix")
    if np.isnan(M).any():
        raise ValueError("metric matrix has missing entries")
    ranks = rankdata(-M, axis=0, method="average")
    return ranks.mean(axis=1)


def nemenyi_cd(k: int, n: int, alpha: float = 0.05) -> float:
    """Critical difference ``q_alpha * sqrt(k (k + 1) / (6 N))``."""
    if alpha not in NEMENYI_Q:
        raise ValueError(f"alpha must be one of {sorted(NEMENYI_Q)}")
    if not 2 <= k <= 20:
        raise ValueError(f"k={k} outside the tabulated range 2..20")
    if n < 1:
        raise ValueError("N must be >= 1")
    q = NEMENYI_Q[alpha][k - 2]
    return q * math.sqrt(k * (k + 1) / (6.0 * n))


def nemenyi_links(avg_ranks: Mapping[str, float], cd: float) -> dict:
    """Pairs not significantly different, and the maximal groups a
    critical-difference diagram would join with a bar."""
    names = sorted(avg_ranks, key=lambda a: (avg_ranks[a], a))
    pairs = [
        [a, b]
        for i, a in enumerate(names)
        for b in names[i + 1:]
        if abs(avg_ranks[a] - avg_ranks[b]) < cd
    ]
    groups: list[list[str]] = []
    for i in range(len(names)):
        j = i
        while j + 1 < len(names) and avg_ranks[names[j + 1]] - avg_ranks[names[i]] < cd:
            j += 1
        if j > i and not any(set(names[i:j + 1]) <= set(g) for g in groups):
            groups.append(names[i:j + 1])
    return {"pairs": pairs, "groups": groups}
