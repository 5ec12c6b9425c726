"""Data model: KPI matrices, expert labels, score series and rankings.

Missing observations are stored as ``NaN``. Every container is immutable
after construction (frozen dataclasses holding read-only arrays).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

MISSING = np.nan


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """A KPI matrix ``x`` of shape ``(F, T)`` with names and timestamps.

    Timestamps are integer minutes since the epoch. Missing cells are NaN.
    """

    name: str
    feature_names: tuple[str, ...]
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        names = tuple(str(n) for n in self.feature_names)
        ts = np.asarray(self.timestamps, dtype=np.int64).ravel()
        vals = np.asarray(self.values, dtype=np.float64)
        if len(names) < 1 or ts.size < 1:
            raise ValueError("a dataset needs at least one feature and one timeslot")
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate feature names: {dup}")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if vals.shape != (len(names), ts.size):
            raise ValueError(
                f"values shape {vals.shape} does not match (F={len(names)}, T={ts.size})"
            )
        if np.isinf(vals).any():
            raise ValueError("values must be finite or NaN (missing)")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "timestamps", _frozen(ts))
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def F(self) -> int:
        return len(self.feature_names)

    @property
    def T(self) -> int:
        return int(self.timestamps.size)

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def select(self, features: Sequence[str]) -> Dataset:
        """Sub-dataset restricted to ``features`` (in the given order)."""
        index = {n: i for i, n in enumerate(self.feature_names)}
        rows = [index[f] for f in features]
        return Dataset(self.name, tuple(features), self.timestamps, self.values[rows])

    def with_values(self, values: np.ndarray, timestamps: np.ndarray | None = None) -> Dataset:
        ts = self.timestamps if timestamps is None else timestamps
        return Dataset(self.name, self.feature_names, ts, values)


@dataclass(frozen=True)
class GroundTruth:
    """Expert label matrix ``g`` in {0,1}^(F x T)."""

    feature_names: tuple[str, ...]
    labels: np.ndarray

    def __post_init__(self) -> None:
        names = tuple(str(n) for n in self.feature_names)
        lab = np.asarray(self.labels)
        if lab.ndim != 2 or lab.shape[0] != len(names):
            raise ValueError(f"labels shape {lab.shape} does not match {len(names)} features")
        if not np.isin(lab, (0, 1)).all():
            raise ValueError("ground-truth entries must be 0 or 1")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "labels", _frozen(lab.astype(np.int8)))

    @property
    def T(self) -> int:
        return int(self.labels.shape[1])

    def select(self, features: Sequence[str]) -> GroundTruth:
        index = {n: i for i, n in enumerate(self.feature_names)}
        return GroundTruth(tuple(features), self.labels[[index[f] for f in features]])


def derive_timeslot_labels(gt: GroundTruth) -> np.ndarray:
    """``a_t = 1`` iff at least one feature is flagged at timeslot ``t``."""
    return (gt.labels.sum(axis=0) > 0).astype(np.int8)


def derive_feature_labels(gt: GroundTruth) -> set[str]:
    """Names of the features flagged at least once."""
    flagged = gt.labels.sum(axis=1) > 0
    return {name for name, f in zip(gt.feature_names, flagged) if f}


@dataclass(frozen=True)
class ScoreSeries:
    """Per-timeslot anomaly scores (larger is more anomalous)."""

    scores: np.ndarray
    detector_id: str = ""
    seed: int = 0
    binary: np.ndarray | None = None
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        s = np.asarray(self.scores, dtype=np.float64).ravel()
        if not np.isfinite(s).all():
            raise ValueError(f"{self.detector_id or 'detector'} produced non-finite scores")
        object.__setattr__(self, "scores", _frozen(s))
        if self.binary is not None:
            b = np.asarray(self.binary).ravel().astype(np.int8)
            if b.size != s.size:
                raise ValueError("binary vector length differs from scores")
            object.__setattr__(self, "binary", _frozen(b))

    def __len__(self) -> int:
        return int(self.scores.size)


@dataclass(frozen=True)
class FeatureRanking:
    """``(feature, score)`` pairs sorted by descending score, ties by name."""

    entries: tuple[tuple[str, float], ...]

    @property
    def features(self) -> list[str]:
        return [f for f, _ in self.entries]

    def position(self, feature: str) -> int:
        """1-based rank of ``feature``."""
        return self.features.index(feature) + 1

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def rank_features(scores: Mapping[str, float]) -> FeatureRanking:
    """Sort features by descending score; equal scores by name ascending."""
    for name, value in scores.items():
        if not math.isfinite(value):
            raise ValueError(f"non-finite score {value!r} for feature {name!r}")
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return FeatureRanking(tuple((str(k), float(v)) for k, v in ordered))


def labels_from_iterable(values: Iterable[int]) -> np.ndarray:
    a = np.asarray(list(values), dtype=np.int8)
    if not np.isin(a, (0, 1)).all():
        raise ValueError("timeslot labels must be 0 or 1")
    return a
