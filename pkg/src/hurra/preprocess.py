"""Data sanitization producing the normalized KPI matrix.

Steps, in order: grid alignment with padding, removal of constant or
mostly-missing features, sample-and-hold imputation, z-scoring.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset
from .errors import EmptyDataError

MAX_MISSING_FRACTION = 0.5
# already-standardized features are left untouched (keeps re-runs byte-stable)
_FIXED_POINT_TOL = 1e-12


@dataclass(frozen=True)
class PreprocessReport:
    dropped_constant: tuple[str, ...] = ()
    dropped_missing: tuple[tuple[str, float], ...] = ()
    imputed_cells: int = 0
    per_feature_stats: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "dropped_constant": list(self.dropped_constant),
            "dropped_missing": [{"feature": f, "missing_fraction": m} for f, m in self.dropped_missing],
            "imputed_cells": self.imputed_cells,
            "stats": {f: {"mean": m, "std": s} for f, (m, s) in self.per_feature_stats.items()},
        }


def grid_interval(timestamps: np.ndarray) -> int:
    """Sampling interval in whole minutes: the low median inter-arrival time."""
    if len(timestamps) < 2:
        raise ValueError("need at least 2 timestamps to infer the sampling interval")
    diffs = np.diff(np.asarray(timestamps, dtype=np.int64))
    return max(1, int(statistics.median_low(diffs.tolist())))


def align_and_pad(raw: Dataset) -> Dataset:
    """Place samples on a regular grid; slots without a sample become missing.

    Samples off the grid snap to the nearest slot; when two samples land on
    the same slot the later one wins.
    """
    ts = raw.timestamps
    step = grid_interval(ts)
    start = int(ts[0])
    slots = np.rint((ts - start) / step).astype(np.int64)
    n = int(slots[-1]) + 1
    grid = start + step * np.arange(n, dtype=np.int64)
    values = np.full((raw.F, n), np.nan)
    # fancy assignment keeps the last write per duplicated slot
    values[:, slots] = raw.values
    if n == raw.T and np.array_equal(grid, ts):
        return raw
    return raw.with_values(values, grid)


def missing_fractions(d: Dataset) -> np.ndarray:
    return np.isnan(d.values).mean(axis=1)


def drop_degenerate_features(d: Dataset) -> tuple[Dataset, PreprocessReport]:
    """Drop features with more than 50% missing cells, then constant ones."""
    frac = missing_fractions(d)
    dropped_missing: list[tuple[str, float]] = []
    dropped_constant: list[str] = []
    keep: list[str] = []
    for name, row, m in zip(d.feature_names, d.values, frac):
        if m > MAX_MISSING_FRACTION:
            dropped_missing.append((name, float(m)))
            continue
        observed = row[~np.isnan(row)]
        if observed.size == 0 or np.all(observed == observed[0]):
            dropped_constant.append(name)
            continue
        keep.append(name)
    if not keep:
        raise EmptyDataError(f"{d.name}: every feature was dropped during preprocessing")
    report = PreprocessReport(tuple(dropped_constant), tuple(dropped_missing))
    return d.select(keep), report


def _hold_fill(row: np.ndarray) -> np.ndarray:
    mask = np.isnan(row)
    if not mask.any():
        return row
    if mask.all():
        raise ValueError("cannot impute an all-missing feature")
    idx = np.where(~mask, np.arange(row.size), 0)
    np.maximum.accumulate(idx, out=idx)
    out = row[idx]
    first = np.argmax(~mask)
    out[:first] = row[first]
    return out


def impute_sample_and_hold(d: Dataset) -> Dataset:
    """Fill each gap with the last observed value (leading gaps: first value)."""
    if not np.isnan(d.values).any():
        return d
    for name, row in zip(d.feature_names, d.values):
        if np.isnan(row).all():
            raise ValueError(f"feature {name!r} has no observed value to hold")
    filled = np.vstack([_hold_fill(row) for row in d.values])
    return d.with_values(filled)


def standardize(d: Dataset) -> tuple[Dataset, PreprocessReport]:
    """Z-score each feature with its mean and population standard deviation."""
    if np.isnan(d.values).any():
        raise ValueError("standardize requires a dataset without missing values")
    mean = d.values.mean(axis=1)
    std = d.values.std(axis=1)
    zero = [n for n, s in zip(d.feature_names, std) if s == 0.0]
    if zero:
        raise ValueError(f"zero-variance features reached standardization: {zero}")
    fixed = (np.abs(mean) <= _FIXED_POINT_TOL) & (np.abs(std - 1.0) <= _FIXED_POINT_TOL)
    out = np.where(fixed[:, None], d.values, (d.values - mean[:, None]) / std[:, None])
    stats = {n: (float(m), float(s)) for n, m, s in zip(d.feature_names, mean, std)}
    return d.with_values(out), PreprocessReport(per_feature_stats=stats)


def preprocess(raw: Dataset) -> tuple[Dataset, PreprocessReport]:
    """Run the full sanitization pipeline and merge the step reports."""
    aligned = align_and_pad(raw)
    kept, drops = drop_degenerate_features(aligned)
    imputed_cells = int(np.isnan(kept.values).sum())
    filled = impute_sample_and_hold(kept)
    xhat, norm = standardize(filled)
    report = PreprocessReport(
        dropped_constant=drops.dropped_constant,
        dropped_missing=drops.dropped_missing,
        imputed_cells=imputed_cells,
        per_feature_stats=norm.per_feature_stats,
    )
    return xhat, report
