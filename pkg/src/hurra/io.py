"""CSV and JSON readers/writers for every on-disk format.

Dataset CSV::

    timestamp,kpi_a,kpi_b,...
    0,1.5,,...

One row per timeslot, empty cell means missing. Ground-truth CSV has the
same shape with 0/1 cells.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .core import Dataset, FeatureRanking, GroundTruth, ScoreSeries
from .errors import InputFormatError


def _read_table(path: str | Path) -> tuple[list[str], np.ndarray, np.ndarray]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "timestamp":
        raise InputFormatError(f"{path}: header must be 'timestamp,<kpi1>,...'")
    names = header[1:]
    body = [r for r in rows[1:] if r]
    if not body:
        raise InputFormatError(f"{path}: no data rows")
    ts = np.empty(len(body), dtype=np.int64)
    vals = np.full((len(names), len(body)), np.nan)
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise InputFormatError(
                f"{path}: row {i} has {len(row)} cells, expected {len(header)}"
            )
        try:
            ts[i - 2] = int(row[0])
        except ValueError:
            raise InputFormatError(f"{path}: row {i}, column 'timestamp': {row[0]!r} is not an integer") from None
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == "":
                continue
            try:
                vals[j, i - 2] = float(cell)
            except ValueError:
                raise InputFormatError(
                    f"{path}: row {i}, column {names[j]!r}: {cell!r} is not numeric"
                ) from None
            if not np.isfinite(vals[j, i - 2]):
                raise InputFormatError(f"{path}: row {i}, column {names[j]!r}: non-finite value")
    return names, ts, vals


def read_dataset(path: str | Path, name: str | None = None) -> Dataset:
    names, ts, vals = _read_table(path)
    try:
        return Dataset(name or Path(path).stem, tuple(names), ts, vals)
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def read_ground_truth(path: str | Path) -> GroundTruth:
    return read_ground_truth_ts(path)[1]


def read_ground_truth_ts(path: str | Path) -> tuple[np.ndarray, GroundTruth]:
    """Ground truth plus the timestamps of its rows."""
    names, ts, vals = _read_table(path)
    if np.isnan(vals).any():
        raise InputFormatError(f"{path}: ground truth cells must all be 0 or 1")
    try:
        return ts, GroundTruth(tuple(names), vals.astype(np.int8))
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def write_dataset(ds: Dataset, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", *ds.feature_names])
        for t in range(ds.T):
            w.writerow([int(ds.timestamps[t]), *(_fmt(v) for v in ds.values[:, t])])


def write_ground_truth(gt: GroundTruth, timestamps: np.ndarray, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", *gt.feature_names])
        for t in range(gt.T):
            w.writerow([int(timestamps[t]), *(int(v) for v in gt.labels[:, t])])


def write_scores(series: ScoreSeries, timestamps: np.ndarray, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        has_bin = series.binary is not None
        w.writerow(["timestamp", "score", "binary"] if has_bin else ["timestamp", "score"])
        for t, s in enumerate(series.scores):
            row = [int(timestamps[t]), repr(float(s))]
            if has_bin:
                row.append(int(series.binary[t]))
            w.writerow(row)


def read_scores(path: str | Path, detector_id: str = "") -> tuple[np.ndarray, ScoreSeries]:
    """Return ``(timestamps, series)`` from a score CSV."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0][:2] != ["timestamp", "score"]:
        raise InputFormatError(f"{path}: header must be 'timestamp,score[,binary]'")
    has_bin = len(rows[0]) > 2
    try:
        ts = np.array([int(r[0]) for r in rows[1:]], dtype=np.int64)
        sc = np.array([float(r[1]) for r in rows[1:]])
        b = np.array([int(r[2]) for r in rows[1:]]) if has_bin else None
    except (ValueError, IndexError) as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    try:
        return ts, ScoreSeries(sc, detector_id=detector_id, binary=b)
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def write_ranking(ranking: FeatureRanking, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "feature", "score"])
        for i, (f, s) in enumerate(ranking.entries, start=1):
            w.writerow([i, f, repr(float(s))])


def read_ranking(path: str | Path) -> FeatureRanking:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0] != ["rank", "feature", "score"]:
        raise InputFormatError(f"{path}: header must be 'rank,feature,score'")
    try:
        body = sorted(rows[1:], key=lambda r: int(r[0]))
        return FeatureRanking(tuple((r[1], float(r[2])) for r in body))
    except (ValueError, IndexError) as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def ranking_to_json(ranking: FeatureRanking) -> list[dict[str, Any]]:
    return [
        {"rank": i, "feature": f, "score": s}
        for i, (f, s) in enumerate(ranking.entries, start=1)
    ]


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(obj: Any, path: str | Path) -> None:
    """Write canonical JSON atomically (temp file + rename)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(dumps(obj))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: str | Path) -> Any:
    try:
        with Path(path).open(encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON ({exc})") from None
