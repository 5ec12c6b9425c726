"""Random Histogram Forest.

Each tree splits recursively up to ``max_height``. The split feature is drawn
with probability proportional to ``log(1 + kurtosis)`` computed on the node's
rows, so features carrying outliers are preferred; the split value is uniform
over the feature's range in the node. A timeslot's score sums, over trees,
the information content ``log(T / |leaf|)`` of the leaf it falls in.
"""

from __future__ import annotations

import numpy as np

from ..core import Dataset, ScoreSeries
from ._common import as_rows


def kurtosis_weights(XT: np.ndarray) -> np.ndarray:
    """``log(1 + kurtosis)`` per feature row of ``XT`` (shape ``(F, n)``).

    Kurtosis is the Pearson (non-excess) fourth standardized moment; constant
    features get weight zero.
    """
    centered = XT - XT.mean(axis=1, keepdims=True)
    sq = centered * centered
    m2 = sq.mean(axis=1)
    m4 = (sq * sq).mean(axis=1)
    w = np.zeros(XT.shape[0])
    ok = m2 > 1e-300
    w[ok] = np.log1p(m4[ok] / m2[ok] ** 2)
    return w


def _leaf_size(rows: np.ndarray, row_ids: np.ndarray | None) -> int:
    if row_ids is not None and rows.size > 1:
        return int(np.unique(row_ids[rows]).size)
    return int(rows.size)


def grow_tree(
    XT: np.ndarray,
    max_height: int,
    rng: np.random.Generator,
    row_ids: np.ndarray | None = None,
    on_split=None,
) -> list[tuple[np.ndarray, int]]:
    """Grow one tree on feature-major ``XT`` and return its leaves as ``(rows, size)`` pairs.

    When ``row_ids`` (an id per distinct row) is given, leaf sizes count
    distinct rows. ``on_split(feature)`` is called for every split.
    """
    leaves: list[tuple[np.ndarray, int]] = []
    stack = [(np.arange(XT.shape[1]), 0)]
    while stack:
        rows, depth = stack.pop()
        if depth >= max_height or rows.size <= 1:
            leaves.append((rows, _leaf_size(rows, row_ids)))
            continue
        sub = XT[:, rows]
        w = kurtosis_weights(sub)
        total = w.sum()
        if total <= 0.0:
            # every column constant: identical rows, nothing to split
            leaves.append((rows, _leaf_size(rows, row_ids)))
            continue
        feat = int(rng.choice(w.size, p=w / total))
        col = sub[feat]
        lo, hi = col.min(), col.max()
        cut = rng.uniform(lo, hi)
        left = col <= cut
        if on_split is not None:
            on_split(feat)
        stack.append((rows[~left], depth + 1))
        stack.append((rows[left], depth + 1))
    return leaves


def rhf_score(
    dhat: Dataset,
    trees: int = 100,
    max_height: int = 5,
    check_duplicates: bool = True,
    seed: int = 0,
) -> ScoreSeries:
    """Sum over trees of ``log(T / |leaf|)``; larger means more anomalous.

    With ``check_duplicates`` identical rows count once towards leaf sizes.
    """
    if trees < 1:
        raise ValueError("trees must be >= 1")
    if max_height < 1:
        raise ValueError("max_height must be >= 1")
    X = as_rows(dhat)
    T = X.shape[0]
    if T < 2:
        raise ValueError("RHF needs at least 2 timeslots to split")
    rng = np.random.default_rng(seed)
    XT = np.ascontiguousarray(X.T)
    row_ids = np.unique(X, axis=0, return_inverse=True)[1].ravel() if check_duplicates else None
    scores = np.zeros(T)
    for _ in range(int(trees)):
        for rows, size in grow_tree(XT, int(max_height), rng, row_ids):
            if rows.size:
                scores[rows] += np.log(T / size)
    return ScoreSeries(scores, detector_id="RHF", seed=seed)
