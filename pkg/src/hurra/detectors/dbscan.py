"""DBSCAN noise flags: points that cannot reach any core point score 1."""

from __future__ import annotations

import numpy as np
from sklearn.cluster import DBSCAN

from ..core import Dataset, ScoreSeries
from ._common import as_rows


def dbscan_flags(
    dhat: Dataset,
    eps: float = 13.0,
    min_samples: int = 2,
    leaf_size: int = 30,
    seed: int = 0,
) -> ScoreSeries:
    """Binary scores from DBSCAN over the ``F``-dimensional timeslot vectors.

    ``min_samples`` is an absolute neighbor count that includes the point
    itself.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if int(min_samples) < 1:
        raise ValueError("min_samples must be >= 1")
    X = as_rows(dhat)
    labels = DBSCAN(
        eps=float(eps), min_samples=int(min_samples), leaf_size=int(leaf_size)
    ).fit_predict(X)
    flags = (labels == -1).astype(np.float64)
    return ScoreSeries(flags, detector_id="DBSCAN", seed=seed, binary=flags.astype(np.int8))
