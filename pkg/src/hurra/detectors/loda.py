"""LODA over a sliding window.

Timeslots are projected on ``k`` sparse random directions. For each
projection an equi-width histogram (``ceil(sqrt(window))`` bins spanning
the warm-up range) is maintained over the last ``window`` timeslots. The
score is the mean negative log-probability of the timeslot's bins.
"""

from __future__ import annotations

import math

import numpy as np

from ..core import Dataset, ScoreSeries
from ._common import as_rows, resolve_fraction

PROB_FLOOR = 1e-12
N_PROJECTIONS = 100


def sparse_projections(F: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``(k, F)`` matrix with ``round(sqrt(F))`` standard-normal entries per row."""
    nnz = max(1, int(round(math.sqrt(F))))
    W = np.zeros((k, F))
    for i in range(k):
        cols = rng.choice(F, size=nnz, replace=False)
        W[i, cols] = rng.standard_normal(nnz)
    return W


def bin_index(z: np.ndarray, lo: float, hi: float, n_bins: int) -> np.ndarray:
    """Equi-width bin of each value; ``-1`` outside ``[lo, hi]``."""
    span = hi - lo
    idx = np.floor((z - lo) / span * n_bins).astype(np.int64)
    idx[z == hi] = n_bins - 1
    idx[(z < lo) | (z > hi)] = -1
    return idx


def loda_score(
    dhat: Dataset,
    window_frac: float = 0.3,
    seed: int = 0,
    n_projections: int = N_PROJECTIONS,
) -> ScoreSeries:
    """Streaming LODA score (larger is more anomalous).

    The first ``window`` timeslots fix the bin ranges; afterwards timeslot
    ``t`` is scored against the histogram of timeslots ``[t - window, t)``.
    The warm-up timeslots are scored retrospectively against the histogram
    of the window that follows them (or their own when there is none). Empty bins and values outside the
    warm-up range get probability ``1e-12``, so the largest attainable
    score is ``log(1e12)``.
    """
    X = as_rows(dhat)
    T, F = X.shape
    window = resolve_fraction(window_frac, T, 4, "window_frac")
    rng = np.random.default_rng(seed)
    W = sparse_projections(F, int(n_projections), rng)
    Z = X @ W.T
    n_bins = math.ceil(math.sqrt(window))

    t = np.arange(T)
    start = np.maximum(t - window, 0)
    stop = t.copy()
    if T > window:
        start[:window], stop[:window] = window, min(2 * window, T)
    else:
        stop[:] = T
    log_p = np.zeros(T)
    for i in range(W.shape[0]):
        z = Z[:, i]
        lo, hi = z[:window].min(), z[:window].max()
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        b = bin_index(z, lo, hi, n_bins)
        onehot = np.zeros((T + 1, n_bins + 1), dtype=np.int64)
        onehot[np.arange(1, T + 1), b] = 1  # column -1 collects out-of-range
        cum = np.cumsum(onehot, axis=0)
        counts = cum[stop, b] - cum[start, b]
        counts[b < 0] = 0
        p = np.maximum(counts / (stop - start), PROB_FLOOR)
        log_p += np.log(p)
    scores = -log_p / W.shape[0]
    return ScoreSeries(scores, detector_id="LODA", seed=seed,
                       meta={"window": window, "bins": n_bins, "dense_projections": F == 1,
                             "warmup_scored_retrospectively": True})
