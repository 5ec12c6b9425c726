"""xStream: sparse random projection plus half-space chains.

Timeslots are projected to ``k`` dimensions. Each of the ``c`` chains
picks one projected dimension per level; every time a dimension is picked
again its bin width halves, and a per-chain random shift keeps clusters
from being cut at the same place at every scale. Bin occupancy at each
level is counted over tumbling windows (row-stream mode, one window of
history). Bins are identified by 64-bit hashes of their coordinates and
counted in a count-min sketch.
"""

from __future__ import annotations

import numpy as np

from ..core import Dataset, ScoreSeries
from ._common import as_rows, resolve_fraction, tumbling_windows

CMS_ROWS = 2
CMS_LOG2_WIDTH = 22


def streamhash_projection(F: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``(F, k)`` sparse matrix with entries ``sqrt(3) * {+1, 0, -1}``
    drawn with probabilities ``1/6, 2/3, 1/6``."""
    u = rng.uniform(size=(F, k))
    R = np.zeros((F, k))
    R[u < 1 / 6] = 1.0
    R[u > 5 / 6] = -1.0
    return R * np.sqrt(3.0)


def chain_bin_keys(
    Y: np.ndarray,
    deltamax: np.ndarray,
    c: int,
    d: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Hashed bin identifiers, shape ``(T, c, d)``.

    The key at level ``l`` hashes the bin coordinates of every dimension
    picked at levels ``0..l`` of the chain.
    """
    T, k = Y.shape
    shift = rng.uniform(size=(c, k)) * deltamax[None, :]
    picks = rng.integers(0, k, size=(c, d))
    mult = rng.integers(1, 2**63, size=(c, k), dtype=np.uint64) | np.uint64(1)
    keys = np.zeros((T, c, d), dtype=np.uint64)
    for j in range(c):
        prebin: dict[int, np.ndarray] = {}
        bins: dict[int, np.ndarray] = {}
        key = np.zeros(T, dtype=np.uint64)
        for level in range(d):
            f = int(picks[j, level])
            if f not in prebin:
                prebin[f] = (Y[:, f] + shift[j, f]) / deltamax[f]
                old = 0
            else:
                prebin[f] = 2.0 * prebin[f] - shift[j, f] / deltamax[f]
                old = bins[f]
            new = np.floor(prebin[f]).astype(np.int64)
            # wrap-around arithmetic is the hash
            key = key + (new - old).astype(np.uint64) * mult[j, f]
            bins[f] = new
            keys[:, j, level] = key
    salt = rng.integers(0, 2**63, size=(1, c, d), dtype=np.uint64)
    return keys ^ salt


class CountMinSketch:
    """Fixed-size count-min sketch over 64-bit keys."""

    def __init__(self, rng: np.random.Generator, rows: int = CMS_ROWS, log2_width: int = CMS_LOG2_WIDTH):
        self.width = 2**log2_width
        self.shift = np.uint64(64 - log2_width)
        self.mult = rng.integers(1, 2**63, size=rows, dtype=np.uint64) | np.uint64(1)

    def _index(self, keys: np.ndarray) -> list[np.ndarray]:
        return [((keys * m) >> self.shift).astype(np.int64) for m in self.mult]

    def table(self, keys: np.ndarray) -> list[np.ndarray]:
        return [np.bincount(ix, minlength=self.width) for ix in self._index(keys)]

    def query(self, table: list[np.ndarray], keys: np.ndarray) -> np.ndarray:
        return np.minimum.reduce([t[ix] for t, ix in zip(table, self._index(keys))])


def xstream_score(
    dhat: Dataset,
    k_proj: int = 200,
    c_chains: int = 100,
    d_depth: int = 10,
    init_frac: float = 0.3,
    seed: int = 0,
) -> ScoreSeries:
    """xStream anomaly score (larger is more anomalous).

    The initial sample is ``round(init_frac * T)`` timeslots; it fixes the
    bin widths (half the projected range). Timeslots are processed in
    tumbling windows of that length, each scored against the counts of the
    window before; the first window is scored retrospectively against the
    window after it. Per chain the score is ``min_l [log2(1 + count_l) + l]``
    (depth-scaled smallest bin count, ``l`` starting at 1); chains are
    averaged and the result negated.
    """
    if min(k_proj, c_chains, d_depth) < 1:
        raise ValueError("k_proj, c_chains and d_depth must be >= 1")
    X = as_rows(dhat)
    T, F = X.shape
    window = resolve_fraction(init_frac, T, 2, "init_frac")
    rng = np.random.default_rng(seed)
    Y = X @ streamhash_projection(F, int(k_proj), rng)
    init = Y[:window]
    deltamax = (init.max(axis=0) - init.min(axis=0)) / 2.0
    deltamax[deltamax <= 0] = 1.0
    keys = chain_bin_keys(Y, deltamax, int(c_chains), int(d_depth), rng)

    sketch = CountMinSketch(rng)
    depth = np.arange(1, d_depth + 1)[None, None, :]
    bounds = tumbling_windows(T, window)
    tables = [sketch.table(keys[a:b].ravel()) for a, b in bounds]
    sizes = [b - a for a, b in bounds]
    scores = np.empty(T)
    for i, (start, stop) in enumerate(bounds):
        # the warm-up window is scored against the window after it
        ref = i - 1 if i else min(1, len(bounds) - 1)
        current = keys[start:stop]
        counts = sketch.query(tables[ref], current.ravel()).reshape(current.shape)
        counts = counts * (window / sizes[ref])
        per_chain = (np.log2(1.0 + counts) + depth).min(axis=2)
        scores[start:stop] = -per_chain.mean(axis=1)
    return ScoreSeries(scores, detector_id="XSTREAM", seed=seed,
                       meta={"window": window, "warmup_scored_retrospectively": True})
