"""Streaming Half-Space Trees.

Every tree is a complete binary tree of depth ``h`` built on a randomly
perturbed work space: each internal node halves its box on a random
dimension. The structure does not depend on the data, so each timeslot's
root-to-leaf path is computed once up front. Node masses are then counted
over tumbling windows: the previous window is the reference profile used
for scoring while the current window accumulates.
"""

from __future__ import annotations

import numpy as np

from ..core import Dataset, ScoreSeries
from ._common import as_rows, resolve_fraction, tumbling_windows

SIZE_LIMIT_FRACTION = 0.1


def _unit_scale(X: np.ndarray, warmup: np.ndarray) -> np.ndarray:
    lo = warmup.min(axis=0)
    span = warmup.max(axis=0) - lo
    span[span == 0] = 1.0
    return (X - lo) / span


def build_forest(F: int, trees: int, h: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Split dimensions and split values for ``trees`` complete trees.

    Returns two ``(trees, 2**h - 1)`` arrays in heap order (children of node
    ``i`` are ``2i+1`` and ``2i+2``).
    """
    s = rng.uniform(0.0, 1.0, size=(trees, F))
    half = 2.0 * np.maximum(s, 1.0 - s)
    lo = (s - half)[:, None, :]
    hi = (s + half)[:, None, :]
    dims = np.empty((trees, 2**h - 1), dtype=np.int64)
    cuts = np.empty((trees, 2**h - 1))
    tree_idx = np.arange(trees)[:, None]
    for level in range(h):
        width = 2**level
        first = width - 1
        q = rng.integers(0, F, size=(trees, width))
        node_lo = lo[tree_idx, np.arange(width)[None, :], q]
        node_hi = hi[tree_idx, np.arange(width)[None, :], q]
        mid = 0.5 * (node_lo + node_hi)
        dims[:, first:first + width] = q
        cuts[:, first:first + width] = mid
        # children boxes: left keeps [lo, mid], right keeps [mid, hi] on q
        lo = np.repeat(lo, 2, axis=1)
        hi = np.repeat(hi, 2, axis=1)
        left = np.arange(0, 2 * width, 2)
        hi[tree_idx, left[None, :], q] = mid
        lo[tree_idx, left[None, :] + 1, q] = mid
    return dims, cuts


def node_paths(U: np.ndarray, dims: np.ndarray, cuts: np.ndarray, h: int) -> np.ndarray:
    """Heap index of the node visited at each depth: ``(T, trees, h + 1)``."""
    T = U.shape[0]
    trees = dims.shape[0]
    paths = np.zeros((T, trees, h + 1), dtype=np.int64)
    node = np.zeros((T, trees), dtype=np.int64)
    tree_idx = np.arange(trees)[None, :]
    rows = np.arange(T)[:, None]
    for depth in range(h):
        d = dims[tree_idx, node]
        go_right = U[rows, d] > cuts[tree_idx, node]
        node = 2 * node + 1 + go_right
        paths[:, :, depth + 1] = node
    return paths


def hst_score(
    dhat: Dataset,
    psi_frac: float = 0.3,
    trees: int = 300,
    h: int = 10,
    seed: int = 0,
) -> ScoreSeries:
    """Half-Space Trees anomaly score (larger is more anomalous).

    The window is ``round(psi_frac * T)`` timeslots. Every window is
    scored against the masses of the window before it; the first one, which
    has no predecessor, is scored retrospectively against the window after. A path
    stops at the first node whose reference mass is below
    ``0.1 * window`` (or at depth ``h``); the tree contributes
    ``mass * 2**depth`` there. The sum over trees is negated.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    if trees < 1:
        raise ValueError("trees must be >= 1")
    X = as_rows(dhat)
    T, F = X.shape
    window = resolve_fraction(psi_frac, T, 2, "psi_frac")
    rng = np.random.default_rng(seed)
    U = _unit_scale(X, X[:window])
    dims, cuts = build_forest(F, int(trees), int(h), rng)
    paths = node_paths(U, dims, cuts, int(h))

    n_nodes = 2 ** (h + 1) - 1
    offsets = (np.arange(trees) * n_nodes)[None, :, None]
    flat = paths + offsets
    size_limit = SIZE_LIMIT_FRACTION * window
    depth_weight = 2.0 ** np.arange(h + 1)

    bounds = tumbling_windows(T, window)
    profiles = [np.bincount(flat[a:b].ravel(), minlength=trees * n_nodes) for a, b in bounds]
    scores = np.empty(T)
    for i, (start, stop) in enumerate(bounds):
        # the warm-up window is scored against the window after it
        ref = i - 1 if i else min(1, len(bounds) - 1)
        scale = window / (bounds[ref][1] - bounds[ref][0])
        mass = profiles[ref][flat[start:stop]] * scale
        below = mass < size_limit
        below[:, :, -1] = True
        stop_depth = below.argmax(axis=2)
        chosen = np.take_along_axis(mass, stop_depth[..., None], axis=2)[..., 0]
        scores[start:stop] = -(chosen * depth_weight[stop_depth]).sum(axis=1)
    return ScoreSeries(scores, detector_id="HST", seed=seed,
                       meta={"window": window, "warmup_scored_retrospectively": True})
