"""Isolation Forest scores.

Trees are grown by scikit-learn; path lengths and the normalizer are
computed here so the score follows ``2**(-E[h(x)] / c(psi))`` with exact
harmonic numbers.
"""

from __future__ import annotations

import numpy as np
from scipy.special import digamma
from sklearn.ensemble import IsolationForest

from ..core import Dataset, ScoreSeries
from ._common import as_rows, resolve_fraction


def average_path_length(n: np.ndarray | int) -> np.ndarray:
    """``c(n) = 2 H(n-1) - 2 (n-1)/n``; ``c(1) = 0``, ``c(2) = 1``."""
    n = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(n)
    big = n > 1
    m = n[big]
    # H(k) = digamma(k + 1) + euler_gamma, exact for integer k
    out[big] = 2.0 * (digamma(m) + np.euler_gamma) - 2.0 * (m - 1.0) / m
    return out


def if_score(
    dhat: Dataset,
    trees: int = 200,
    sample_frac: float = 0.75,
    feature_frac: float = 0.5,
    seed: int = 0,
) -> ScoreSeries:
    """Isolation score of every timeslot, in (0, 1).

    ``psi = round(sample_frac * T)`` rows and
    ``max(1, round(feature_frac * F))`` features are drawn per tree.
    """
    if trees < 1:
        raise ValueError("trees must be >= 1")
    X = as_rows(dhat)
    T, F = X.shape
    psi = resolve_fraction(sample_frac, T, 2, "sample_frac")
    if not 0.0 < feature_frac <= 1.0:
        raise ValueError(f"feature_frac must be in (0, 1], got {feature_frac}")
    n_feat = max(1, int(round(feature_frac * F)))
    forest = IsolationForest(
        n_estimators=int(trees), max_samples=psi, max_features=n_feat, random_state=int(seed)
    ).fit(X)

    total = np.zeros(T)
    for est, feats in zip(forest.estimators_, forest.estimators_features_):
        tree = est.tree_
        leaves = tree.apply(np.ascontiguousarray(X[:, feats], dtype=np.float32))
        edges = tree.compute_node_depths()[leaves] - 1
        total += edges + average_path_length(tree.n_node_samples[leaves])
    mean_path = total / len(forest.estimators_)
    scores = 2.0 ** (-mean_path / average_path_length(psi))
    return ScoreSeries(scores, detector_id="IF", seed=seed,
                       meta={"psi": psi, "features_per_tree": n_feat})
