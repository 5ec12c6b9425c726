"""Feature scoring: which KPIs changed most during the anomalous timeslots.

All policies map ``(xhat, a)`` to one score per retained feature; larger
means more worth reading first.

The normal-distribution policies use the distribution function ``Phi``:
``s_jt = 2 |1/2 - Phi((x_jt - mu_j) / sigma_j)|``, which lies in ``[0, 1]``
as the log transform requires. (A density-shaped expression sometimes
quoted for this score is not bounded and is not used.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr

from .core import Dataset
from .errors import DegenerateConfigError

LOG_CAP = 1.0 - 1e-12


class FSKind(str, Enum):
    FSA = "fsa"
    FSR = "fsr"
    RANDOM = "random"
    ALPHABETICAL = "alpha"
    ND = "nd"
    NDLOG = "ndlog"


@dataclass(frozen=True)
class FSPolicy:
    kind: FSKind = FSKind.FSA
    seed: int | None = None

    def __post_init__(self) -> None:
        kind = FSKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if (kind is FSKind.RANDOM) != (self.seed is not None):
            raise ValueError("a seed is required for the random policy and only for it")


def _regimes(dhat: Dataset, a) -> np.ndarray:
    a = np.asarray(a).ravel().astype(bool)
    if a.size != dhat.T:
        raise ValueError(f"{a.size} labels for {dhat.T} timeslots")
    n_anom = int(a.sum())
    if n_anom == 0 or n_anom == a.size:
        raise DegenerateConfigError(
            f"{n_anom} of {a.size} timeslots flagged anomalous; feature scores need both "
            "regimes (adjust the binarization quantile or threshold)"
        )
    return a


def regime_means(dhat: Dataset, a) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean over anomalous and over normal timeslots.

    Sums are exactly rounded so that equal means compare equal whatever the
    order of the timeslots (the rank policy depends on exact ties).
    """
    a = _regimes(dhat, a)

    def mean(block: np.ndarray) -> np.ndarray:
        return np.array([math.fsum(row) for row in block.tolist()]) / block.shape[1]

    return mean(dhat.values[:, a]), mean(dhat.values[:, ~a])


def fs_average(dhat: Dataset, a) -> dict[str, float]:
    """Absolute difference between the anomalous-regime and normal-regime means."""
    anom, norm = regime_means(dhat, a)
    return {f: float(v) for f, v in zip(dhat.feature_names, np.abs(anom - norm))}


def _rank_desc(values: np.ndarray, names: tuple[str, ...]) -> np.ndarray:
    order = sorted(range(len(names)), key=lambda j: (-values[j], names[j]))
    ranks = np.empty(len(names), dtype=np.int64)
    ranks[order] = np.arange(1, len(names) + 1)
    return ranks


def fs_rank(dhat: Dataset, a) -> dict[str, float]:
    """Absolute change of a feature's position when features are ordered by
    regime mean (largest first, ties by name) in each regime."""
    anom, norm = regime_means(dhat, a)
    r_plus = _rank_desc(anom, dhat.feature_names)
    r_minus = _rank_desc(norm, dhat.feature_names)
    return {f: float(abs(p - m)) for f, p, m in zip(dhat.feature_names, r_plus, r_minus)}


def fs_random(features, seed: int) -> dict[str, float]:
    """A seeded random permutation of ``1..F`` as scores."""
    names = sorted(features)
    if not names:
        raise ValueError("need at least one feature")
    perm = np.random.default_rng(seed).permutation(len(names)) + 1
    return {f: float(p) for f, p in zip(names, perm)}


def fs_alphabetical(features) -> dict[str, float]:
    """``F`` for the lexicographically first name down to ``1`` for the last."""
    names = sorted(features)
    if not names:
        raise ValueError("need at least one feature")
    return {f: float(len(names) - i) for i, f in enumerate(names)}


def normal_tail_scores(dhat: Dataset, a) -> np.ndarray:
    """``s_jt`` for every feature and anomalous timeslot, shape ``(F, #anomalous)``.

    Mean and population standard deviation come from the normal timeslots.
    A feature with zero spread there scores 0 where it equals the mean and
    1 elsewhere.
    """
    a = _regimes(dhat, a)
    if int((~a).sum()) < 2:
        raise DegenerateConfigError("need at least 2 normal timeslots to fit a distribution")
    normal = dhat.values[:, ~a]
    mu = normal.mean(axis=1, keepdims=True)
    sigma = normal.std(axis=1, keepdims=True)
    x = dhat.values[:, a]
    flat = (sigma == 0)[:, 0]
    s = np.empty_like(x)
    ok = ~flat
    if ok.any():
        s[ok] = 2.0 * np.abs(0.5 - ndtr((x[ok] - mu[ok]) / sigma[ok]))
    if flat.any():
        s[flat] = (x[flat] != mu[flat]).astype(np.float64)
    return s


def fs_normal(dhat: Dataset, a) -> dict[str, float]:
    """Mean two-sided normal tail score over the anomalous timeslots."""
    s = normal_tail_scores(dhat, a)
    return {f: float(v) for f, v in zip(dhat.feature_names, s.mean(axis=1))}


def fs_lognormal(dhat: Dataset, a) -> dict[str, float]:
    """Mean of ``-log(1 - s_jt)`` over anomalous timeslots (``s_jt`` capped
    at ``1 - 1e-12``), stretching the extreme tail."""
    s = np.minimum(normal_tail_scores(dhat, a), LOG_CAP)
    return {f: float(v) for f, v in zip(dhat.feature_names, (-np.log1p(-s)).mean(axis=1))}


def feature_scores(dhat: Dataset, a, policy: FSPolicy = FSPolicy()) -> dict[str, float]:
    """Dispatch on ``policy.kind``."""
    kind = policy.kind
    if kind is FSKind.FSA:
        return fs_average(dhat, a)
    if kind is FSKind.FSR:
        return fs_rank(dhat, a)
    if kind is FSKind.RANDOM:
        return fs_random(dhat.feature_names, policy.seed)
    if kind is FSKind.ALPHABETICAL:
        return fs_alphabetical(dhat.feature_names)
    if kind is FSKind.ND:
        return fs_normal(dhat, a)
    return fs_lognormal(dhat, a)
