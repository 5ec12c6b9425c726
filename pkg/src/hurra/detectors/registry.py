"""Detector specifications, the practical lower-bound defaults and the
upper-bound search grids, plus binarization and the reference detectors."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ..core import Dataset, GroundTruth, ScoreSeries, derive_timeslot_labels
from ..metrics import pr_auc
from .dbscan import dbscan_flags
from .hst import hst_score
from .iforest import if_score
from .loda import loda_score
from .rhf import rhf_score
from .xstream import xstream_score

logger = logging.getLogger(__name__)

ALGORITHMS = ("IF", "RHF", "HST", "LODA", "XSTREAM", "DBSCAN", "ORACLE")

_FUNCS: dict[str, Callable[..., ScoreSeries]] = {
    "IF": if_score,
    "RHF": rhf_score,
    "HST": hst_score,
    "LODA": loda_score,
    "XSTREAM": xstream_score,
    "DBSCAN": dbscan_flags,
}

# single setting of the practical lower bound
LB_DEFAULTS: dict[str, dict[str, Any]] = {
    "IF": {"trees": 200, "sample_frac": 0.75, "feature_frac": 0.5},
    "RHF": {"trees": 100, "max_height": 5, "check_duplicates": True},
    "HST": {"psi_frac": 0.3, "trees": 300, "h": 10},
    "LODA": {"window_frac": 0.3},
    "XSTREAM": {"k_proj": 200, "c_chains": 100, "d_depth": 10, "init_frac": 0.3},
    "DBSCAN": {"eps": 13.0, "min_samples": 2, "leaf_size": 30},
    "ORACLE": {},
}

# upper-bound search space
UB_GRIDS: dict[str, dict[str, list]] = {
    "IF": {
        "trees": [10, 50, 100, 200, 300],
        "sample_frac": [0.10, 0.25, 0.50, 0.75, 1.00],
        "feature_frac": [0.10, 0.25, 0.50, 0.75, 1.00],
    },
    "RHF": {"trees": [100], "max_height": [5, 6], "check_duplicates": [True, False]},
    "HST": {"psi_frac": [0.01, 0.03, 0.10, 0.30], "trees": [100, 200, 300], "h": [10]},
    "LODA": {"window_frac": [0.01, 0.03, 0.10, 0.30]},
    "XSTREAM": {
        "k_proj": [50, 100, 200, 300],
        "c_chains": [50, 100, 200, 300],
        "d_depth": [10],
        "init_frac": [0.01, 0.03, 0.10, 0.30],
    },
    "DBSCAN": {
        "eps": [float(e) for e in range(1, 21)],
        "min_samples": [2, 5, 10, 20, 40, 60, 80, 100, 120, 140, 160, 180, 200],
        "leaf_size": [30],
    },
}

_FRACTION_PARAMS = {"sample_frac", "feature_frac", "psi_frac", "window_frac", "init_frac"}


def _canonical_algo(name: str) -> str:
    algo = str(name).upper()
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")
    return algo


@dataclass(frozen=True)
class DetectorSpec:
    """Algorithm name, its parameters and a seed."""

    algorithm: str
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        algo = _canonical_algo(self.algorithm)
        allowed = set(LB_DEFAULTS[algo])
        unknown = set(self.params) - allowed
        if unknown:
            raise ValueError(f"{algo} does not accept {sorted(unknown)}; allowed: {sorted(allowed)}")
        for key, value in self.params.items():
            if key in _FRACTION_PARAMS and not 0.0 < float(value) <= 1.0:
                raise ValueError(f"{key} must be in (0, 1], got {value}")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")
        object.__setattr__(self, "algorithm", algo)
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def lower_bound(cls, algorithm: str, seed: int = 0, **overrides: Any) -> DetectorSpec:
        algo = _canonical_algo(algorithm)
        return cls(algo, {**LB_DEFAULTS[algo], **overrides}, seed)

    def resolved_params(self) -> dict[str, Any]:
        return {**LB_DEFAULTS[self.algorithm], **self.params}

    def to_json(self) -> dict:
        return {"algo": self.algorithm, "params": dict(self.params), "seed": int(self.seed)}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> DetectorSpec:
        return cls(obj["algo"], obj.get("params", {}), int(obj.get("seed", 0)))


def run_detector(dhat: Dataset, spec: DetectorSpec, gt: GroundTruth | None = None) -> ScoreSeries:
    """Score every timeslot of a preprocessed dataset.

    ``ORACLE`` needs ``gt`` and returns the timeslot labels as scores.
    """
    if spec.algorithm == "ORACLE":
        if gt is None:
            raise ValueError("the oracle detector needs ground truth")
        a = oracle_detector(gt).astype(np.float64)
        return ScoreSeries(a, detector_id="ORACLE", seed=spec.seed, binary=a.astype(np.int8))
    params = spec.resolved_params()
    return _FUNCS[spec.algorithm](dhat, seed=int(spec.seed), **params)


class BinarizationMethod(str, Enum):
    TOP_QUANTILE = "top_quantile"
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class BinarizationPolicy:
    """Either keep the top ``1 - q`` fraction of scores, or threshold at ``tau``."""

    method: BinarizationMethod = BinarizationMethod.TOP_QUANTILE
    q: float | None = 0.95
    tau: float | None = None

    def __post_init__(self) -> None:
        method = BinarizationMethod(self.method)
        object.__setattr__(self, "method", method)
        if method is BinarizationMethod.TOP_QUANTILE:
            if self.q is None or not 0.0 < self.q < 1.0:
                raise ValueError(f"quantile q must be in (0, 1), got {self.q}")
            object.__setattr__(self, "tau", None)
        else:
            if self.tau is None or not math.isfinite(self.tau):
                raise ValueError("threshold policy needs a finite tau")
            object.__setattr__(self, "q", None)

    @classmethod
    def quantile(cls, q: float) -> BinarizationPolicy:
        return cls(BinarizationMethod.TOP_QUANTILE, q=q)

    @classmethod
    def threshold(cls, tau: float) -> BinarizationPolicy:
        return cls(BinarizationMethod.THRESHOLD, q=None, tau=tau)


def binarize(scores: ScoreSeries | np.ndarray, policy: BinarizationPolicy = BinarizationPolicy()) -> np.ndarray:
    """Timeslot labels from scores.

    ``TOP_QUANTILE`` flags the ``ceil((1 - q) T)`` highest scores plus any
    score tied with the last one kept; ``THRESHOLD`` flags scores ``> tau``.
    """
    s = scores.scores if isinstance(scores, ScoreSeries) else np.asarray(scores, dtype=np.float64)
    if not np.isfinite(s).all():
        raise ValueError("cannot binarize non-finite scores")
    if policy.method is BinarizationMethod.THRESHOLD:
        return (s > policy.tau).astype(np.int8)
    # guard against (1 - 0.95) * 2000 = 100.00000000000009
    n_top = max(1, math.ceil(round((1.0 - policy.q) * s.size, 9)))
    cut = np.sort(s)[::-1][min(n_top, s.size) - 1]
    return (s >= cut).astype(np.int8)


def oracle_detector(gt: GroundTruth) -> np.ndarray:
    """The expert's own timeslot labels."""
    return derive_timeslot_labels(gt)


def ideal_ensemble(
    results: Sequence[tuple[DetectorSpec, ScoreSeries]], gt: GroundTruth
) -> tuple[DetectorSpec, ScoreSeries]:
    """Best result by Pr-Rec AUC against the ground truth; first wins ties."""
    if not results:
        raise ValueError("ideal ensemble needs at least one result")
    a = derive_timeslot_labels(gt)
    best, best_auc = None, -math.inf
    for spec, series in results:
        auc = pr_auc(series, a)
        if auc > best_auc:
            best, best_auc = (spec, series), auc
    return best


@dataclass(frozen=True)
class HyperGrid:
    algorithm: str
    params: Mapping[str, Sequence[Any]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", _canonical_algo(self.algorithm))
        if not self.params or any(len(v) == 0 for v in self.params.values()):
            raise ValueError("a grid needs at least one value per parameter")

    @classmethod
    def upper_bound(cls, algorithm: str) -> HyperGrid:
        algo = _canonical_algo(algorithm)
        return cls(algo, UB_GRIDS[algo])

    def __iter__(self):
        keys = list(self.params)
        for combo in itertools.product(*(self.params[k] for k in keys)):
            yield dict(zip(keys, combo))

    def __len__(self) -> int:
        return math.prod(len(v) for v in self.params.values())


def grid_search(
    dhat: Dataset, grid: HyperGrid, gt: GroundTruth, seed: int = 0
) -> tuple[DetectorSpec, ScoreSeries, float]:
    """Evaluate every combination and keep the best Pr-Rec AUC.

    Combinations that fail their preconditions are skipped and logged. On
    equal AUC the first combination in row-major order wins.
    """
    a = derive_timeslot_labels(gt)
    best: tuple[DetectorSpec, ScoreSeries, float] | None = None
    for params in grid:
        try:
            spec = DetectorSpec(grid.algorithm, params, seed)
            series = run_detector(dhat, spec, gt)
        except ValueError as exc:
            logger.info("skipping %s %s: %s", grid.algorithm, params, exc)
            continue
        auc = pr_auc(series, a)
        if best is None or auc > best[2]:
            best = (spec, series, auc)
    if best is None:
        raise ValueError(f"every {grid.algorithm} combination failed on {dhat.name}")
    return best
