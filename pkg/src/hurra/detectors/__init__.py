"""Anomaly detectors over preprocessed KPI matrices.

Every detector maps a dataset of shape ``(F, T)`` to one score per
timeslot, larger meaning more anomalous, and is a pure function of the
data, its parameters and the seed.
"""

from .dbscan import dbscan_flags
from .hst import hst_score
from .iforest import if_score
from .loda import loda_score
from .registry import (
    ALGORITHMS,
    LB_DEFAULTS,
    UB_GRIDS,
    BinarizationMethod,
    BinarizationPolicy,
    DetectorSpec,
    HyperGrid,
    binarize,
    grid_search,
    ideal_ensemble,
    oracle_detector,
    run_detector,
)
from .rhf import rhf_score
from .xstream import xstream_score

__all__ = [
    "ALGORITHMS", "LB_DEFAULTS", "UB_GRIDS", "BinarizationMethod", "BinarizationPolicy",
    "DetectorSpec", "HyperGrid", "binarize", "dbscan_flags", "grid_search", "hst_score",
    "ideal_ensemble", "if_score", "loda_score", "oracle_detector", "rhf_score",
    "run_detector", "xstream_score",
]
