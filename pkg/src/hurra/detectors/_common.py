from __future__ import annotations

import numpy as np

from ..core import Dataset


def as_rows(dhat: Dataset) -> np.ndarray:
    """Timeslot-major view ``(T, F)``; detectors see one row per timeslot."""
    X = np.ascontiguousarray(dhat.values.T, dtype=np.float64)
    if np.isnan(X).any():
        raise ValueError("detectors require a preprocessed dataset without missing values")
    return X


def resolve_fraction(frac: float, n: int, minimum: int, what: str) -> int:
    """Turn a proportional parameter into a count of samples."""
    if not 0.0 < frac <= 1.0:
        raise ValueError(f"{what} must be in (0, 1], got {frac}")
    count = int(round(frac * n))
    if count < minimum:
        raise ValueError(
            f"{what}={frac} resolves to {count} samples out of {n}; need at least {minimum}"
        )
    return count


def tumbling_windows(T: int, window: int) -> list[tuple[int, int]]:
    """Consecutive ``[start, stop)`` windows covering ``range(T)``."""
    return [(s, min(s + window, T)) for s in range(0, T, window)]
