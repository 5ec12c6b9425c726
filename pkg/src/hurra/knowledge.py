"""Expert-knowledge base: per-KPI counters distilled from solved cases.

For each KPI name the base tracks ``n`` (cases where it was observed),
``n_plus`` (cases where the expert flagged it) and ``n_minus`` (cases where
it was not flagged although it outscored some flagged KPI). Rates
``K+ = n_plus / n`` and ``K- = n_minus / n`` re-weight feature scores:

    s_hat = s * (1 + gamma_plus * K+ - gamma_minus * K-)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .core import GroundTruth, derive_feature_labels


@dataclass(frozen=True)
class Counters:
    n: int = 0
    n_plus: int = 0
    n_minus: int = 0

    def __post_init__(self) -> None:
        if min(self.n, self.n_plus, self.n_minus) < 0:
            raise ValueError("counters must be non-negative")
        if self.n_plus > self.n or self.n_minus > self.n:
            raise ValueError(f"n_plus and n_minus cannot exceed n: {self}")

    def __add__(self, other: Counters) -> Counters:
        return Counters(self.n + other.n, self.n_plus + other.n_plus, self.n_minus + other.n_minus)

    @property
    def k_plus(self) -> float:
        return self.n_plus / self.n if self.n else 0.0

    @property
    def k_minus(self) -> float:
        return self.n_minus / self.n if self.n else 0.0


@dataclass(frozen=True)
class EKBase:
    """Immutable mapping from KPI name to its counters."""

    features: Mapping[str, Counters] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", MappingProxyType(dict(sorted(self.features.items()))))

    def get(self, name: str) -> Counters:
        return self.features.get(name, Counters())

    def k_plus(self, name: str) -> float:
        return self.get(name).k_plus

    def k_minus(self, name: str) -> float:
        return self.get(name).k_minus

    def __len__(self) -> int:
        return len(self.features)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EKBase) and dict(self.features) == dict(other.features)

    def __hash__(self) -> int:
        return hash(tuple(self.features.items()))

    def to_json(self) -> dict:
        return {
            "features": {
                name: {"n": c.n, "n_plus": c.n_plus, "n_minus": c.n_minus}
                for name, c in self.features.items()
            }
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> EKBase:
        try:
            feats = obj["features"]
            return cls({str(k): Counters(int(v["n"]), int(v["n_plus"]), int(v["n_minus"]))
                        for k, v in feats.items()})
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed knowledge base: {exc!r}") from None


@dataclass(frozen=True)
class EKGains:
    gamma_plus: float = 2.0
    gamma_minus: float = 0.0

    def __post_init__(self) -> None:
        for name in ("gamma_plus", "gamma_minus"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def ek_apply(scores: Mapping[str, float], base: EKBase, gains: EKGains = EKGains()) -> dict[str, float]:
    """Re-weight feature scores with the base's rates.

    A negative multiplier is clamped so the score becomes 0 rather than
    changing sign. KPIs unknown to the base keep their score.
    """
    out = {}
    for name, s in scores.items():
        if not math.isfinite(s):
            raise ValueError(f"non-finite score for {name!r}")
        c = base.get(name)
        mult = 1.0 + gains.gamma_plus * c.k_plus - gains.gamma_minus * c.k_minus
        out[name] = s * mult if mult >= 0.0 else 0.0
    return out


def case_counters(scores: Mapping[str, float], gt: GroundTruth) -> EKBase:
    """Counters contributed by one solved case.

    ``scores`` are the case's raw feature scores (before any re-weighting)
    and their keys are the observed KPIs. Every observed KPI gets ``n + 1``;
    flagged ones ``n_plus + 1``; unflagged ones scoring above the smallest
    score among flagged observed KPIs get ``n_minus + 1``.
    """
    flagged = derive_feature_labels(gt) & set(scores)
    floor = min((scores[k] for k in flagged), default=None)
    out = {}
    for name, s in scores.items():
        plus = name in flagged
        minus = (not plus) and floor is not None and s > floor
        out[name] = Counters(1, int(plus), int(minus))
    return EKBase(out)


def ek_merge(bases: Iterable[EKBase]) -> EKBase:
    """Component-wise counter sum, i.e. the n-weighted average of the rates."""
    bases = list(bases)
    if not bases:
        raise ValueError("nothing to merge")
    total: dict[str, Counters] = {}
    for b in bases:
        for name, c in b.features.items():
            total[name] = total.get(name, Counters()) + c
    return EKBase(total)


def ek_update(base: EKBase, scores: Mapping[str, float], gt: GroundTruth) -> EKBase:
    """New base with one more solved case folded in."""
    return ek_merge([base, case_counters(scores, gt)])
