"""Seeded generator of labeled multivariate KPI datasets.

Each dataset carries one contiguous anomaly window during which a few
culprit KPIs are perturbed; the ground truth marks exactly the perturbed
cells. Corpora can share a pool of KPI names so that one "chronic" KPI is
a culprit in a controllable share of datasets.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .core import Dataset, GroundTruth

AR_COEF = 0.8
DAY_MINUTES = 1440
SPIKE_SIGMA = 8.0
SPIKE_SHARE = 0.3
SHIFT_SIGMA = 5.0
BURST_FACTOR = 4.0


class AnomalyKind(str, Enum):
    SPIKE = "spike"
    LEVEL_SHIFT = "level_shift"
    VARIANCE_BURST = "variance_burst"


class BaseKind(str, Enum):
    AR1 = "ar1"
    SEASONAL = "seasonal"
    MIXED = "mixed"


@dataclass(frozen=True)
class SynthSpec:
    F: int = 20
    T: int = 2000
    n_culprits: int = 2
    prevalence: float = 0.05
    anomaly_kind: AnomalyKind = AnomalyKind.LEVEL_SHIFT
    base_kind: BaseKind = BaseKind.AR1
    missing_frac: float = 0.0
    seed: int = 0
    name_pool: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "anomaly_kind", AnomalyKind(self.anomaly_kind))
        object.__setattr__(self, "base_kind", BaseKind(self.base_kind))
        if self.name_pool is not None:
            object.__setattr__(self, "name_pool", tuple(self.name_pool))
        if self.F < 1 or self.T < 2:
            raise ValueError("need F >= 1 and T >= 2")
        if not 1 <= self.n_culprits <= self.F:
            raise ValueError(f"n_culprits must be in [1, F={self.F}]")
        if not 0.0 < self.prevalence < 0.5:
            raise ValueError("prevalence must be in (0, 0.5)")
        if not 0.0 <= self.missing_frac < 0.4:
            raise ValueError("missing_frac must be in [0, 0.4)")
        if self.name_pool is not None and len(set(self.name_pool)) < self.F:
            raise ValueError(f"name_pool has {len(set(self.name_pool))} names, need F={self.F}")

    def window_length(self) -> int:
        return int(round(self.prevalence * self.T))

    def to_json(self) -> dict:
        d = asdict(self)
        d["anomaly_kind"] = self.anomaly_kind.value
        d["base_kind"] = self.base_kind.value
        d["name_pool"] = list(self.name_pool) if self.name_pool is not None else None
        return d

    @classmethod
    def from_json(cls, obj: dict) -> SynthSpec:
        obj = dict(obj)
        if obj.get("name_pool") is not None:
            obj["name_pool"] = tuple(obj["name_pool"])
        return cls(**obj)


def _ar1(rng: np.random.Generator, T: int) -> np.ndarray:
    eps = rng.standard_normal(T)
    out = np.empty(T)
    # start from the stationary distribution
    out[0] = eps[0] / np.sqrt(1.0 - AR_COEF**2)
    for t in range(1, T):
        out[t] = AR_COEF * out[t - 1] + eps[t]
    return out


def _base_signal(rng: np.random.Generator, T: int, seasonal: bool) -> np.ndarray:
    x = _ar1(rng, T)
    if seasonal:
        amp = rng.uniform(1.0, 3.0)
        phase = rng.uniform(0.0, 2 * np.pi)
        x = x + amp * np.sin(2 * np.pi * np.arange(T) / DAY_MINUTES + phase)
    return x + rng.standard_normal(T)


def generate(
    spec: SynthSpec,
    *,
    include: Sequence[str] = (),
    culprits: Sequence[str] | None = None,
    name: str | None = None,
) -> tuple[Dataset, GroundTruth]:
    """One labeled dataset; a pure function of its arguments.

    ``include`` forces names into the feature set (drawn from ``name_pool``
    otherwise); ``culprits`` fixes some culprit names, the rest are drawn.
    """
    rng = np.random.default_rng(spec.seed)
    F, T = spec.F, spec.T
    L = spec.window_length()
    if L < 1:
        raise ValueError(f"prevalence {spec.prevalence} x T {T} gives an empty anomaly window")

    if spec.name_pool is None:
        names = [f"kpi_{j:03d}" for j in range(F)]
    else:
        pool = [n for n in dict.fromkeys(spec.name_pool) if n not in include]
        picked = rng.choice(len(pool), size=F - len(include), replace=False)
        names = list(include) + [pool[i] for i in sorted(picked)]
    names = sorted(names)

    fixed = list(culprits or [])
    if len(fixed) > spec.n_culprits or not set(fixed) <= set(names):
        raise ValueError("forced culprits must be features and at most n_culprits")
    others = [n for n in names if n not in fixed]
    drawn = rng.choice(len(others), size=spec.n_culprits - len(fixed), replace=False)
    culprit_set = set(fixed) | {others[i] for i in drawn}

    values = np.empty((F, T))
    noise_scale = np.empty(F)
    for j in range(F):
        if spec.base_kind is BaseKind.AR1:
            seasonal = False
        elif spec.base_kind is BaseKind.SEASONAL:
            seasonal = True
        else:
            seasonal = bool(rng.integers(2))
        level = rng.uniform(0.0, 100.0)
        scale = rng.uniform(0.5, 5.0)
        values[j] = level + scale * _base_signal(rng, T, seasonal)
        noise_scale[j] = scale
    missing = rng.random((F, T)) < spec.missing_frac

    start = int(rng.integers(0, T - L + 1))
    window = np.arange(start, start + L)
    if spec.anomaly_kind is AnomalyKind.SPIKE:
        n_spikes = max(1, int(round(SPIKE_SHARE * L)))
        hit = np.sort(rng.choice(window, size=n_spikes, replace=False))
    else:
        hit = window
    labels = np.zeros((F, T), dtype=np.int8)
    for j, n in enumerate(names):
        if n not in culprit_set:
            continue
        sigma = values[j].std()
        if spec.anomaly_kind is AnomalyKind.SPIKE:
            values[j, hit] += SPIKE_SIGMA * sigma
        elif spec.anomaly_kind is AnomalyKind.LEVEL_SHIFT:
            values[j, hit] += SHIFT_SIGMA * sigma
        else:
            extra = noise_scale[j] * np.sqrt(BURST_FACTOR**2 - 1.0)
            values[j, hit] += extra * rng.standard_normal(hit.size)
        labels[j, hit] = 1
    values[missing] = np.nan

    ds = Dataset(name or f"synth-{spec.seed}", tuple(names), np.arange(T, dtype=np.int64), values)
    return ds, GroundTruth(tuple(names), labels)


def chronic_feature(spec: SynthSpec) -> str:
    """The designated recurring culprit of a corpus: the pool's first name."""
    if spec.name_pool is None:
        raise ValueError("a corpus needs a shared name_pool")
    return spec.name_pool[0]


def generate_corpus(
    n: int, spec: SynthSpec, p_recurring_culprit: float, seed: int
) -> list[tuple[Dataset, GroundTruth]]:
    """``n`` independent datasets sharing ``spec.name_pool``.

    Member ``i`` uses seed ``seed + i``. The chronic KPI is present in every
    member and is a culprit with probability ``p_recurring_culprit``.
    """
    if n < 2:
        raise ValueError("a corpus needs at least 2 datasets")
    if not 0.0 <= p_recurring_culprit <= 1.0:
        raise ValueError("p_recurring_culprit must be in [0, 1]")
    chronic = chronic_feature(spec)
    corpus = []
    for i in range(n):
        member = SynthSpec(**{**spec.__dict__, "seed": seed + i})
        recurring = np.random.default_rng([seed + i, 1]).random() < p_recurring_culprit
        if recurring:
            corpus.append(generate(member, include=[chronic], culprits=[chronic], name=f"case-{i:03d}"))
        else:
            # keep the chronic KPI observed but never a culprit
            ds, gt = _generate_excluding(member, chronic, name=f"case-{i:03d}")
            corpus.append((ds, gt))
    return corpus


def _generate_excluding(spec: SynthSpec, chronic: str, name: str) -> tuple[Dataset, GroundTruth]:
    rng = np.random.default_rng([spec.seed, 2])
    pool = [n for n in spec.name_pool if n != chronic]
    picked = [pool[i] for i in sorted(rng.choice(len(pool), size=spec.F - 1, replace=False))]
    culprits = [picked[i] for i in rng.choice(len(picked), size=spec.n_culprits, replace=False)]
    plain = SynthSpec(**{**spec.__dict__, "name_pool": tuple([chronic] + picked)})
    return generate(plain, include=[chronic], culprits=culprits, name=name)
