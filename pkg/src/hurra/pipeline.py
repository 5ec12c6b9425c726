"""End-to-end troubleshooting pipeline and the corpus benchmark.

One case runs preprocess -> detect -> binarize -> feature scoring ->
(optional) expert-knowledge re-ranking, and is scored against the expert
labels. A corpus run repeats this for several detector settings, adds the
leave-one-out knowledge evaluation and aggregates everything into a
versioned report.

Work is spread over a thread pool sized by ``HURRA_THREADS`` (default: CPU
count). Every task is a pure function of its inputs and results are
collected in submission order, so reports do not depend on the pool size.
"""

from __future__ import annotations

import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import (
    Dataset,
    FeatureRanking,
    GroundTruth,
    ScoreSeries,
    derive_feature_labels,
    derive_timeslot_labels,
    rank_features,
)
from .detectors import (
    ALGORITHMS,
    BinarizationPolicy,
    DetectorSpec,
    HyperGrid,
    UB_GRIDS,
    binarize,
    grid_search,
    ideal_ensemble,
    run_detector,
)
from .errors import DegenerateConfigError, EmptyDataError, HurraError, InputFormatError
from .io import read_dataset, read_ground_truth_ts
from .knowledge import EKBase, EKGains, case_counters, ek_apply, ek_merge
from .metrics import average_ranks, ndcg, nemenyi_cd, nemenyi_links, pr_auc, reading_effort, roc_auc
from .preprocess import preprocess
from .scoring import FSKind, FSPolicy, feature_scores

SCHEMA = 1
THREADS_ENV = "HURRA_THREADS"
LB_ALGORITHMS = ("IF", "RHF", "HST", "LODA", "XSTREAM")
IDEAL = "IDEAL"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise DegenerateConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise DegenerateConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn: Callable[[Any], Any], items: Sequence[Any]) -> list[Any]:
    """``[fn(x) for x in items]`` on the shared pool, in input order."""
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class PipelineConfig:
    """Flat, JSON-serializable run configuration.

    ``params`` overrides the lower-bound defaults per algorithm; ``grids``
    overrides the upper-bound search spaces (only used when
    ``upper_bound`` is set).
    """

    algorithms: tuple[str, ...] = LB_ALGORITHMS
    params: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)
    upper_bound: bool = False
    grids: Mapping[str, Mapping[str, Sequence[Any]]] = field(default_factory=dict)
    ensemble: bool = True
    quantile: float = 0.95
    fs: str = "fsa"
    gamma_plus: float = 2.0
    gamma_minus: float = 0.0
    loo: bool = True
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        algos = tuple(str(a).upper() for a in self.algorithms)
        if not algos:
            raise DegenerateConfigError("config lists no algorithms")
        for a in algos:
            if a not in ALGORITHMS:
                raise DegenerateConfigError(f"unknown algorithm {a!r}; known: {list(ALGORITHMS)}")
        if len(set(algos)) != len(algos):
            raise DegenerateConfigError("algorithms listed twice")
        object.__setattr__(self, "algorithms", algos)
        object.__setattr__(self, "params", {k.upper(): dict(v) for k, v in self.params.items()})
        object.__setattr__(self, "grids", {k.upper(): dict(v) for k, v in self.grids.items()})
        try:
            self.fs_policy()
            self.binarization()
            self.gains()
            for a in algos:
                self.detector(a)
        except ValueError as exc:
            if isinstance(exc, HurraError):
                raise
            raise DegenerateConfigError(str(exc)) from None
        if self.alpha not in (0.05, 0.10):
            raise DegenerateConfigError("alpha must be 0.05 or 0.10")
        if int(self.seed) < 0:
            raise DegenerateConfigError("seed must be non-negative")

    def detector(self, algorithm: str) -> DetectorSpec:
        return DetectorSpec.lower_bound(algorithm, int(self.seed), **self.params.get(algorithm, {}))

    def grid(self, algorithm: str) -> HyperGrid:
        return HyperGrid(algorithm, self.grids.get(algorithm, UB_GRIDS[algorithm]))

    def binarization(self) -> BinarizationPolicy:
        return BinarizationPolicy.quantile(self.quantile)

    def fs_policy(self) -> FSPolicy:
        kind = FSKind(self.fs)
        return FSPolicy(kind, int(self.seed) if kind is FSKind.RANDOM else None)

    def gains(self) -> EKGains:
        return EKGains(self.gamma_plus, self.gamma_minus)

    def to_json(self) -> dict:
        d = asdict(self)
        d["algorithms"] = list(self.algorithms)
        d["params"] = {k: dict(v) for k, v in self.params.items()}
        d["grids"] = {k: {p: list(c) for p, c in v.items()} for k, v in self.grids.items()}
        return d

    @classmethod
    def from_json(cls, obj: Mapping[str, Any], **overrides: Any) -> PipelineConfig:
        merged = {**obj, **{k: v for k, v in overrides.items() if v is not None}}
        known = set(cls.__dataclass_fields__)
        unknown = set(merged) - known
        if unknown:
            raise DegenerateConfigError(f"unknown config keys {sorted(unknown)}; known: {sorted(known)}")
        if "algorithms" in merged:
            merged["algorithms"] = tuple(merged["algorithms"])
        return cls(**merged)


def align_ground_truth(gt: GroundTruth, gt_timestamps: np.ndarray, dhat: Dataset) -> GroundTruth:
    """Labels for exactly the timeslots and features of ``dhat``.

    Timeslots created by grid alignment carry no label (0). Every retained
    feature must be present in the ground truth.
    """
    missing = [f for f in dhat.feature_names if f not in gt.feature_names]
    if missing:
        raise InputFormatError(f"ground truth has no column for {missing}")
    gt = gt.select(dhat.feature_names)
    gt_ts = np.asarray(gt_timestamps, dtype=np.int64)
    if gt_ts.shape == dhat.timestamps.shape and np.array_equal(gt_ts, dhat.timestamps):
        return gt
    col = {int(t): i for i, t in enumerate(gt_ts)}
    labels = np.zeros((dhat.F, dhat.T), dtype=np.int8)
    for k, t in enumerate(dhat.timestamps):
        i = col.get(int(t))
        if i is not None:
            labels[:, k] = gt.labels[:, i]
    return GroundTruth(dhat.feature_names, labels)


def timeslot_flags(series: ScoreSeries, policy: BinarizationPolicy) -> np.ndarray:
    """Binary detectors keep their own flags; the others are binarized."""
    if series.binary is not None:
        return np.asarray(series.binary, dtype=np.int8)
    return binarize(series, policy)


def rank_case(
    dhat: Dataset,
    a_hat: np.ndarray,
    policy: FSPolicy,
    base: EKBase | None = None,
    gains: EKGains = EKGains(),
) -> tuple[dict[str, float], FeatureRanking]:
    """Raw feature scores and the (possibly re-weighted) ranking."""
    raw = feature_scores(dhat, a_hat, policy)
    adjusted = raw if base is None else ek_apply(raw, base, gains)
    return raw, rank_features(adjusted)


def ranking_metrics(ranking: FeatureRanking, gt: GroundTruth) -> dict[str, Any]:
    truth = derive_feature_labels(gt) & set(ranking.features)
    if not truth:
        raise DegenerateConfigError("no retained feature is anomalous in the ground truth")
    m, t, e = reading_effort(ranking, truth)
    return {"ndcg": ndcg(ranking, truth), "m": m, "t": t, "e": e}


def detection_metrics(series: ScoreSeries, gt: GroundTruth) -> dict[str, float]:
    a = derive_timeslot_labels(gt)
    return {"pr_auc": pr_auc(series, a), "roc_auc": roc_auc(series, a)}


@dataclass(frozen=True)
class CaseResult:
    """Outcome of one (dataset, detector) pipeline run."""

    label: str
    spec: DetectorSpec
    scores: ScoreSeries
    a_hat: np.ndarray
    fs_scores: dict[str, float] | None
    ranking: FeatureRanking | None
    metrics: dict[str, Any]
    error: str | None = None


def run_case(
    dhat: Dataset,
    gt: GroundTruth,
    spec: DetectorSpec,
    config: PipelineConfig,
    base: EKBase | None = None,
    label: str | None = None,
    scores: ScoreSeries | None = None,
) -> CaseResult:
    """Detect, binarize, score features and evaluate one aligned case.

    A degenerate binarization (every or no timeslot flagged) leaves the
    detection metrics in place and records the feature-scoring error.
    """
    series = scores if scores is not None else run_detector(dhat, spec, gt)
    metrics: dict[str, Any] = detection_metrics(series, gt)
    a_hat = timeslot_flags(series, config.binarization())
    try:
        raw, ranking = rank_case(dhat, a_hat, config.fs_policy(), base, config.gains())
    except DegenerateConfigError as exc:
        return CaseResult(label or spec.algorithm, spec, series, a_hat, None, None, metrics, str(exc))
    metrics.update(ranking_metrics(ranking, gt))
    return CaseResult(label or spec.algorithm, spec, series, a_hat, raw, ranking, metrics)


@dataclass(frozen=True)
class Case:
    """A preprocessed dataset with its aligned ground truth."""

    name: str
    dhat: Dataset
    gt: GroundTruth


def prepare_case(raw: Dataset, gt: GroundTruth, gt_timestamps: np.ndarray) -> Case:
    dhat, _ = preprocess(raw)
    aligned = align_ground_truth(gt, gt_timestamps, dhat)
    if not derive_timeslot_labels(aligned).any():
        raise DegenerateConfigError(f"{raw.name}: ground truth flags no timeslot")
    return Case(raw.name, dhat, aligned)


def load_corpus(directory: str | Path) -> list[tuple[Dataset, np.ndarray, GroundTruth]]:
    """Read ``<name>.csv`` / ``<name>.gt.csv`` pairs, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputFormatError(f"{directory}: not a directory")
    out = []
    for gt_path in sorted(directory.glob("*.gt.csv")):
        name = gt_path.name[: -len(".gt.csv")]
        data_path = directory / f"{name}.csv"
        if not data_path.exists():
            raise InputFormatError(f"{gt_path}: no matching {data_path.name}")
        ts, gt = read_ground_truth_ts(gt_path)
        out.append((read_dataset(data_path, name=name), ts, gt))
    if not out:
        raise EmptyDataError(f"{directory}: no '<name>.gt.csv' files found")
    return out


def leave_one_out(
    fs_scores: Sequence[Mapping[str, float] | None], gts: Sequence[GroundTruth]
) -> list[EKBase | None]:
    """Knowledge base for each held-out case, built from the others only.

    Cases whose feature scoring failed (``None``) contribute nothing and get
    no base.
    """
    if len(gts) < 2:
        raise DegenerateConfigError("leave-one-out needs at least 2 datasets")
    contributions = [
        case_counters(s, g) if s is not None else None for s, g in zip(fs_scores, gts)
    ]
    bases = []
    for i in range(len(gts)):
        if fs_scores[i] is None:
            bases.append(None)
            continue
        others = [c for j, c in enumerate(contributions) if j != i and c is not None]
        bases.append(ek_merge(others) if others else EKBase())
    return bases


def _run_labeled(case: Case, label: str, config: PipelineConfig) -> CaseResult:
    if label.endswith("-UB"):
        spec, series, _ = grid_search(case.dhat, config.grid(label[:-3]), case.gt, int(config.seed))
        return run_case(case.dhat, case.gt, spec, config, label=label, scores=series)
    return run_case(case.dhat, case.gt, config.detector(label), config, label=label)


def _error_text(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}"


def _median(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return float(statistics.median(vals)) if vals else None


def _mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return float(statistics.fmean(vals)) if vals else None


def bench(
    corpus: Sequence[tuple[Dataset, np.ndarray, GroundTruth]], config: PipelineConfig
) -> dict[str, Any]:
    """Run every configured detector on every dataset and aggregate.

    Returns the report as plain JSON-ready data (schema 1). Per-dataset
    failures are listed under ``failures``; the remaining datasets are
    still evaluated.
    """
    if config.loo and len(corpus) < 2:
        raise DegenerateConfigError("leave-one-out needs a corpus of at least 2 datasets")
    labels = list(config.algorithms)
    if config.upper_bound:
        labels += [f"{a}-UB" for a in config.algorithms if a not in ("ORACLE",)]

    def prepare(item):
        raw, ts, gt = item
        try:
            return prepare_case(raw, gt, ts)
        except (ValueError, HurraError) as exc:
            return _error_text(exc)

    prepared = parallel_map(prepare, list(corpus))
    failures: list[dict[str, Any]] = []
    cases: list[Case] = []
    for (raw, _, _), p in zip(corpus, prepared):
        if isinstance(p, str):
            failures.append({"dataset": raw.name, "stage": "prepare", "error": p})
        else:
            cases.append(p)

    def detect(task):
        ci, label = task
        try:
            return _run_labeled(cases[ci], label, config)
        except (ValueError, HurraError) as exc:
            return _error_text(exc)

    tasks = [(ci, label) for ci in range(len(cases)) for label in labels]
    outcomes = dict(zip(tasks, parallel_map(detect, tasks)))

    results: list[dict[str, CaseResult]] = [{} for _ in cases]
    for (ci, label), out in outcomes.items():
        if isinstance(out, str):
            failures.append({"dataset": cases[ci].name, "stage": label, "error": out})
        else:
            results[ci][label] = out

    if config.ensemble and len(labels) > 1:
        for ci, case in enumerate(cases):
            members = [(r.spec, r.scores) for lab in labels if (r := results[ci].get(lab))]
            if not members:
                continue
            spec, series = ideal_ensemble(members, case.gt)
            results[ci][IDEAL] = run_case(case.dhat, case.gt, spec, config, label=IDEAL, scores=series)
        labels.append(IDEAL)

    if config.loo and len(cases) >= 2:
        for label in labels:
            rows = [results[ci].get(label) for ci in range(len(cases))]
            bases = leave_one_out(
                [r.fs_scores if r is not None else None for r in rows], [c.gt for c in cases]
            )
            for ci, (r, base) in enumerate(zip(rows, bases)):
                if r is None or base is None:
                    continue
                adjusted = rank_features(ek_apply(r.fs_scores, base, config.gains()))
                ek = ranking_metrics(adjusted, cases[ci].gt)
                r.metrics.update({f"{k}_ek": v for k, v in ek.items()})
    elif config.loo:
        failures.append({"dataset": None, "stage": "loo", "error": "fewer than 2 usable datasets"})

    datasets = []
    for ci, case in enumerate(cases):
        entry = {
            "name": case.name,
            "F": case.dhat.F,
            "T": case.dhat.T,
            "anomalous_timeslots": int(derive_timeslot_labels(case.gt).sum()),
            "anomalous_features": sorted(derive_feature_labels(case.gt)),
            "results": {},
        }
        for label in labels:
            r = results[ci].get(label)
            if r is None:
                continue
            item = {k: (float(v) if isinstance(v, float) else v) for k, v in r.metrics.items()}
            item["spec"] = r.spec.to_json()
            if r.error:
                item["fs_error"] = r.error
            entry["results"][label] = item
        datasets.append(entry)

    return {
        "schema": SCHEMA,
        "config": config.to_json(),
        "threads_env": THREADS_ENV,
        "datasets": datasets,
        "failures": failures,
        "summary": summarize(datasets, labels, config.alpha),
    }


def summarize(datasets: Sequence[Mapping[str, Any]], labels: Sequence[str], alpha: float) -> dict[str, Any]:
    """Corpus aggregates: medians, average ranks, critical difference, table."""

    def column(label: str, key: str) -> list[Any]:
        return [d["results"].get(label, {}).get(key) for d in datasets]

    summary: dict[str, Any] = {
        "median_pr_auc": {lab: _median(column(lab, "pr_auc")) for lab in labels},
        "table": {
            lab: {
                "median_ndcg": _median(column(lab, "ndcg")),
                "median_m": _median(column(lab, "m")),
                "mean_ndcg": _mean(column(lab, "ndcg")),
                "median_ndcg_ek": _median(column(lab, "ndcg_ek")),
                "median_m_ek": _median(column(lab, "m_ek")),
                "mean_ndcg_ek": _mean(column(lab, "ndcg_ek")),
            }
            for lab in labels
        },
    }
    complete = [d for d in datasets if all("pr_auc" in d["results"].get(lab, {}) for lab in labels)]
    summary["ranked_datasets"] = len(complete)
    if len(labels) >= 2 and complete:
        matrix = np.array([[d["results"][lab]["pr_auc"] for d in complete] for lab in labels])
        ranks = {lab: float(r) for lab, r in zip(labels, average_ranks(matrix))}
        cd = nemenyi_cd(len(labels), len(complete), alpha) if len(labels) <= 20 else None
        summary["average_ranks"] = ranks
        summary["cd"] = cd
        summary["alpha"] = alpha
        summary["links"] = nemenyi_links(ranks, cd) if cd is not None else None
    else:
        summary["average_ranks"] = None
        summary["cd"] = None
        summary["alpha"] = alpha
        summary["links"] = None
    return summary


REPORT_COLUMNS = (
    "dataset", "algorithm", "pr_auc", "roc_auc", "ndcg", "m", "t", "e", "ndcg_ek", "m_ek", "e_ek",
)


def report_rows(report: Mapping[str, Any]) -> list[list[Any]]:
    """Flat rows (one per dataset and algorithm) for spreadsheet use."""
    rows = []
    for d in report["datasets"]:
        for label, r in d["results"].items():
            rows.append([d["name"], label, *(r.get(k, "") for k in REPORT_COLUMNS[2:])])
    return rows
