"""Command-line interface.

Exit codes: 0 success, 1 internal error, 2 malformed input, 3 no data left
after preprocessing, 4 degenerate configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import io
from .core import GroundTruth, derive_timeslot_labels, rank_features
from .detectors import ALGORITHMS, DetectorSpec, HyperGrid, grid_search, run_detector
from .errors import DegenerateConfigError, EmptyDataError, InputFormatError, UndefinedMetricError
from .knowledge import EKBase, EKGains, ek_apply, ek_merge, ek_update
from .metrics import nemenyi_cd
from .pipeline import (
    REPORT_COLUMNS,
    SCHEMA,
    PipelineConfig,
    bench,
    detection_metrics,
    load_corpus,
    rank_case,
    ranking_metrics,
    report_rows,
    timeslot_flags,
)
from .preprocess import preprocess
from .scoring import FSKind, FSPolicy
from .synthetic import SynthSpec, generate, generate_corpus

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_EMPTY, EXIT_DEGENERATE = 0, 1, 2, 3, 4

log = logging.getLogger("hurra")


def _json_arg(text: str) -> Any:
    """Inline JSON, or ``@path`` / a path to a JSON file."""
    path = Path(text[1:] if text.startswith("@") else text)
    if text.startswith("@") or (not text.lstrip().startswith("{") and path.exists()):
        return io.read_json(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"invalid JSON argument {text!r}: {exc}") from None


def _load_gt_for(path: str, timestamps: np.ndarray, features: Sequence[str] | None = None) -> GroundTruth:
    gt_ts, gt = io.read_ground_truth_ts(path)
    col = {int(t): i for i, t in enumerate(gt_ts)}
    missing_ts = [int(t) for t in timestamps if int(t) not in col]
    if missing_ts:
        raise InputFormatError(f"{path}: no labels for timestamps {missing_ts[:5]}")
    labels = gt.labels[:, [col[int(t)] for t in timestamps]]
    gt = GroundTruth(gt.feature_names, labels)
    if features is not None:
        absent = [f for f in features if f not in gt.feature_names]
        if absent:
            raise InputFormatError(f"{path}: no column for {absent}")
        gt = gt.select(features)
    return gt


def cmd_preprocess(args: argparse.Namespace) -> int:
    raw = io.read_dataset(args.input)
    xhat, report = preprocess(raw)
    io.write_dataset(xhat, args.output)
    if args.report:
        io.write_json(report.to_json(), args.report)
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    xhat = io.read_dataset(args.xhat)
    gt = _load_gt_for(args.gt, xhat.timestamps, xhat.feature_names) if args.gt else None
    if args.grid:
        if gt is None:
            raise DegenerateConfigError("--grid needs --gt: the upper bound is chosen against labels")
        grid = HyperGrid(args.algo, _json_arg(args.grid))
        spec, series, auc = grid_search(xhat, grid, gt, args.seed)
        log.info("best %s params %s with Pr-Rec AUC %.4f", spec.algorithm, spec.params, auc)
    else:
        params = _json_arg(args.params) if args.params else {}
        spec = DetectorSpec.lower_bound(args.algo, args.seed, **params)
        series = run_detector(xhat, spec, gt)
    io.write_scores(series, xhat.timestamps, args.out)
    spec_out = args.spec_out or str(Path(args.out).with_suffix(".spec.json"))
    io.write_json(spec.to_json(), spec_out)
    return EXIT_OK


def _read_aligned_scores(path: str, timestamps: np.ndarray):
    ts, series = io.read_scores(path)
    if ts.shape != timestamps.shape or not np.array_equal(ts, timestamps):
        raise InputFormatError(f"{path}: score timestamps do not match the dataset")
    return series


def _write_ranking(ranking, out: str | None, as_json: bool) -> None:
    if as_json:
        text = io.dumps(io.ranking_to_json(ranking))
        if out:
            Path(out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    elif out:
        io.write_ranking(ranking, out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["rank", "feature", "score"])
        for i, (f, s) in enumerate(ranking.entries, start=1):
            w.writerow([i, f, repr(float(s))])


def cmd_rank(args: argparse.Namespace) -> int:
    xhat = io.read_dataset(args.xhat)
    series = _read_aligned_scores(args.scores, xhat.timestamps)
    config = PipelineConfig(quantile=args.quantile, fs=args.fs, seed=args.seed,
                            gamma_plus=args.gamma_plus, gamma_minus=args.gamma_minus)
    a_hat = timeslot_flags(series, config.binarization())
    base = EKBase.from_json(io.read_json(args.ek)) if args.ek else None
    try:
        _, ranking = rank_case(xhat, a_hat, config.fs_policy(), base, config.gains())
    except DegenerateConfigError as exc:
        raise DegenerateConfigError(
            f"{exc}. Try another --quantile, or check that the scores are not constant."
        ) from None
    _write_ranking(ranking, args.out, args.json)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    if args.cd:
        k, n = args.cd
        report: dict[str, Any] = {"schema": SCHEMA, "k": k, "n": n, "alpha": args.alpha,
                                  "cd": nemenyi_cd(k, n, args.alpha)}
    else:
        if not args.gt or not (args.scores or args.ranking):
            raise DegenerateConfigError("eval needs --gt and at least one of --scores/--ranking")
        report = {"schema": SCHEMA}
        if args.scores:
            ts, series = io.read_scores(args.scores)
            gt = _load_gt_for(args.gt, ts)
            if not derive_timeslot_labels(gt).any():
                raise DegenerateConfigError(f"{args.gt}: no anomalous timeslot, metrics undefined")
            report.update(detection_metrics(series, gt))
        if args.ranking:
            ranking = io.read_ranking(args.ranking)
            _, gt = io.read_ground_truth_ts(args.gt)
            absent = [f for f in ranking.features if f not in gt.feature_names]
            if absent:
                raise InputFormatError(f"{args.gt}: no column for ranked features {absent}")
            metrics = ranking_metrics(ranking, gt.select(ranking.features))
            report["ndcg"] = metrics["ndcg"]
            report["reading_effort"] = {k: metrics[k] for k in ("m", "t", "e")}
    text = io.dumps(report)
    if args.out:
        io.write_json(report, args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_base(path: str) -> EKBase:
    p = Path(path)
    return EKBase.from_json(io.read_json(p)) if p.exists() else EKBase()


def cmd_ek(args: argparse.Namespace) -> int:
    if args.ek_command == "update":
        ranking = io.read_ranking(args.ranking)
        _, gt = io.read_ground_truth_ts(args.gt)
        absent = [f for f in ranking.features if f not in gt.feature_names]
        if absent:
            raise InputFormatError(f"{args.gt}: no column for ranked features {absent}")
        base = ek_update(_load_base(args.base), ranking.as_dict(), gt.select(ranking.features))
        io.write_json(base.to_json(), args.base)
    elif args.ek_command == "apply":
        base = EKBase.from_json(io.read_json(args.base))
        ranking = io.read_ranking(args.ranking)
        adjusted = ek_apply(ranking.as_dict(), base, EKGains(args.gamma_plus, args.gamma_minus))
        _write_ranking(rank_features(adjusted), args.out, args.json)
    else:
        merged = ek_merge(EKBase.from_json(io.read_json(p)) for p in args.bases)
        if args.out:
            io.write_json(merged.to_json(), args.out)
        else:
            sys.stdout.write(io.dumps(merged.to_json()))
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    obj = io.read_json(args.spec) if args.spec else {}
    if args.seed is not None:
        obj["seed"] = args.seed
    try:
        spec = SynthSpec.from_json(obj)
    except TypeError as exc:
        raise InputFormatError(f"bad synthetic spec: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.corpus:
        members = generate_corpus(args.corpus, spec, args.p_recurring, spec.seed)
        for ds, gt in members:
            io.write_dataset(ds, out / f"{ds.name}.csv")
            io.write_ground_truth(gt, ds.timestamps, out / f"{ds.name}.gt.csv")
        sidecar = {**spec.to_json(), "corpus": args.corpus, "p_recurring_culprit": args.p_recurring}
    else:
        ds, gt = generate(spec)
        io.write_dataset(ds, out / "dataset.csv")
        io.write_ground_truth(gt, ds.timestamps, out / "gt.csv")
        sidecar = spec.to_json()
    io.write_json(sidecar, out / "spec.json")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    obj = io.read_json(args.config) if args.config else {}
    config = PipelineConfig.from_json(
        obj,
        algorithms=tuple(args.algo) if args.algo else None,
        seed=args.seed,
        fs=args.fs,
        quantile=args.quantile,
        gamma_plus=args.gamma_plus,
        gamma_minus=args.gamma_minus,
        loo=args.loo,
        upper_bound=args.upper_bound,
    )
    report = bench(load_corpus(args.corpus), config)
    io.write_json(report, args.out)
    if args.csv:
        with Path(args.csv).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            w.writerows(report_rows(report))
    for failure in report["failures"]:
        print(f"hurra: {failure['dataset']} [{failure['stage']}]: {failure['error']}", file=sys.stderr)
    return EXIT_OK if not report["failures"] else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hurra", description="KPI anomaly detection and root-cause ranking")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("preprocess", help="align, clean, impute and standardize a KPI CSV")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--report", help="where to write the preprocessing report (JSON)")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("detect", help="score every timeslot of a preprocessed CSV")
    s.add_argument("xhat")
    s.add_argument("--algo", required=True, type=str.upper, choices=ALGORITHMS)
    s.add_argument("--params", help="JSON object (inline or file) overriding lower-bound defaults")
    s.add_argument("--grid", help="JSON map parameter -> candidates; runs the upper-bound search")
    s.add_argument("--gt", help="ground-truth CSV (needed by --grid and the oracle)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="score CSV")
    s.add_argument("--spec-out", help="chosen detector spec JSON (default: <out>.spec.json)")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("rank", help="rank KPIs from timeslot scores")
    s.add_argument("xhat")
    s.add_argument("scores")
    s.add_argument("--fs", default="fsa", choices=[k.value for k in FSKind])
    s.add_argument("--ek", help="expert-knowledge base JSON")
    s.add_argument("--gamma-plus", type=float, default=2.0)
    s.add_argument("--gamma-minus", type=float, default=0.0)
    s.add_argument("--quantile", type=float, default=0.95)
    s.add_argument("--seed", type=int, default=0, help="seed of the random policy")
    s.add_argument("--out", help="ranking CSV (default: stdout)")
    s.add_argument("--json", action="store_true", help="write a JSON array instead of CSV")
    s.set_defaults(func=cmd_rank)

    s = sub.add_parser("eval", help="evaluate scores and/or a ranking against ground truth")
    s.add_argument("--gt")
    s.add_argument("--scores")
    s.add_argument("--ranking")
    s.add_argument("--cd", nargs=2, type=int, metavar=("K", "N"),
                   help="only compute the Nemenyi critical difference")
    s.add_argument("--alpha", type=float, default=0.05, choices=(0.05, 0.10))
    s.add_argument("--out")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("ek", help="maintain expert-knowledge bases")
    ek = s.add_subparsers(dest="ek_command", required=True)
    u = ek.add_parser("update", help="fold one solved case into a base (created if absent)")
    u.add_argument("base")
    u.add_argument("--ranking", required=True, help="ranking CSV holding raw feature scores")
    u.add_argument("--gt", required=True)
    a = ek.add_parser("apply", help="re-rank a ranking with a base")
    a.add_argument("base")
    a.add_argument("ranking")
    a.add_argument("--gamma-plus", type=float, default=2.0)
    a.add_argument("--gamma-minus", type=float, default=0.0)
    a.add_argument("--out")
    a.add_argument("--json", action="store_true")
    m = ek.add_parser("merge", help="sum the counters of several bases")
    m.add_argument("bases", nargs="+")
    m.add_argument("--out")
    s.set_defaults(func=cmd_ek)

    s = sub.add_parser("synth", help="generate a labeled synthetic dataset or corpus")
    s.add_argument("spec", nargs="?", help="synthetic spec JSON (defaults for missing keys)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int)
    s.add_argument("--corpus", type=int, help="number of datasets; needs name_pool in the spec")
    s.add_argument("--p-recurring", type=float, default=0.5)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("bench", help="run the pipeline over a corpus directory")
    s.add_argument("corpus", help="directory of <name>.csv / <name>.gt.csv pairs")
    s.add_argument("--config", help="flat JSON config; flags below override it")
    s.add_argument("--out", required=True)
    s.add_argument("--csv", help="also write flat per-dataset rows")
    s.add_argument("--algo", action="append", type=str.upper, choices=ALGORITHMS)
    s.add_argument("--seed", type=int)
    s.add_argument("--fs", choices=[k.value for k in FSKind])
    s.add_argument("--quantile", type=float)
    s.add_argument("--gamma-plus", type=float)
    s.add_argument("--gamma-minus", type=float)
    s.add_argument("--loo", action=argparse.BooleanOptionalAction, default=None)
    s.add_argument("--upper-bound", action=argparse.BooleanOptionalAction, default=None)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="hurra: %(message)s")
    try:
        return args.func(args)
    except (InputFormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"hurra: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EmptyDataError as exc:
        print(f"hurra: no data: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (DegenerateConfigError, UndefinedMetricError, ValueError) as exc:
        print(f"hurra: degenerate configuration: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except Exception as exc:  # noqa: BLE001
        print(f"hurra: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
