"""Command-line front end: dataset synthesis plus the evaluation protocols.

Every report is written as comment-headed CSV (or an aligned table with
--format table); the resolved configuration and seed go into the header so a
run can be reproduced exactly. When a report goes to a file, a companion PNG
figure is rendered next to it unless --no-plot is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import report
from .baselines import ForestConfig, SvmConfig, forest_snapshot, rf_train, svm_snapshot, svm_train
from .datamodel import Dataset
from .evaluation import (
    DEFAULT_RUNS,
    confusion_of,
    derive_seed,
    forest_sweep,
    incremental_protocol,
    metrics_report,
    repeated_eval,
    replay_chunks,
    split_eval,
)
from .ingest import generate_synthetic, load_csv, save_csv, stratified_split, SyntheticSpec
from .learners import ALGORITHMS, DISPLAY_NAMES, LearnerConfig

DEFAULT_FRACTIONS = [round(0.1 * k, 1) for k in range(1, 10)]
DEFAULT_TREE_COUNTS = list(range(1, 10)) + list(range(10, 100, 10))

_HYPERPARAMS = ("C", "r", "eta", "alpha", "a", "b_bound", "ellip_b", "ellip_c", "eta0")


def _n_jobs(args) -> int:
    if args.serial:
        return 1
    return min(os.cpu_count() or 1, args.runs)


def _load(args) -> Dataset:
    return load_csv(args.data, normalize=not args.no_normalize)


def _common_meta(args, data: Dataset | None = None) -> dict:
    meta = {"command": args.command, "seed": args.seed}
    if hasattr(args, "runs"):
        meta["runs"] = args.runs
    if data is not None:
        meta["data"] = args.data
        meta["n_samples"] = len(data)
        meta["n_pos"] = data.n_pos
        meta["n_neg"] = data.n_neg
        meta["normalize"] = not args.no_normalize
    return meta


def _emit(args, meta: dict, columns, rows, figure=None) -> None:
    text = report.render(meta, columns, rows, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        if figure is not None and not args.no_plot:
            figure(report.figure_path(args.out))
    else:
        sys.stdout.write(text)


def _learner_meta(config: LearnerConfig) -> dict:
    return {name: getattr(config, name) for name in _HYPERPARAMS}


def cmd_synth(args) -> None:
    spec = SyntheticSpec(
        n_pos=args.pos, n_neg=args.neg, flip_rate=args.flip,
        seed=args.seed, separation=args.sep,
    )
    data = generate_synthetic(spec)
    save_csv(data, args.out)


def _parse_algorithms(raw: str) -> list[str]:
    if raw.strip().lower() == "all":
        return list(ALGORITHMS)
    names = [token.strip().lower() for token in raw.split(",") if token.strip()]
    for name in names:
        if name not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {name!r}; valid names: {', '.join(ALGORITHMS)}"
            )
    if not names:
        raise ValueError("no algorithms given")
    return names


def cmd_eval_online(args) -> None:
    data = _load(args)
    names = _parse_algorithms(args.algorithms)
    n_jobs = _n_jobs(args)

    rows = []
    for name in names:
        config = LearnerConfig(algorithm=name)
        agg = repeated_eval(config, data, n_runs=args.runs, master_seed=args.seed,
                            n_jobs=n_jobs)
        rows.append(
            (DISPLAY_NAMES[name],
             agg.error_rate.mean, agg.error_rate.std,
             agg.n_updates.mean, agg.n_updates.std,
             agg.cpu_seconds.mean, agg.cpu_seconds.std)
        )
    rows.sort(key=lambda r: (r[1], r[0]))

    meta = _common_meta(args, data)
    meta["algorithms"] = ",".join(names)
    meta.update(_learner_meta(LearnerConfig(algorithm=names[0])))
    columns = [
        ("algorithm", None),
        ("error_mean", "%.4f"), ("error_std", "%.4f"),
        ("updates_mean", "%.4f"), ("updates_std", "%.4f"),
        ("cpu_mean", "%.6f"), ("cpu_std", "%.6f"),
    ]
    _emit(args, meta, columns, rows,
          figure=lambda path: report.figure_eval_online(rows, path))


def cmd_incremental(args) -> None:
    data = _load(args)
    config = LearnerConfig(algorithm=args.algorithm.lower())
    if args.chunks > len(data):
        raise ValueError(f"chunks ({args.chunks}) exceeds sample count ({len(data)})")

    chunks = incremental_protocol(
        config, data, n_chunks=args.chunks, mode=args.mode,
        n_runs=args.runs, master_seed=args.seed, n_jobs=_n_jobs(args),
    )
    rows = [
        (c.n_records,
         c.result.error_rate.mean, c.result.error_rate.std,
         c.result.n_updates.mean, c.result.n_updates.std,
         c.result.cpu_seconds.mean, c.result.cpu_seconds.std)
        for c in chunks
    ]

    meta = _common_meta(args, data)
    meta["algorithm"] = config.algorithm
    meta["mode"] = args.mode
    meta["chunks"] = args.chunks
    meta.update(_learner_meta(config))
    columns = [
        ("n_records", "%d"),
        ("error_mean", "%.4f"), ("error_std", "%.4f"),
        ("updates_mean", "%.4f"), ("updates_std", "%.4f"),
        ("cpu_mean", "%.6f"), ("cpu_std", "%.6f"),
    ]
    _emit(args, meta, columns, rows,
          figure=lambda path: report.figure_incremental(
              rows, path, DISPLAY_NAMES[config.algorithm]))

    if args.save_model:
        stream_seed = derive_seed(args.seed, 0)
        order = np.random.default_rng(stream_seed).permutation(len(data))
        stream = [data.samples[i] for i in order]
        _rows, learner = replay_chunks(config, stream, args.chunks, args.mode)
        Path(args.save_model).write_text(learner.to_json(), encoding="utf-8")


def cmd_eval_offline(args) -> None:
    data = _load(args)
    meta = _common_meta(args, data)
    meta["model"] = args.model

    if args.model == "svm":
        if args.tree_counts is not None:
            raise ValueError("--tree-counts applies only to --model forest")
        fractions = _parse_floats(args.fractions) if args.fractions else DEFAULT_FRACTIONS
        trainer = SvmConfig()
        meta["svm_C"] = trainer.C
        meta["svm_epochs"] = trainer.epochs
        rows_data = split_eval(trainer, data, fractions, n_runs=args.runs,
                               master_seed=args.seed, n_jobs=_n_jobs(args))
        columns = [("train_fraction", "%.2f"), ("accuracy_mean", "%.4f"), ("accuracy_std", "%.4f")]
        rows = [(r.key, r.accuracy.mean, r.accuracy.std) for r in rows_data]
        fig = lambda path: report.figure_sweep(  # noqa: E731
            rows, path, "train fraction", "Linear SVM accuracy vs train fraction")
    else:
        if args.fractions is not None:
            raise ValueError("--fractions applies only to --model svm")
        counts = [int(c) for c in _parse_floats(args.tree_counts)] if args.tree_counts else DEFAULT_TREE_COUNTS
        trainer = ForestConfig()
        meta["forest_max_features"] = "sqrt" if trainer.max_features is None else trainer.max_features
        meta["forest_bootstrap"] = trainer.bootstrap
        rows_data = forest_sweep(data, counts, n_runs=args.runs,
                                 master_seed=args.seed, base=trainer, n_jobs=_n_jobs(args))
        columns = [("n_trees", "%d"), ("accuracy_mean", "%.4f"), ("accuracy_std", "%.4f")]
        rows = [(int(r.key), r.accuracy.mean, r.accuracy.std) for r in rows_data]
        fig = lambda path: report.figure_sweep(  # noqa: E731
            rows, path, "number of trees", "Random forest accuracy vs tree count")

    text = report.render(meta, columns, rows, args.format)

    if args.metrics or args.save_model:
        split_seed = derive_seed(args.seed, 0)
        train, test = stratified_split(data, 0.8, split_seed)
        train_seed = derive_seed(args.seed, 0, 1)
        if args.model == "svm":
            cfg = SvmConfig(seed=train_seed)
            model = svm_train(train, cfg)
            snap = svm_snapshot(model, cfg)
        else:
            cfg = ForestConfig(seed=train_seed)
            model = rf_train(train, cfg)
            snap = forest_snapshot(model)
        if args.metrics:
            m = metrics_report(model, test)
            c = confusion_of(model, test)
            met_meta = {"metrics_split": "80:20", "metrics_confusion":
                        f"tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn}"}
            met_columns = [
                ("accuracy", "%.4f"), ("tp_rate", "%.4f"), ("fp_rate", "%.4f"),
                ("precision", "%.4f"), ("recall", "%.4f"), ("f_measure", "%.4f"),
                ("mcc", "%.4f"),
            ]
            met_rows = [(m.accuracy, m.tp_rate, m.fp_rate, m.precision, m.recall,
                         m.f_measure, m.mcc)]
            text += report.render(met_meta, met_columns, met_rows, args.format)
        if args.save_model:
            Path(args.save_model).write_text(json.dumps(snap), encoding="utf-8")

    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        if not args.no_plot:
            fig(report.figure_path(args.out))
    else:
        sys.stdout.write(text)


def _parse_floats(raw: str) -> list[float]:
    try:
        return [float(token) for token in raw.split(",") if token.strip()]
    except ValueError:
        raise ValueError(f"could not parse numeric list {raw!r}") from None


def _add_common(parser: argparse.ArgumentParser, runs: bool = True) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    if runs:
        parser.add_argument("--runs", type=int, default=DEFAULT_RUNS,
                            help="repeated shuffled runs to aggregate")
    parser.add_argument("--out", "-o", help="output file (stdout if omitted)")
    parser.add_argument("--format", choices=("csv", "table"), default="csv")
    parser.add_argument("--serial", action="store_true",
                        help="force single-threaded runs for clean timing")
    parser.add_argument("--no-normalize", action="store_true",
                        help="skip min-max normalization of the numeric feature")
    parser.add_argument("--no-plot", action="store_true",
                        help="skip the companion figure next to --out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olbench",
        description="Benchmark online linear classifiers and offline baselines "
                    "on the 13-feature clinical CSV schema.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset CSV")
    p.add_argument("--pos", type=int, required=True, help="positive sample count")
    p.add_argument("--neg", type=int, required=True, help="negative sample count")
    p.add_argument("--flip", type=float, default=0.0, help="label flip probability in [0,1)")
    p.add_argument("--sep", type=float, default=1.0, help="planted rule margin in (0,6]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", required=True, help="destination CSV")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval-online", help="prequential error of online learners")
    p.add_argument("data", help="dataset CSV path")
    p.add_argument("--algorithms", default="all",
                   help="'all' or a comma-separated subset of: " + ", ".join(ALGORITHMS))
    _add_common(p)
    p.set_defaults(func=cmd_eval_online)

    p = sub.add_parser("incremental", help="chunked retrain/incremental protocol")
    p.add_argument("data", help="dataset CSV path")
    p.add_argument("--algorithm", default="perceptron",
                   help="one of: " + ", ".join(ALGORITHMS))
    p.add_argument("--mode", choices=("retrain", "incremental"), default="incremental")
    p.add_argument("--chunks", type=int, default=10)
    p.add_argument("--save-model", help="write the final model snapshot (run 0 stream)")
    _add_common(p)
    p.set_defaults(func=cmd_incremental)

    p = sub.add_parser("eval-offline", help="train/test sweeps for the baselines")
    p.add_argument("data", help="dataset CSV path")
    p.add_argument("--model", choices=("svm", "forest"), required=True)
    p.add_argument("--fractions", help="comma-separated train fractions (svm)")
    p.add_argument("--tree-counts", help="comma-separated tree counts (forest)")
    p.add_argument("--metrics", action="store_true",
                   help="append a threshold-metrics row from an 80:20 split")
    p.add_argument("--save-model", help="write the 80:20-trained model snapshot")
    _add_common(p)
    p.set_defaults(func=cmd_eval_offline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
