"""Experiment protocols: prequential streams, repeated shuffled runs,
incremental-versus-retrain replay, and offline train/test sweeps.

Every protocol is bit-deterministic given its master seed (CPU time aside):
per-run seeds are derived from (master_seed, run index), and aggregation uses
exact summation so the result does not depend on fold order.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import (
    Forest,
    ForestConfig,
    SvmConfig,
    rf_predict,
    rf_train,
    svm_train,
)
from .datamodel import (
    POSITIVE,
    ConfusionMatrix,
    Dataset,
    FirstOrderModel,
    Metrics,
    Sample,
    augment,
    compute_metrics,
    decide,
)
from .ingest import stratified_split
from .learners import LearnerConfig, OnlineLearner, make_learner

MODE_RETRAIN = "retrain"
MODE_INCREMENTAL = "incremental"
MODES = (MODE_RETRAIN, MODE_INCREMENTAL)

DEFAULT_RUNS = 20


def _canonical_mode(mode: str) -> str:
    if mode == "retrain_full":
        return MODE_RETRAIN
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    return mode


def derive_seed(master_seed: int, *branch: int) -> int:
    """Stable child seed for (master, branch...) without RNG state sharing."""
    ss = np.random.SeedSequence([int(master_seed), *[int(b) for b in branch]])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class MeanStd:
    mean: float
    std: float


@dataclass(frozen=True)
class StreamEvalResult:
    error_rate: float
    n_updates: int
    cpu_seconds: float
    n_samples: int
    n_mistakes: int


@dataclass(frozen=True)
class AggregateResult:
    error_rate: MeanStd
    n_updates: MeanStd
    cpu_seconds: MeanStd
    n_runs: int
    std_defined: bool


@dataclass(frozen=True)
class ChunkRow:
    n_records: int
    error_rate: float
    n_updates: int
    cpu_seconds: float


@dataclass(frozen=True)
class ChunkAggregate:
    n_records: int
    result: AggregateResult


def _mean_std(values) -> MeanStd:
    values = list(values)
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return MeanStd(mean, 0.0)
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return MeanStd(mean, math.sqrt(var))


def aggregate_stream_results(results) -> AggregateResult:
    """Sample mean and (n-1) std per metric; exact sums, so order-independent."""
    results = list(results)
    if not results:
        raise ValueError("nothing to aggregate")
    return AggregateResult(
        error_rate=_mean_std(r.error_rate for r in results),
        n_updates=_mean_std(r.n_updates for r in results),
        cpu_seconds=_mean_std(r.cpu_seconds for r in results),
        n_runs=len(results),
        std_defined=len(results) > 1,
    )


def _augmented_matrix(samples: list[Sample]) -> np.ndarray:
    x = np.array([s.x for s in samples], dtype=np.float64)
    return np.hstack([x, np.ones((len(samples), 1))])


def _drive(learner: OnlineLearner, x_aug: np.ndarray, ys) -> tuple[int, float]:
    """Prequential pass: predict, count the mistake, then update. Returns
    (mistakes, cpu_seconds); only the per-step work is timed."""
    mistakes = 0
    start = time.perf_counter()
    for i in range(x_aug.shape[0]):
        outcome = learner.update(x_aug[i], ys[i])
        if outcome.predicted != ys[i]:
            mistakes += 1
    return mistakes, time.perf_counter() - start


def online_eval(config: LearnerConfig, stream: list[Sample],
                initial: OnlineLearner | None = None) -> StreamEvalResult:
    """Single prequential pass over an ordered stream."""
    if not stream:
        raise ValueError("stream is empty")
    x_aug = _augmented_matrix(stream)
    ys = [s.y for s in stream]
    learner = initial if initial is not None else make_learner(config, x_aug.shape[1])
    start_updates = learner.n_updates
    mistakes, cpu = _drive(learner, x_aug, ys)
    n = len(stream)
    return StreamEvalResult(
        error_rate=mistakes / n,
        n_updates=learner.n_updates - start_updates,
        cpu_seconds=cpu,
        n_samples=n,
        n_mistakes=mistakes,
    )


def _shuffled_stream(data: Dataset, seed: int) -> list[Sample]:
    order = np.random.default_rng(seed).permutation(len(data))
    return [data.samples[i] for i in order]


def _online_run(task) -> StreamEvalResult:
    config, data, run_seed = task
    return online_eval(config, _shuffled_stream(data, run_seed))


def _map_tasks(fn, tasks, n_jobs: int):
    if n_jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(n_jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def repeated_eval(config: LearnerConfig, data: Dataset, n_runs: int = DEFAULT_RUNS,
                  master_seed: int = 0, n_jobs: int = 1) -> AggregateResult:
    """Aggregate online_eval over independently shuffled, seeded runs."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    tasks = [(config, data, derive_seed(master_seed, j)) for j in range(n_runs)]
    return aggregate_stream_results(_map_tasks(_online_run, tasks, n_jobs))


def chunk_boundaries(n: int, n_chunks: int) -> list[int]:
    """Cumulative prefix sizes ceil(k*n/n_chunks) for k = 1..n_chunks."""
    if not 1 <= n_chunks <= n:
        raise ValueError(f"n_chunks must lie in [1, {n}]")
    return [-(-k * n // n_chunks) for k in range(1, n_chunks + 1)]


def replay_chunks(config: LearnerConfig, stream: list[Sample], n_chunks: int,
                  mode: str) -> tuple[list[ChunkRow], OnlineLearner]:
    """Process one ordered stream chunk by chunk.

    retrain mode rebuilds the model on each cumulative prefix from scratch;
    incremental mode continues the live model over only the new records,
    carrying cumulative mistake and update counts forward.
    """
    mode = _canonical_mode(mode)
    boundaries = chunk_boundaries(len(stream), n_chunks)
    x_aug = _augmented_matrix(stream)
    ys = [s.y for s in stream]
    dim = x_aug.shape[1]
    rows: list[ChunkRow] = []

    if mode == MODE_INCREMENTAL:
        learner = make_learner(config, dim)
        mistakes = 0
        prev = 0
        for b in boundaries:
            chunk_mistakes, cpu = _drive(learner, x_aug[prev:b], ys[prev:b])
            mistakes += chunk_mistakes
            rows.append(ChunkRow(b, mistakes / b, learner.n_updates, cpu))
            prev = b
        return rows, learner

    learner = make_learner(config, dim)
    for b in boundaries:
        learner = make_learner(config, dim)
        mistakes, cpu = _drive(learner, x_aug[:b], ys[:b])
        rows.append(ChunkRow(b, mistakes / b, learner.n_updates, cpu))
    return rows, learner


def _chunk_run(task) -> list[ChunkRow]:
    config, data, n_chunks, mode, run_seed = task
    rows, _learner = replay_chunks(config, _shuffled_stream(data, run_seed), n_chunks, mode)
    return rows


def incremental_protocol(config: LearnerConfig, data: Dataset, n_chunks: int,
                         mode: str, n_runs: int = DEFAULT_RUNS, master_seed: int = 0,
                         n_jobs: int = 1) -> list[ChunkAggregate]:
    """Per-chunk aggregates of replay_chunks over repeated shuffled runs."""
    mode = _canonical_mode(mode)
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    chunk_boundaries(len(data), n_chunks)  # validate before spawning work
    tasks = [
        (config, data, n_chunks, mode, derive_seed(master_seed, j)) for j in range(n_runs)
    ]
    per_run = _map_tasks(_chunk_run, tasks, n_jobs)

    out: list[ChunkAggregate] = []
    for c in range(n_chunks):
        rows = [run[c] for run in per_run]
        agg = aggregate_stream_results(
            [
                StreamEvalResult(r.error_rate, r.n_updates, r.cpu_seconds, r.n_records,
                                 round(r.error_rate * r.n_records))
                for r in rows
            ]
        )
        out.append(ChunkAggregate(rows[0].n_records, agg))
    return out


# -- offline sweeps --------------------------------------------------------


def as_predictor(model):
    """Adapt any trained model to a raw-feature-vector -> label callable."""
    if isinstance(model, FirstOrderModel):
        return lambda x: decide(float(model.w @ augment(x)))
    if isinstance(model, Forest):
        return lambda x: rf_predict(model, x)
    if isinstance(model, OnlineLearner):
        return lambda x: model.predict(augment(x)).predicted
    raise TypeError(f"cannot build a predictor from {type(model).__name__}")


def _train_model(trainer, train: Dataset, seed: int):
    if isinstance(trainer, SvmConfig):
        return svm_train(train, replace(trainer, seed=seed))
    if isinstance(trainer, ForestConfig):
        return rf_train(train, replace(trainer, seed=seed))
    if isinstance(trainer, LearnerConfig):
        learner = make_learner(trainer, len(train.schema) + 1)
        x_aug = _augmented_matrix(train.samples)
        for i, s in enumerate(train.samples):
            learner.update(x_aug[i], s.y)
        return learner
    raise TypeError(f"unknown trainer type {type(trainer).__name__}")


def _accuracy(predictor, test: Dataset) -> float:
    hits = sum(1 for s in test.samples if predictor(s.x) == s.y)
    return hits / len(test)


@dataclass(frozen=True)
class SweepRow:
    key: float
    accuracy: MeanStd


def _split_task(task) -> float:
    trainer, data, fraction, split_seed, train_seed = task
    train, test = stratified_split(data, fraction, split_seed)
    model = _train_model(trainer, train, train_seed)
    return _accuracy(as_predictor(model), test)


def split_eval(trainer, data: Dataset, fractions, n_runs: int = DEFAULT_RUNS,
               master_seed: int = 0, n_jobs: int = 1) -> list[SweepRow]:
    """Accuracy of a freshly trained model per train fraction, over seeded splits."""
    fractions = list(fractions)
    if not fractions:
        raise ValueError("fractions must be non-empty")
    rows = []
    for fi, fraction in enumerate(fractions):
        tasks = [
            (trainer, data, fraction,
             derive_seed(master_seed, j), derive_seed(master_seed, j, fi + 1))
            for j in range(n_runs)
        ]
        accs = _map_tasks(_split_task, tasks, n_jobs)
        rows.append(SweepRow(float(fraction), _mean_std(accs)))
    return rows


def _forest_task(task) -> list[float]:
    data, tree_counts, base, split_seed, train_seed = task
    train, test = stratified_split(data, 0.8, split_seed)
    accs = []
    for count in tree_counts:
        forest = rf_train(train, replace(base, n_trees=count, seed=train_seed))
        accs.append(_accuracy(as_predictor(forest), test))
    return accs


def forest_sweep(data: Dataset, tree_counts, n_runs: int = DEFAULT_RUNS,
                 master_seed: int = 0, base: ForestConfig = ForestConfig(),
                 n_jobs: int = 1) -> list[SweepRow]:
    """Accuracy per tree count on a per-run 80:20 stratified split."""
    tree_counts = [int(c) for c in tree_counts]
    if len(set(tree_counts)) != len(tree_counts):
        raise ValueError("duplicate tree counts")
    if any(c < 1 for c in tree_counts):
        raise ValueError("tree counts must be at least 1")
    tasks = [
        (data, tree_counts, base, derive_seed(master_seed, j), derive_seed(master_seed, j, 1))
        for j in range(n_runs)
    ]
    per_run = _map_tasks(_forest_task, tasks, n_jobs)
    return [
        SweepRow(float(count), _mean_std(run[i] for run in per_run))
        for i, count in enumerate(tree_counts)
    ]


def metrics_report(model, test: Dataset) -> Metrics:
    """Confusion-matrix metrics of a trained model on a held-out set."""
    predictor = as_predictor(model)
    preds = [predictor(s.x) for s in test.samples]
    matrix = ConfusionMatrix.from_pairs([s.y for s in test.samples], preds)
    return compute_metrics(matrix)


def confusion_of(model, test: Dataset) -> ConfusionMatrix:
    predictor = as_predictor(model)
    preds = [predictor(s.x) for s in test.samples]
    return ConfusionMatrix.from_pairs([s.y for s in test.samples], preds)
