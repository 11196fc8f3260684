"""Offline baselines: primal linear SVM and a from-scratch random forest.

The SVM is solved in the primal by a seeded stochastic subgradient sweep with
step 1/(lambda * t), lambda = 1/(C * M), returning the averaged iterate. The
forest grows CART trees on seeded bootstraps with Gini splits and per-split
feature subsampling; each tree draws from its own (seed, index) stream so
serial and parallel training coincide.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .datamodel import (
    NEGATIVE,
    POSITIVE,
    Dataset,
    FirstOrderModel,
    augment,
)


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    epochs: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 10
    max_features: int | None = None  # None means ceil(sqrt(d))
    max_depth: int | None = None  # None means unlimited
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be at least 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")


@dataclass(frozen=True)
class Leaf:
    label: int


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Split | Leaf"
    right: "Split | Leaf"


@dataclass(frozen=True)
class Forest:
    trees: tuple["Split | Leaf", ...]
    n_features: int
    config: ForestConfig


def svm_objective(w: np.ndarray, data: Dataset, C: float) -> float:
    """Primal value 0.5*||w||^2 + C * sum of hinge losses on augmented inputs."""
    x = np.hstack([data.feature_matrix(), np.ones((len(data), 1))])
    y = data.labels()
    hinge = np.maximum(0.0, 1.0 - y * (x @ w))
    return 0.5 * float(w @ w) + C * float(hinge.sum())


def svm_train(train: Dataset, cfg: SvmConfig) -> FirstOrderModel:
    """Stochastic subgradient minimization of the primal hinge objective.

    Step size 1/(lambda*t) with lambda = 1/(C*M). Iterates are projected onto
    the ball of radius 1/sqrt(lambda), which contains the optimum, and the
    returned model is the average of the last half of the iterates; both tame
    the huge early steps that plain averaging would fold in.
    """
    if len(train) == 0:
        raise ValueError("training set is empty")
    if train.n_pos == 0 or train.n_neg == 0:
        raise ValueError("training set must contain both classes")

    x = np.hstack([train.feature_matrix(), np.ones((len(train), 1))])
    y = train.labels().astype(np.float64)
    m = len(train)
    lam = 1.0 / (cfg.C * m)
    radius = 1.0 / math.sqrt(lam)

    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(x.shape[1])
    w_sum = np.zeros_like(w)
    n_avg = 0
    burn = (cfg.epochs * m) // 2
    t = 0
    for _epoch in range(cfg.epochs):
        for i in rng.permutation(m):
            t += 1
            # step 1/(lam*t): shrink by (1 - 1/t), add (1/(lam*t)) * y x on margin error
            w *= 1.0 - 1.0 / t
            if y[i] * float(x[i] @ w) < 1.0:
                w += (1.0 / (lam * t)) * y[i] * x[i]
            norm = float(np.linalg.norm(w))
            if norm > radius:
                w *= radius / norm
            if t > burn:
                w_sum += w
                n_avg += 1
    return FirstOrderModel(w_sum / n_avg)


def svm_predict(model: FirstOrderModel, x_raw: np.ndarray) -> int:
    score = float(model.w @ augment(x_raw))
    return POSITIVE if score >= 0.0 else NEGATIVE


def _gini(labels: np.ndarray) -> float:
    n = labels.size
    if n == 0:
        return 0.0
    p = np.count_nonzero(labels == POSITIVE) / n
    return 2.0 * p * (1.0 - p)


def _majority(labels: np.ndarray) -> int:
    return POSITIVE if labels.sum() >= 0 else NEGATIVE


def _best_split(x: np.ndarray, labels: np.ndarray, features) -> tuple[float, int, float] | None:
    best: tuple[float, int, float] | None = None
    n = labels.size
    for f in features:
        values = x[:, f]
        uniq = np.unique(values)
        for thr in (uniq[:-1] + uniq[1:]) / 2.0:
            mask = values <= thr
            n_left = int(mask.sum())
            score = (
                n_left * _gini(labels[mask]) + (n - n_left) * _gini(labels[~mask])
            ) / n
            cand = (score, f, float(thr))
            if best is None or cand < best:
                best = cand
    return best


def _grow(x: np.ndarray, labels: np.ndarray, depth: int, cfg: ForestConfig,
          max_features: int, rng: np.random.Generator) -> Split | Leaf:
    if np.all(labels == labels[0]):
        return Leaf(int(labels[0]))
    if cfg.max_depth is not None and depth >= cfg.max_depth:
        return Leaf(_majority(labels))

    # Walk a seeded feature order, keeping up to max_features splittable ones.
    candidates: list[int] = []
    for f in rng.permutation(x.shape[1]):
        if np.unique(x[:, f]).size > 1:
            candidates.append(int(f))
            if len(candidates) == max_features:
                break
    if not candidates:
        return Leaf(_majority(labels))

    found = _best_split(x, labels, sorted(candidates))
    if found is None:
        return Leaf(_majority(labels))
    _score, feature, threshold = found
    mask = x[:, feature] <= threshold
    left = _grow(x[mask], labels[mask], depth + 1, cfg, max_features, rng)
    right = _grow(x[~mask], labels[~mask], depth + 1, cfg, max_features, rng)
    return Split(feature, threshold, left, right)


def rf_train(train: Dataset, cfg: ForestConfig) -> Forest:
    """Grow the configured number of trees on seeded bootstrap resamples."""
    if len(train) == 0:
        raise ValueError("training set is empty")
    x = train.feature_matrix()
    labels = train.labels()
    d = x.shape[1]
    max_features = cfg.max_features if cfg.max_features is not None else math.ceil(math.sqrt(d))
    if max_features > d:
        raise ValueError(f"max_features {max_features} exceeds feature count {d}")

    trees = []
    for i in range(cfg.n_trees):
        rng = np.random.default_rng([cfg.seed, i])
        if cfg.bootstrap:
            idx = rng.integers(0, len(train), size=len(train))
        else:
            idx = np.arange(len(train))
        trees.append(_grow(x[idx], labels[idx], 0, cfg, max_features, rng))
    return Forest(tuple(trees), d, cfg)


def tree_predict(node: Split | Leaf, x_raw: np.ndarray) -> int:
    while isinstance(node, Split):
        node = node.left if x_raw[node.feature] <= node.threshold else node.right
    return node.label


def rf_predict(forest: Forest, x_raw: np.ndarray) -> int:
    """Majority vote over the trees; an even split predicts +1."""
    votes = sum(tree_predict(t, x_raw) for t in forest.trees)
    return POSITIVE if votes >= 0 else NEGATIVE


# -- snapshots ------------------------------------------------------------


def _tree_payload(node: Split | Leaf) -> dict:
    if isinstance(node, Leaf):
        return {"label": node.label}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _tree_payload(node.left),
        "right": _tree_payload(node.right),
    }


def _tree_restore(payload: dict) -> Split | Leaf:
    if "label" in payload:
        return Leaf(int(payload["label"]))
    return Split(
        int(payload["feature"]),
        float(payload["threshold"]),
        _tree_restore(payload["left"]),
        _tree_restore(payload["right"]),
    )


def svm_snapshot(model: FirstOrderModel, cfg: SvmConfig) -> dict:
    return {
        "algorithm": "svm",
        "config": asdict(cfg),
        "model": {"kind": "first", "w": model.w.tolist()},
    }


def forest_snapshot(forest: Forest) -> dict:
    return {
        "algorithm": "forest",
        "config": asdict(forest.config),
        "model": {
            "kind": "forest",
            "n_features": forest.n_features,
            "trees": [_tree_payload(t) for t in forest.trees],
        },
    }


def offline_from_snapshot(snap: dict) -> FirstOrderModel | Forest:
    if snap["algorithm"] == "svm":
        return FirstOrderModel(np.array(snap["model"]["w"], dtype=np.float64))
    if snap["algorithm"] == "forest":
        cfg = ForestConfig(**snap["config"])
        trees = tuple(_tree_restore(t) for t in snap["model"]["trees"])
        return Forest(trees, int(snap["model"]["n_features"]), cfg)
    raise ValueError(f"unknown offline snapshot tag {snap['algorithm']!r}")


def snapshot_json(snap: dict) -> str:
    return json.dumps(snap)
