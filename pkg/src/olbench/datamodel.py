"""Core data types shared by every stage of the benchmark.

Labels are always +1 (the positive class) or -1. Feature vectors are dense
float64 arrays whose length matches the owning schema. Linear models carry
their bias as the last weight, paired with the constant-1 coordinate that
:func:`augment` appends to raw feature vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POSITIVE = 1
NEGATIVE = -1

NUMERIC = "numeric"
BINARY = "binary"

N_FEATURES = 13


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in (NUMERIC, BINARY):
            raise ValueError(f"unknown feature kind: {self.kind!r}")


@dataclass(frozen=True)
class FeatureSchema:
    """Column layout: one numeric lead feature followed by twelve binary flags."""

    features: tuple[FeatureDescriptor, ...]
    label_name: str

    def __post_init__(self) -> None:
        if len(self.features) != N_FEATURES:
            raise ValueError(
                f"schema needs exactly {N_FEATURES} features, got {len(self.features)}"
            )
        if self.features[0].kind != NUMERIC:
            raise ValueError("feature 0 must be numeric")
        for f in self.features[1:]:
            if f.kind != BINARY:
                raise ValueError(f"feature {f.name!r} must be binary")
        names = self.names + (self.label_name,)
        if len(set(names)) != len(names):
            raise ValueError("feature and label names must be unique")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def __len__(self) -> int:
        return len(self.features)


FEATURE_NAMES = (
    "days_symptomatic",
    "vomiting",
    "headache",
    "retro_orbital_pain",
    "rash",
    "abdominal_pain",
    "muscle_bone_pain",
    "high_fever",
    "hemorrhage",
    "ns1_antigen",
    "igm_elisa",
    "igg_elisa",
    "igm_elisa_1",
)
LABEL_NAME = "dengue"

CLINICAL_SCHEMA = FeatureSchema(
    features=tuple(
        FeatureDescriptor(name, NUMERIC if i == 0 else BINARY)
        for i, name in enumerate(FEATURE_NAMES)
    ),
    label_name=LABEL_NAME,
)


@dataclass(frozen=True, eq=False)
class Sample:
    """One labelled observation; ``x`` has the schema's raw (unaugmented) length."""

    x: np.ndarray
    y: int

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("sample features must be a 1-d vector")
        object.__setattr__(self, "x", x)
        if self.y not in (POSITIVE, NEGATIVE):
            raise ValueError(f"label must be +1 or -1, got {self.y}")


@dataclass(eq=False)
class Dataset:
    schema: FeatureSchema
    samples: list[Sample]
    n_pos: int = field(init=False, default=0)
    n_neg: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        d = len(self.schema)
        for s in self.samples:
            if s.x.shape != (d,):
                raise ValueError(
                    f"sample dimension {s.x.shape[0]} does not match schema length {d}"
                )
        self.n_pos = sum(1 for s in self.samples if s.y == POSITIVE)
        self.n_neg = len(self.samples) - self.n_pos

    def __len__(self) -> int:
        return len(self.samples)

    def feature_matrix(self) -> np.ndarray:
        return np.array([s.x for s in self.samples], dtype=np.float64).reshape(
            len(self.samples), len(self.schema)
        )

    def labels(self) -> np.ndarray:
        return np.array([s.y for s in self.samples], dtype=np.int64)

    def subset(self, indices) -> "Dataset":
        return Dataset(self.schema, [self.samples[i] for i in indices])


@dataclass(eq=False)
class FirstOrderModel:
    """Weight vector of length d+1; the last entry is the bias."""

    w: np.ndarray

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1:
            raise ValueError("weights must be a 1-d vector")
        if not np.isfinite(self.w).all():
            raise ValueError("weights must be finite")


@dataclass(eq=False)
class SecondOrderModel:
    """Gaussian weight distribution: mean vector plus full covariance."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        n = self.mu.shape[0]
        if self.mu.ndim != 1 or self.sigma.shape != (n, n):
            raise ValueError("mean must be 1-d and covariance square of matching size")
        self.validate()

    def validate(self, atol: float = 1e-10) -> None:
        """Check finiteness, symmetry within ``atol``, and positive definiteness."""
        if not (np.isfinite(self.mu).all() and np.isfinite(self.sigma).all()):
            raise ValueError("model entries must be finite")
        asym = float(np.max(np.abs(self.sigma - self.sigma.T))) if self.sigma.size else 0.0
        if asym > atol:
            raise ValueError(f"covariance asymmetry {asym:.3e} exceeds {atol:.1e}")
        try:
            np.linalg.cholesky(self.sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not positive definite") from exc


@dataclass(frozen=True)
class UpdateOutcome:
    """Per-step result: prediction and margin come from the pre-update model."""

    predicted: int
    margin: float
    loss: float | None
    updated: bool

    def __post_init__(self) -> None:
        if self.loss is not None and self.loss < 0:
            raise ValueError("loss must be non-negative")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with +1 as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_pairs(cls, truths, predictions) -> "ConfusionMatrix":
        tp = fp = tn = fn = 0
        for y, p in zip(truths, predictions, strict=True):
            if y == POSITIVE:
                if p == POSITIVE:
                    tp += 1
                else:
                    fn += 1
            else:
                if p == POSITIVE:
                    fp += 1
                else:
                    tn += 1
        return cls(tp=tp, fp=fp, tn=tn, fn=fn)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    tp_rate: float
    fp_rate: float
    precision: float
    recall: float
    f_measure: float
    mcc: float
    degenerate: bool = False


def augment(x) -> np.ndarray:
    """Append the constant-1 bias coordinate to a raw feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-d feature vector")
    return np.append(x, 1.0)


def decide(score: float) -> int:
    """Map a decision score to a label; a score of exactly 0 predicts +1."""
    if not math.isfinite(score):
        raise ValueError(f"non-finite decision score: {score}")
    return POSITIVE if score >= 0.0 else NEGATIVE


def compute_metrics(c: ConfusionMatrix) -> Metrics:
    """Derive threshold metrics from a confusion matrix.

    Any ratio with a zero denominator is reported as 0 and flips the
    ``degenerate`` flag; all-one-class predictions are legitimate early in
    online training, so they are not an error.
    """
    total = c.total
    if total == 0:
        raise ValueError("empty confusion matrix")

    degenerate = False

    def ratio(num: float, den: float) -> float:
        nonlocal degenerate
        if den == 0:
            degenerate = True
            return 0.0
        return num / den

    accuracy = (c.tp + c.tn) / total
    tp_rate = ratio(c.tp, c.tp + c.fn)
    fp_rate = ratio(c.fp, c.fp + c.tn)
    precision = ratio(c.tp, c.tp + c.fp)
    recall = tp_rate
    f_measure = ratio(2.0 * precision * recall, precision + recall)

    den_sq = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if den_sq == 0:
        degenerate = True
        mcc = 0.0
    else:
        mcc = (c.tp * c.tn - c.fp * c.fn) / math.sqrt(den_sq)
        # Cauchy-Schwarz bounds |mcc| by 1; clamp float rounding.
        mcc = max(-1.0, min(1.0, mcc))

    return Metrics(
        accuracy=accuracy,
        tp_rate=tp_rate,
        fp_rate=fp_rate,
        precision=precision,
        recall=recall,
        f_measure=f_measure,
        mcc=mcc,
        degenerate=degenerate,
    )
