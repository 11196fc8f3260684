"""Dataset loading, cleaning, splitting, and synthesis for the clinical schema.

The on-disk format is plain UTF-8 CSV whose first row is exactly the
14-column header (13 features plus the ``dengue`` label). Feature cells hold
decimal numerals, an empty cell means missing, and the label is 1 or 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datamodel import (
    CLINICAL_SCHEMA,
    NEGATIVE,
    POSITIVE,
    Dataset,
    FeatureSchema,
    Sample,
)

CSV_COLUMNS = CLINICAL_SCHEMA.names + (CLINICAL_SCHEMA.label_name,)

IMPUTE_NUMERIC = ("median", "zero")
IMPUTE_BINARY = ("zero", "mode")


class SchemaError(ValueError):
    """The file does not match the expected column layout."""


class ParseError(ValueError):
    """A cell could not be interpreted; the message names the row and column."""


@dataclass(frozen=True)
class ImputePolicy:
    numeric: str = "median"
    binary: str = "zero"

    def __post_init__(self) -> None:
        if self.numeric not in IMPUTE_NUMERIC:
            raise ValueError(f"numeric policy must be one of {IMPUTE_NUMERIC}")
        if self.binary not in IMPUTE_BINARY:
            raise ValueError(f"binary policy must be one of {IMPUTE_BINARY}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the planted-rule generator standing in for real records.

    ``separation`` is the minimum signed score of the planted linear rule on
    every sample before label flipping; the rule thresholds the count of
    active binary features at 6, so separations above 6 are unattainable.
    """

    n_pos: int
    n_neg: int
    flip_rate: float = 0.0
    seed: int = 0
    separation: float = 1.0

    def __post_init__(self) -> None:
        if self.n_pos < 1 or self.n_neg < 1:
            raise ValueError("n_pos and n_neg must both be at least 1")
        if not 0.0 <= self.flip_rate < 1.0:
            raise ValueError("flip_rate must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0.0 < self.separation <= 6.0:
            raise ValueError("separation must lie in (0, 6]")


def _parse_cell(raw: str, line: int, column: str) -> float | None:
    text = raw.strip()
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise ParseError(
            f"row {line}: column {column!r}: non-numeric value {raw!r}"
        ) from None


def load_csv(
    path,
    policy: ImputePolicy = ImputePolicy(),
    normalize: bool = True,
) -> Dataset:
    """Load, impute, validate, and (optionally) min-max normalize a CSV file.

    Missing cells are imputed per ``policy`` before normalization. The numeric
    lead feature is rescaled to [0, 1] over the loaded file; binary features
    must be 0 or 1; the label column maps {1, 0} to {+1, -1}.
    """
    schema = CLINICAL_SCHEMA
    expected = list(CSV_COLUMNS)
    path = Path(path)

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration:
            raise SchemaError("empty file") from None
        if header != expected:
            got = set(header)
            for col in expected:
                if col not in got:
                    raise SchemaError(f"missing column {col!r}")
            for col in header:
                if col not in expected:
                    raise SchemaError(f"unknown column {col!r}")
            raise SchemaError(
                f"column order mismatch: expected {','.join(expected)}"
            )

        raw_rows: list[list[float | None]] = []
        raw_labels: list[int] = []
        line = 1
        for row in reader:
            line += 1
            if not any(cell.strip() for cell in row):
                continue
            if len(row) != len(expected):
                raise ParseError(
                    f"row {line}: expected {len(expected)} cells, got {len(row)}"
                )
            values: list[float | None] = []
            for idx, name in enumerate(schema.names):
                v = _parse_cell(row[idx], line, name)
                if v is not None and idx > 0 and v not in (0.0, 1.0):
                    raise ParseError(
                        f"row {line}: column {name!r}: binary value must be 0 or 1, got {row[idx]!r}"
                    )
                values.append(v)
            label = _parse_cell(row[-1], line, schema.label_name)
            if label is None:
                raise ParseError(f"row {line}: column {schema.label_name!r}: missing label")
            if label not in (0.0, 1.0):
                raise ParseError(
                    f"row {line}: column {schema.label_name!r}: label must be 1 or 0, got {row[-1]!r}"
                )
            raw_rows.append(values)
            raw_labels.append(POSITIVE if label == 1.0 else NEGATIVE)

    if not raw_rows:
        raise SchemaError("empty dataset")

    x = _impute(raw_rows, policy)
    if normalize:
        lo = x[:, 0].min()
        hi = x[:, 0].max()
        x[:, 0] = (x[:, 0] - lo) / (hi - lo) if hi > lo else 0.0

    samples = [Sample(x[i], raw_labels[i]) for i in range(x.shape[0])]
    return Dataset(schema, samples)


def _impute(rows: list[list[float | None]], policy: ImputePolicy) -> np.ndarray:
    n = len(rows)
    d = len(rows[0])
    out = np.zeros((n, d), dtype=np.float64)
    for j in range(d):
        col = [row[j] for row in rows]
        present = [v for v in col if v is not None]
        if j == 0:
            fill = float(np.median(present)) if present and policy.numeric == "median" else 0.0
        elif policy.binary == "mode" and present:
            ones = sum(1 for v in present if v == 1.0)
            fill = 1.0 if ones * 2 > len(present) else 0.0
        else:
            fill = 0.0
        for i, v in enumerate(col):
            out[i, j] = fill if v is None else v
    return out


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset in the exact on-disk CSV format (lossless float repr)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for s in dataset.samples:
            row = [repr(float(s.x[0]))]
            row.extend(str(int(v)) for v in s.x[1:])
            row.append("1" if s.y == POSITIVE else "0")
            writer.writerow(row)


def stratified_split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded per-class split; each class sends floor(fraction * count) to train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    pos_idx = [i for i, s in enumerate(data.samples) if s.y == POSITIVE]
    neg_idx = [i for i, s in enumerate(data.samples) if s.y == NEGATIVE]
    if not pos_idx or not neg_idx:
        raise ValueError("both classes must be non-empty")

    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for idx in (pos_idx, neg_idx):
        n_train = math.floor(train_fraction * len(idx))
        if n_train == 0:
            raise ValueError(
                f"train_fraction {train_fraction} leaves a class with no training samples"
            )
        perm = rng.permutation(len(idx))
        train_idx.extend(idx[p] for p in perm[:n_train])
        test_idx.extend(idx[p] for p in perm[n_train:])

    return data.subset(sorted(train_idx)), data.subset(sorted(test_idx))


# Planted rule: sum of the 12 binary flags thresholded at 6; the numeric
# feature and the bias trailer carry weights 0 and -6.
_POS_BIAS = 0.75
_NEG_BIAS = 0.25
_MAX_DRAWS = 100_000


def planted_rule() -> np.ndarray:
    """Augmented weight vector of the generator's separating rule."""
    w = np.ones(14, dtype=np.float64)
    w[0] = 0.0
    w[13] = -6.0
    return w


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Draw a dataset that the planted rule separates with the requested margin.

    Labels are exact class counts before flipping; each label is then flipped
    independently with probability ``flip_rate``. Deterministic given the seed.
    """
    rng = np.random.default_rng(spec.seed)
    xs: list[np.ndarray] = []
    ys: list[int] = []
    for label, count, bias in (
        (POSITIVE, spec.n_pos, _POS_BIAS),
        (NEGATIVE, spec.n_neg, _NEG_BIAS),
    ):
        for _ in range(count):
            for _attempt in range(_MAX_DRAWS):
                x = np.empty(13, dtype=np.float64)
                x[0] = rng.random()
                x[1:] = (rng.random(12) < bias).astype(np.float64)
                score = float(x[1:].sum()) - 6.0
                if label * score >= spec.separation:
                    break
            else:
                raise RuntimeError("rejection sampling failed to reach the margin")
            xs.append(x)
            ys.append(label)

    n = len(ys)
    flips = rng.random(n) < spec.flip_rate
    samples = [
        Sample(xs[i], -ys[i] if flips[i] else ys[i]) for i in range(n)
    ]
    return Dataset(CLINICAL_SCHEMA, samples)
