"""Datasets with mixed continuous/categorical features and +/-1 labels.

Categorical values are stored as integer vocabulary indices inside the same
float matrix as the continuous values, so every downstream routine works on a
single ``(n, m)`` array plus the schema describing each column.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"

# features with a larger share of empty cells are dropped at load time
MISSING_DROP_FRACTION = 0.30


class DataError(ValueError):
    """Raised for malformed datasets, schemas or CSV files."""


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = CONTINUOUS
    vocabulary: tuple[str, ...] = ()
    closed: bool = True

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise DataError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise DataError(f"feature {self.name!r}: duplicate vocabulary entries")
        if self.kind == CONTINUOUS and self.vocabulary:
            raise DataError(f"feature {self.name!r}: continuous features take no vocabulary")

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]
    label_column: str = "label"
    positive_label: str | None = None

    def __post_init__(self):
        if not self.features:
            raise DataError("schema needs at least one feature")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if self.label_column in names:
            raise DataError("label column cannot also be a feature")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def m(self) -> int:
        return len(self.features)

    @property
    def categorical_mask(self) -> np.ndarray:
        return np.array([f.is_categorical for f in self.features], dtype=bool)

    @property
    def continuous_index(self) -> np.ndarray:
        return np.flatnonzero(~self.categorical_mask)

    @property
    def categorical_index(self) -> np.ndarray:
        return np.flatnonzero(self.categorical_mask)

    def drop(self, names: Sequence[str]) -> "FeatureSchema":
        keep = tuple(f for f in self.features if f.name not in set(names))
        return replace(self, features=keep)

    def to_dict(self) -> dict:
        feats = []
        for f in self.features:
            d = {"name": f.name, "kind": f.kind}
            if f.is_categorical:
                d["vocabulary"] = list(f.vocabulary)
                d["closed"] = f.closed
            feats.append(d)
        out = {"label_column": self.label_column, "features": feats}
        if self.positive_label is not None:
            out["positive_label"] = self.positive_label
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureSchema":
        try:
            feats = tuple(
                Feature(
                    name=str(f["name"]),
                    kind=f.get("kind", CONTINUOUS),
                    vocabulary=tuple(str(v) for v in f.get("vocabulary", ())),
                    closed=bool(f.get("closed", True)),
                )
                for f in d["features"]
            )
            return cls(
                features=feats,
                label_column=str(d["label_column"]),
                positive_label=d.get("positive_label"),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"invalid schema: {exc}") from exc


def continuous_schema(m: int, label_column: str = "label") -> FeatureSchema:
    return FeatureSchema(tuple(Feature(f"x{j}") for j in range(m)), label_column)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of ``n`` rows, ``m`` features and +/-1 labels.

    ``X`` holds continuous values as reals and categorical values as vocabulary
    indices. ``label_names`` maps the internal labels back to the source
    strings as ``(positive, negative)``.
    """

    schema: FeatureSchema
    X: np.ndarray
    y: np.ndarray
    label_names: tuple[str, str] = ("1", "-1")
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        y = np.array(self.y, dtype=np.int64, copy=True).ravel()
        if X.ndim != 2:
            X = X.reshape(len(y), -1)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if X.shape[1] != self.schema.m:
            raise DataError(f"{X.shape[1]} columns but schema has {self.schema.m} features")
        if not np.all((y == 1) | (y == -1)):
            raise DataError("labels must be +1 or -1")
        if not np.all(np.isfinite(X)):
            raise DataError("feature values must be finite")
        for j in self.schema.categorical_index:
            col = X[:, j]
            size = len(self.schema.features[j].vocabulary)
            if np.any(col != np.round(col)) or np.any(col < 0) or np.any(col >= size):
                raise DataError(
                    f"feature {self.schema.features[j].name!r}: value outside vocabulary"
                )
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def n_positive(self) -> int:
        return int(np.sum(self.y == 1))

    @property
    def n_negative(self) -> int:
        return int(np.sum(self.y == -1))

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        return Dataset(self.schema, self.X[index], self.y[index], self.label_names, self.meta)

    def with_rows(self, X, y) -> "Dataset":
        return Dataset(self.schema, X, y, self.label_names, self.meta)

    def equals(self, other: "Dataset") -> bool:
        # positive_label only steers ingestion; the mapping itself is label_names
        return (
            self.schema.features == other.schema.features
            and self.schema.label_column == other.schema.label_column
            and self.label_names == other.label_names
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


def concat(first: Dataset, *others: Dataset) -> Dataset:
    X = np.vstack([first.X] + [d.X for d in others])
    y = np.concatenate([first.y] + [d.y for d in others])
    return first.with_rows(X, y)


def weight_vector(values, atol: float = 1e-9) -> np.ndarray:
    """Validate a per-row weight vector: nonnegative, summing to one."""
    w = np.asarray(values, dtype=np.float64).ravel()
    if w.size == 0:
        raise ValueError("weight vector is empty")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    if abs(w.sum() - 1.0) > atol:
        raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
    return w


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def load_schema(path) -> FeatureSchema:
    try:
        with open(path, encoding="utf-8") as fh:
            return FeatureSchema.from_dict(json.load(fh))
    except OSError as exc:
        raise DataError(f"cannot read schema {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"schema {path} is not valid JSON: {exc}") from exc


def save_schema(schema: FeatureSchema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2)
        fh.write("\n")


def _parse_float(cell: str, name: str) -> float:
    try:
        v = float(cell)
    except ValueError as exc:
        raise DataError(f"feature {name!r}: cannot parse {cell!r} as a number") from exc
    if math.isnan(v):
        return math.nan
    if not math.isfinite(v):
        raise DataError(f"feature {name!r}: non-finite value {cell!r}")
    return v


def load_csv_dataset(csv_path, schema_path) -> Dataset:
    """Read a CSV file described by a JSON schema sidecar.

    Features with more than 30% empty cells are dropped. Remaining gaps are
    imputed with the column median (continuous) or mode (categorical). The
    rarer label value becomes +1 unless the schema names ``positive_label``.
    """
    schema = load_schema(schema_path)
    try:
        with open(csv_path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {csv_path}: {exc}") from exc
    if not rows:
        raise DataError(f"{csv_path} is empty")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    expected = set(schema.names) | {schema.label_column}
    if set(header) != expected or len(header) != len(expected):
        missing = sorted(expected - set(header))
        extra = sorted(set(header) - expected)
        raise DataError(f"header does not match schema (missing {missing}, unexpected {extra})")
    pos = {name: i for i, name in enumerate(header)}
    for r in body:
        if len(r) != len(header):
            raise DataError(f"{csv_path}: row with {len(r)} cells, expected {len(header)}")

    labels = [r[pos[schema.label_column]].strip() for r in body]
    if any(lab == "" for lab in labels):
        raise DataError("label column has empty cells")
    counts = Counter(labels)
    if len(counts) != 2:
        raise DataError(f"label column needs exactly 2 distinct values, found {sorted(counts)}")
    if schema.positive_label is not None:
        if schema.positive_label not in counts:
            raise DataError(f"positive_label {schema.positive_label!r} not present")
        positive = schema.positive_label
    else:
        # rarer class is positive; equal counts fall back to sorted order
        positive = sorted(counts, key=lambda v: (counts[v], v))[0]
    negative = next(v for v in counts if v != positive)
    y = np.array([1 if lab == positive else -1 for lab in labels], dtype=np.int64)

    n = len(body)
    columns = []
    features = []
    dropped = []
    for feat in schema.features:
        cells = [r[pos[feat.name]].strip() for r in body]
        missing = [c == "" for c in cells]
        if n and sum(missing) / n > MISSING_DROP_FRACTION:
            dropped.append(feat.name)
            continue
        if feat.is_categorical:
            vocab = list(feat.vocabulary)
            lookup = {v: i for i, v in enumerate(vocab)}
            col = np.empty(n)
            for i, c in enumerate(cells):
                if missing[i]:
                    col[i] = np.nan
                    continue
                if c not in lookup:
                    if feat.closed:
                        raise DataError(f"feature {feat.name!r}: value {c!r} not in vocabulary")
                    lookup[c] = len(vocab)
                    vocab.append(c)
                col[i] = lookup[c]
            feat = replace(feat, vocabulary=tuple(vocab))
            if not vocab:
                raise DataError(f"feature {feat.name!r}: empty vocabulary")
            present = col[~np.isnan(col)].astype(np.int64)
            if np.isnan(col).any():
                mode = int(np.argmax(np.bincount(present, minlength=len(vocab)))) if present.size else 0
                col[np.isnan(col)] = mode
        else:
            col = np.array([math.nan if miss else _parse_float(c, feat.name)
                            for c, miss in zip(cells, missing)])
            if np.isnan(col).any():
                finite = col[~np.isnan(col)]
                col[np.isnan(col)] = np.median(finite) if finite.size else 0.0
        columns.append(col)
        features.append(feat)
    if not features:
        raise DataError("every feature was dropped for missing values")
    out_schema = replace(schema, features=tuple(features))
    X = np.column_stack(columns) if n else np.empty((0, len(features)))
    meta = {"dropped_features": dropped} if dropped else {}
    return Dataset(out_schema, X, y, (positive, negative), meta)


def _format_value(v: float) -> str:
    return repr(float(v))


def write_csv_dataset(data: Dataset, csv_path, schema_path=None) -> None:
    """Write ``data`` as CSV (and optionally its schema) so it reloads identically."""
    schema = data.schema
    if schema.positive_label is None and data.n_positive * 2 == data.n:
        # equal class counts: pin the mapping so a reload cannot flip it
        schema = replace(schema, positive_label=data.label_names[0])
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(schema.names + [schema.label_column])
        for row, label in zip(data.X, data.y):
            cells = []
            for feat, v in zip(schema.features, row):
                cells.append(feat.vocabulary[int(v)] if feat.is_categorical else _format_value(v))
            cells.append(data.label_names[0] if label == 1 else data.label_names[1])
            w.writerow(cells)
    if schema_path is not None:
        save_schema(schema, schema_path)


# ---------------------------------------------------------------------------
# Normalization, splits, partitions
# ---------------------------------------------------------------------------


def minmax_normalize(train: Dataset, others: Sequence[Dataset] = ()):
    """Rescale continuous features to [0, 1] using ranges fitted on ``train``.

    Returns ``(train_scaled, [others_scaled...], warnings)``. A feature that is
    constant on ``train`` maps to 0 everywhere and is listed in the warnings.
    """
    for other in others:
        if other.schema != train.schema:
            raise DataError("datasets must share one schema")
    cont = train.schema.continuous_index
    lo = train.X[:, cont].min(axis=0) if train.n else np.zeros(len(cont))
    hi = train.X[:, cont].max(axis=0) if train.n else np.ones(len(cont))
    span = hi - lo
    constant = span == 0
    notes = [f"feature {train.schema.features[j].name!r} is constant on train"
             for j in cont[constant]]
    for note in notes:
        warnings.warn(note, stacklevel=2)
    safe = np.where(constant, 1.0, span)

    def apply(d: Dataset) -> Dataset:
        X = d.X.copy()
        scaled = (X[:, cont] - lo) / safe
        scaled[:, constant] = 0.0
        X[:, cont] = scaled
        return d.with_rows(X, d.y)

    return apply(train), [apply(d) for d in others], notes


@dataclass(frozen=True)
class Split:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int | None


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(data: Dataset, train_fraction: float, seed) -> Split:
    """Per-class random split keeping ``round(fraction * class size)`` rows in train."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in (1, -1):
        idx = np.flatnonzero(data.y == label)
        if idx.size < 2:
            raise DataError(f"class {label:+d} has fewer than 2 rows")
        k = min(max(_round_half_up(train_fraction * idx.size), 1), idx.size - 1)
        perm = rng.permutation(idx)
        train.append(perm[:k])
        test.append(perm[k:])
    tr = np.sort(np.concatenate(train))
    te = np.sort(np.concatenate(test))
    return Split(tr, te, seed if isinstance(seed, (int, np.integer)) else None)


@dataclass(frozen=True)
class ClassPartition:
    minority: Dataset
    majority: Dataset
    minority_index: np.ndarray
    majority_index: np.ndarray


def partition_by_class(data: Dataset) -> ClassPartition:
    """Split rows into the +1 (minority) and -1 (majority) sets with index maps."""
    pos = np.flatnonzero(data.y == 1)
    neg = np.flatnonzero(data.y == -1)
    if pos.size == 0 or neg.size == 0:
        raise DataError("both classes must be present")
    return ClassPartition(data.subset(pos), data.subset(neg), pos, neg)
