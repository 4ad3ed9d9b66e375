from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from ..data import FeatureSchema

KINDS = ("knn", "dtree", "bpnn", "svm")


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "knn"
    k: int = 3
    max_depth: int = 10
    min_leaf: int = 1
    hidden_units: int = 8
    epochs: int = 20
    learning_rate: float = 0.1
    init_seed: int = 0
    kernel: str = "rbf"
    C: float = 1.0
    gamma: float = 1.0
    tolerance: float = 1e-3
    max_passes: int = 100

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        if self.kernel not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        for name in ("k", "max_depth", "min_leaf", "hidden_units", "max_passes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.C <= 0 or self.gamma <= 0 or self.learning_rate <= 0 or self.tolerance <= 0:
            raise ValueError("C, gamma, learning_rate and tolerance must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierSpec":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def sign_labels(scores) -> np.ndarray:
    """+1 where the score is >= 0, else -1 (zero goes to the minority)."""
    return np.where(np.asarray(scores) >= 0, 1, -1)


class TrainedClassifier:
    """Fitted model exposing ``decision_score`` (larger = more positive) and ``predict``."""

    kind = ""

    def __init__(self, schema: FeatureSchema):
        self.schema = schema

    def decision_score(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        return sign_labels(self.decision_score(X))

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.kind, "schema": self.schema.to_dict(), "params": self.params()}


class OneHotEncoder:
    """Continuous columns pass through; categorical codes expand to indicator columns."""

    def __init__(self, schema: FeatureSchema):
        self.schema = schema
        self.width = sum(len(f.vocabulary) if f.is_categorical else 1 for f in schema.features)

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if not self.schema.categorical_mask.any():
            return X
        cols = []
        for j, f in enumerate(self.schema.features):
            if f.is_categorical:
                size = len(f.vocabulary)
                codes = X[:, j].astype(np.int64)
                cols.append((codes[:, None] == np.arange(size)[None, :]).astype(np.float64))
            else:
                cols.append(X[:, j:j + 1])
        return np.hstack(cols)
