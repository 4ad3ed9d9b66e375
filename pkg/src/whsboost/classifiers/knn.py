from __future__ import annotations

import numpy as np

from ..data import Dataset, FeatureSchema
from ..distance import VdmTable, empty_vdm, neighbor_order, squared_distances
from .base import TrainedClassifier

# rows of queries per distance block
_CHUNK = 512


class KNNClassifier(TrainedClassifier):
    """Majority vote over the k nearest training rows under the mixed distance."""

    kind = "knn"

    def __init__(self, schema: FeatureSchema, X, y, k: int, vdm: VdmTable | None):
        super().__init__(schema)
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.k = min(int(k), self.X.shape[0])
        self.vdm = vdm

    def neighbors(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        out = np.empty((Q.shape[0], self.k), dtype=np.int64)
        for start in range(0, Q.shape[0], _CHUNK):
            D = squared_distances(Q[start:start + _CHUNK], self.X, self.schema, self.vdm)
            out[start:start + _CHUNK] = neighbor_order(D, self.k)
        return out

    def decision_score(self, Q) -> np.ndarray:
        votes = self.y[self.neighbors(Q)]
        return np.sum(votes == 1, axis=1) / self.k - 0.5

    def params(self) -> dict:
        return {
            "k": self.k,
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "vdm": (self.vdm or empty_vdm()).to_dict(),
        }

    @classmethod
    def from_params(cls, schema, p):
        return cls(schema, np.array(p["X"], dtype=np.float64).reshape(-1, schema.m), p["y"],
                   p["k"], VdmTable.from_dict(p["vdm"]))


def train_knn(train: Dataset, k: int, vdm: VdmTable | None) -> KNNClassifier:
    if train.n == 0:
        raise ValueError("empty training set")
    if k < 1:
        raise ValueError("k must be >= 1")
    return KNNClassifier(train.schema, train.X, train.y, k, vdm)
