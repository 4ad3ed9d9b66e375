"""One-hidden-layer network with logistic units, trained by per-sample
backpropagation on the squared error ``0.5 * (o - t)^2`` with targets in {0, 1}."""

from __future__ import annotations

import numpy as np

from ..data import Dataset, FeatureSchema
from .base import OneHotEncoder, TrainedClassifier


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def init_params(n_in: int, n_hidden: int, rng: np.random.Generator) -> dict:
    u = lambda *shape: rng.uniform(-0.5, 0.5, size=shape)
    return {"W1": u(n_hidden, n_in), "b1": u(n_hidden), "w2": u(n_hidden), "b2": u(1)}


def forward(params: dict, X):
    X = np.atleast_2d(X)
    H = sigmoid(X @ params["W1"].T + params["b1"])
    o = sigmoid(H @ params["w2"] + params["b2"][0])
    return H, o


def loss_and_grad(params: dict, X, t):
    """Summed squared-error loss over rows of ``X`` and its gradient."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    H, o = forward(params, X)
    err = o - t
    loss = 0.5 * float(np.sum(err**2))
    d_out = err * o * (1.0 - o)
    d_hidden = d_out[:, None] * params["w2"][None, :] * H * (1.0 - H)
    grad = {
        "W1": d_hidden.T @ X,
        "b1": d_hidden.sum(axis=0),
        "w2": H.T @ d_out,
        "b2": np.array([d_out.sum()]),
    }
    return loss, grad


class BPNNClassifier(TrainedClassifier):
    kind = "bpnn"

    def __init__(self, schema: FeatureSchema, params: dict, loss_history=()):
        super().__init__(schema)
        self.params_ = params
        self.encoder = OneHotEncoder(schema)
        self.loss_history = list(loss_history)

    def decision_score(self, X) -> np.ndarray:
        _, o = forward(self.params_, self.encoder.transform(X))
        return o - 0.5

    def params(self) -> dict:
        return {k: v.tolist() for k, v in self.params_.items()}

    @classmethod
    def from_params(cls, schema, p):
        return cls(schema, {k: np.asarray(v, dtype=np.float64) for k, v in p.items()})


def train_bpnn(train: Dataset, hidden_units: int = 8, epochs: int = 20,
               learning_rate: float = 0.1, seed=None) -> BPNNClassifier:
    if train.n == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(seed)
    enc = OneHotEncoder(train.schema)
    X = enc.transform(train.X)
    t = (np.asarray(train.y) == 1).astype(np.float64)
    params = init_params(X.shape[1], hidden_units, rng)
    history = []
    for _ in range(epochs):
        for i in rng.permutation(train.n):
            _, g = loss_and_grad(params, X[i:i + 1], t[i:i + 1])
            for name in params:
                params[name] -= learning_rate * g[name]
        _, o = forward(params, X)
        history.append(0.5 * float(np.sum((o - t) ** 2)))
    return BPNNClassifier(train.schema, params, history)
