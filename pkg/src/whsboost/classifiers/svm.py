"""Soft-margin SVM trained on the dual by sequential minimal optimization.

Working pairs are picked with second-order information (maximal violating
``i`` first, then the ``j`` giving the largest objective decrease); training
stops once the KKT gap ``m(alpha) - M(alpha)`` falls below ``tolerance`` or the
iteration budget ``max_passes * n`` runs out.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ..data import Dataset, FeatureSchema
from .base import ClassifierSpec, OneHotEncoder, TrainedClassifier

TAU = 1e-12


def kernel_matrix(A, B, kernel: str, gamma: float) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if kernel == "linear":
        K = A @ B.T
    else:
        K = np.exp(-gamma * cdist(A, B, "sqeuclidean"))
    if not np.all(np.isfinite(K)):
        raise FloatingPointError("non-finite kernel values")
    return K


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int):
    """Return ``(alpha, b, iterations)`` for the dual with kernel matrix ``K``."""
    n = y.size
    y = y.astype(np.float64)
    alpha = np.zeros(n)
    G = -np.ones(n)
    diag = np.diag(K)
    it = 0
    while it < max_iter:
        yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(yG[up])])
        m = yG[i]
        M = yG[low].min()
        if m - M < tol:
            break
        b = m - yG
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a > 0, a, TAU)
        cand = low & (b > 0)
        if not cand.any():
            break
        score = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(score))
        lam = b[j] / a[j]
        lam = min(lam, C - alpha[i] if y[i] > 0 else alpha[i])
        lam = min(lam, alpha[j] if y[j] > 0 else C - alpha[j])
        alpha[i] += y[i] * lam
        alpha[j] -= y[j] * lam
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        G += y * lam * (K[:, i] - K[:, j])
        it += 1
    free = (alpha > TAU) & (alpha < C - TAU)
    yG = -y * G
    if free.any():
        b = float(np.mean(yG[free]))
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        hi = yG[up].max() if up.any() else 0.0
        lo = yG[low].min() if low.any() else 0.0
        b = float((hi + lo) / 2.0)
    return alpha, b, it


class SVMClassifier(TrainedClassifier):
    kind = "svm"

    def __init__(self, schema: FeatureSchema, support, coef, b, kernel, gamma, alpha=None):
        super().__init__(schema)
        self.support = np.atleast_2d(np.asarray(support, dtype=np.float64))
        self.coef = np.asarray(coef, dtype=np.float64)
        self.b = float(b)
        self.kernel = kernel
        self.gamma = float(gamma)
        self.alpha = alpha
        self.encoder = OneHotEncoder(schema)

    def decision_score(self, X) -> np.ndarray:
        Z = self.encoder.transform(X)
        if self.coef.size == 0:
            return np.full(Z.shape[0], self.b)
        return kernel_matrix(Z, self.support, self.kernel, self.gamma) @ self.coef + self.b

    def params(self) -> dict:
        return {"support": self.support.tolist(), "coef": self.coef.tolist(), "b": self.b,
                "kernel": self.kernel, "gamma": self.gamma}

    @classmethod
    def from_params(cls, schema, p):
        width = OneHotEncoder(schema).width
        support = np.asarray(p["support"], dtype=np.float64).reshape(-1, width)
        return cls(schema, support, p["coef"], p["b"], p["kernel"], p["gamma"])


def train_svm(train: Dataset, spec: ClassifierSpec) -> SVMClassifier:
    if train.n == 0:
        raise ValueError("empty training set")
    enc = OneHotEncoder(train.schema)
    Z = enc.transform(train.X)
    y = np.asarray(train.y, dtype=np.float64)
    K = kernel_matrix(Z, Z, spec.kernel, spec.gamma)
    alpha, b, _ = smo_solve(K, y, spec.C, spec.tolerance, spec.max_passes * max(train.n, 1))
    sv = alpha > TAU
    return SVMClassifier(train.schema, Z[sv], alpha[sv] * y[sv], b, spec.kernel, spec.gamma, alpha)
