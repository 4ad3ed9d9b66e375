"""Boosting with sampler-built training sets.

Every booster here shares one loop: build an unweighted temporary training set
from the current weights ``D``, fit a base learner on it, score the learner on
the original data with ``D`` (pseudo-loss ``eps``), weight it by
``alpha = 0.5 ln((1 - eps) / eps)`` and up-weight the rows it got wrong.
The boosters differ only in how the temporary set is built:

* ``whsboost_train``   weighted SMOTE on the minority + weighted under-sampling
                       on the majority, exactly ``N`` rows per class;
* ``adaboost_resample_train``  weight-based bootstrap of the original data;
* ``smoteboost_train`` SMOTE to the majority size, then weight-based bootstrap;
* ``hsboost_train``    SMOTE + random under-sampling to ``N`` per class, then
                       weight-based bootstrap.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .classifiers import ClassifierSpec, classifier_from_dict, train_classifier
from .data import Dataset, concat, partition_by_class, uniform_weights, weight_vector
from .distance import VdmTable
from .sampling import (
    DEFAULT_POOL_CONSTANT,
    random_undersample_keep,
    smote_baseline,
    wsmote,
    wusample_keep,
)

FORMAT_NAME = "whsboost-ensemble"
FORMAT_VERSION = 1
EPS_CLAMP = 1e-10


class BoostingError(RuntimeError):
    pass


@dataclass(frozen=True)
class BoostConfig:
    T: int = 20
    N: int | None = None
    k: int = 5
    c: float = DEFAULT_POOL_CONSTANT
    base: ClassifierSpec = field(default_factory=ClassifierSpec)
    error_threshold: float = 0.0
    max_retries: int = 5
    seed: int = 0
    literal_formula: bool = False

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.N is not None and self.N < 1:
            raise ValueError("N must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("c must lie in [0, 1]")
        if not 0.0 <= self.error_threshold < 0.5:
            raise ValueError("error_threshold must lie in [0, 0.5)")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["base"] = self.base.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BoostConfig":
        d = dict(d)
        d["base"] = ClassifierSpec.from_dict(d.get("base", {}))
        return cls(**d)


def balanced_size(n_min: int, n_maj: int) -> int:
    """Default per-class size: the rounded midpoint of the two class sizes."""
    return int(math.floor((n_min + n_maj) / 2 + 0.5))


@dataclass(frozen=True)
class IterationRecord:
    epsilon: float
    alpha: float
    n_positive: int
    n_negative: int
    weight_sum: float
    weight_min: float
    attempts: int


@dataclass
class TrainedEnsemble:
    members: list
    alphas: list
    config: BoostConfig | None = None
    method: str = "whsboost"
    history: list = field(default_factory=list)

    def __len__(self):
        return len(self.members)

    def decision_score(self, X) -> np.ndarray:
        return ensemble_score(self, X)

    def predict(self, X) -> np.ndarray:
        return ensemble_predict(self, X)


# ---------------------------------------------------------------------------
# Boosting arithmetic
# ---------------------------------------------------------------------------


def pseudo_loss(D, predictions, labels) -> float:
    """Weighted misclassification rate ``sum D_i [h(x_i) != y_i] / sum D_i``."""
    D = np.asarray(D, dtype=np.float64)
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if not D.shape == p.shape == y.shape:
        raise ValueError("weights, predictions and labels must have equal length")
    return float(np.sum(D[p != y]) / np.sum(D))


def classifier_weight_alpha(epsilon: float) -> float:
    eps = min(max(float(epsilon), EPS_CLAMP), 1.0 - EPS_CLAMP)
    return 0.5 * math.log((1.0 - eps) / eps)


def update_sample_weights(D, alpha: float, misclassified) -> np.ndarray:
    """Multiply misclassified weights by ``exp(alpha)`` and renormalize."""
    D = np.asarray(D, dtype=np.float64)
    miss = np.asarray(misclassified, dtype=bool)
    if D.shape != miss.shape:
        raise ValueError("mask length must match the weight vector")
    out = np.where(miss, D * math.exp(alpha), D)
    return out / out.sum()


def ensemble_score(ens: TrainedEnsemble, X) -> np.ndarray:
    """``sum_t alpha_t h_t(x)`` with ``h_t(x)`` in {+1, -1}."""
    if not ens.members:
        raise BoostingError("empty ensemble")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    score = np.zeros(X.shape[0])
    for h, a in zip(ens.members, ens.alphas):
        score += a * h.predict(X)
    return score


def ensemble_predict(ens: TrainedEnsemble, X) -> np.ndarray:
    return np.where(ensemble_score(ens, X) >= 0, 1, -1)


def weight_based_resample(data: Dataset, D, seed=None) -> Dataset:
    """Draw ``n`` rows i.i.d. with probabilities ``D`` (a weighted bootstrap)."""
    w = weight_vector(D)
    if w.size != data.n:
        raise ValueError("one weight per row is required")
    rng = np.random.default_rng(seed)
    idx = rng.choice(data.n, size=data.n, replace=True, p=w / w.sum())
    return data.subset(idx)


# ---------------------------------------------------------------------------
# Shared boosting loop
# ---------------------------------------------------------------------------

TrainingSetBuilder = Callable[[np.ndarray, np.random.Generator], Dataset]


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def boost(data: Dataset, config: BoostConfig, vdm: VdmTable | None,
          build: TrainingSetBuilder, method: str) -> TrainedEnsemble:
    """Run the boosting loop with ``build(D, rng)`` producing each temporary set.

    A learner with ``eps >= 0.5`` is discarded and the temporary set redrawn
    from a fresh stream, up to ``max_retries`` times; if all attempts fail the
    ensemble built so far is returned.
    """
    D = uniform_weights(data.n)
    ens = TrainedEnsemble([], [], config, method)
    for t in range(config.T):
        accepted = None
        for attempt in range(config.max_retries + 1):
            rng = _stream(config.seed, t, attempt)
            S = build(D, rng)
            h = train_classifier(config.base, S, vdm, seed=int(rng.integers(2**31)))
            pred = h.predict(data.X)
            eps = pseudo_loss(D, pred, data.y)
            if eps < 0.5:
                accepted = (h, pred, eps, S, attempt + 1)
                break
        if accepted is None:
            break
        h, pred, eps, S, attempts = accepted
        alpha = classifier_weight_alpha(eps)
        D = update_sample_weights(D, alpha, pred != data.y)
        ens.members.append(h)
        ens.alphas.append(alpha)
        ens.history.append(IterationRecord(eps, alpha, S.n_positive, S.n_negative,
                                           float(D.sum()), float(D.min()), attempts))
        if eps < config.error_threshold:
            break
    if not ens.members:
        raise BoostingError("every boosting iteration produced eps >= 0.5")
    return ens


def _check_classes(data: Dataset):
    part = partition_by_class(data)
    if part.minority.n < 2:
        raise ValueError("at least 2 minority rows are required")
    return part


def resolve_N(config: BoostConfig, n_min: int, n_maj: int) -> int:
    N = balanced_size(n_min, n_maj) if config.N is None else config.N
    if not n_min <= N <= n_maj:
        raise ValueError(f"N={N} outside [{n_min}, {n_maj}]")
    return N


def whsboost_train(data: Dataset, config: BoostConfig, vdm: VdmTable | None) -> TrainedEnsemble:
    """Boosting with weighted hybrid sampling: every temporary set is ``N`` + ``N`` rows."""
    part = _check_classes(data)
    N = resolve_N(config, part.minority.n, part.majority.n)

    def build(D, rng):
        di = D[part.minority_index]
        da = D[part.majority_index]
        up = wsmote(part.minority, di / di.sum(), N, config.k, vdm, rng,
                    literal_formula=config.literal_formula)
        keep = wusample_keep(da / da.sum(), N, config.c, rng)
        return concat(up, part.majority.subset(keep))

    return boost(data, replace(config, N=N), vdm, build, "whsboost")


def adaboost_resample_train(data: Dataset, config: BoostConfig, vdm: VdmTable | None) -> TrainedEnsemble:
    _check_classes(data)

    def build(D, rng):
        return weight_based_resample(data, D, rng)

    return boost(data, config, vdm, build, "adaboost")


def _carry_weights(D_min, D_rest, n_synthetic):
    # synthetic rows get the mean minority weight
    syn = np.full(n_synthetic, D_min.mean())
    w = np.concatenate([D_min, syn, D_rest])
    return w / w.sum()


def smote_rebalance(part, D, k, vdm, rng, literal_formula=False):
    """SMOTE the minority up to the majority size; returns ``(rebalanced, weights)``."""
    up = smote_baseline(part.minority, max(part.majority.n, part.minority.n), k, vdm, rng,
                        literal_formula=literal_formula)
    w = _carry_weights(D[part.minority_index], D[part.majority_index], up.n - part.minority.n)
    return concat(up, part.majority), w


def hybrid_rebalance(part, D, N, k, vdm, rng, literal_formula=False):
    """SMOTE up and randomly under-sample down to ``N`` rows per class."""
    up = smote_baseline(part.minority, N, k, vdm, rng, literal_formula=literal_formula)
    keep = random_undersample_keep(part.majority.n, N, rng)
    w = _carry_weights(D[part.minority_index], D[part.majority_index][keep], up.n - part.minority.n)
    return concat(up, part.majority.subset(keep)), w


def smoteboost_train(data: Dataset, config: BoostConfig, vdm: VdmTable | None) -> TrainedEnsemble:
    """SMOTE the minority up to the majority size, then weight-based resampling."""
    part = _check_classes(data)

    def build(D, rng):
        rebalanced, w = smote_rebalance(part, D, config.k, vdm, rng, config.literal_formula)
        return weight_based_resample(rebalanced, w, rng)

    return boost(data, config, vdm, build, "smoteboost")


def hsboost_train(data: Dataset, config: BoostConfig, vdm: VdmTable | None) -> TrainedEnsemble:
    """Hybrid sampling to ``N`` rows per class, then weight-based resampling."""
    part = _check_classes(data)
    N = resolve_N(config, part.minority.n, part.majority.n)

    def build(D, rng):
        rebalanced, w = hybrid_rebalance(part, D, N, config.k, vdm, rng, config.literal_formula)
        return weight_based_resample(rebalanced, w, rng)

    return boost(data, replace(config, N=N), vdm, build, "hsboost")


BOOSTERS = {
    "whsboost": whsboost_train,
    "adaboost": adaboost_resample_train,
    "smoteboost": smoteboost_train,
    "hsboost": hsboost_train,
}


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def ensemble_to_dict(ens: TrainedEnsemble) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "method": ens.method,
        "config": ens.config.to_dict() if ens.config is not None else None,
        "members": [{"alpha": a, "classifier": h.to_dict()} for h, a in zip(ens.members, ens.alphas)],
    }


def ensemble_from_dict(d: dict) -> TrainedEnsemble:
    if d.get("format") != FORMAT_NAME:
        raise ValueError("not a serialized ensemble")
    if d.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported ensemble format version {d.get('version')!r}")
    cfg = BoostConfig.from_dict(d["config"]) if d.get("config") is not None else None
    members = [classifier_from_dict(m["classifier"]) for m in d["members"]]
    alphas = [float(m["alpha"]) for m in d["members"]]
    return TrainedEnsemble(members, alphas, cfg, d.get("method", "whsboost"))


def save_ensemble(ens: TrainedEnsemble, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ensemble_to_dict(ens), fh)


def load_ensemble(path) -> TrainedEnsemble:
    with open(path, encoding="utf-8") as fh:
        return ensemble_from_dict(json.load(fh))
