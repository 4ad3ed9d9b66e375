"""Metrics, the Wilcoxon signed-rank test, the synthetic data generator and the
repeated train/test experiment runner."""

from __future__ import annotations

import itertools
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

from .classifiers import ClassifierSpec, train_classifier
from .data import (
    DataError,
    Dataset,
    concat,
    continuous_schema,
    minmax_normalize,
    partition_by_class,
    stratified_split,
)
from .distance import VdmTable, build_vdm_table
from .ensemble import BOOSTERS, BoostConfig
from .sampling import smote_baseline

DEFAULT_BETA = 3.0
EXACT_WILCOXON_MAX_N = 12

# ---------------------------------------------------------------------------
# Confusion matrix and metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    TP: int
    FN: int
    FP: int
    TN: int


def confusion_matrix(predictions, truths) -> ConfusionMatrix:
    p = np.asarray(predictions).ravel()
    t = np.asarray(truths).ravel()
    if p.shape != t.shape:
        raise ValueError("predictions and truths must have equal length")
    if p.size == 0:
        raise ValueError("empty input")
    pos = t == 1
    return ConfusionMatrix(
        TP=int(np.sum(pos & (p == 1))),
        FN=int(np.sum(pos & (p != 1))),
        FP=int(np.sum(~pos & (p == 1))),
        TN=int(np.sum(~pos & (p != 1))),
    )


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    recall: float
    precision: float
    f_beta: float
    beta: float
    auc: float | None = None


def f_beta_score(recall: float, precision: float, beta: float = DEFAULT_BETA) -> float:
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0:
        return 0.0
    return (1 + b2) * recall * precision / denom


def compute_metrics(cm: ConfusionMatrix, beta: float = DEFAULT_BETA, auc: float | None = None) -> MetricReport:
    if cm.TP + cm.FN == 0 or cm.FP + cm.TN == 0:
        raise ValueError("both classes must be present among the truths")
    n = cm.TP + cm.FN + cm.FP + cm.TN
    recall = cm.TP / (cm.TP + cm.FN)
    precision = cm.TP / (cm.TP + cm.FP) if cm.TP + cm.FP else 0.0
    return MetricReport(
        accuracy=(cm.TP + cm.TN) / n,
        recall=recall,
        precision=precision,
        f_beta=f_beta_score(recall, precision, beta),
        beta=beta,
        auc=auc,
    )


def roc_auc(scores, truths) -> float:
    """Mann-Whitney AUC; tied scores share their midrank (a tie counts 1/2)."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    t = np.asarray(truths).ravel()
    if s.shape != t.shape:
        raise ValueError("scores and truths must have equal length")
    pos = t == 1
    n_pos = int(pos.sum())
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(s)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WilcoxonResult:
    n_effective: int
    W_plus: float
    W_minus: float
    Z: float
    p_two_sided: float
    rank_basis: str
    method: str
    p_normal: float

    @property
    def marker(self) -> str:
        return "b" if self.rank_basis == "negative" else "c"


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _exact_lower_tail(ranks: np.ndarray, w: float) -> float:
    """P(W+ <= w) under the null, enumerating all 2^n sign patterns."""
    n = ranks.size
    signs = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    w_plus = signs @ ranks
    return float(np.mean(w_plus <= w + 1e-9))


def wilcoxon_signed_rank(a, b, exact: bool | None = None, correction: bool = True) -> WilcoxonResult:
    """Paired two-sided test on ``d = a - b``.

    Zero differences are dropped and ``|d|`` gets midranks. The statistic is
    ``min(W+, W-)``; ``Z`` uses the tie-corrected variance and, unless
    ``correction=False``, moves ``W`` half a unit toward the null mean.
    Up to 12 non-zero pairs the p-value comes from the exact permutation
    distribution unless ``exact=False``.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise ValueError("all differences are zero")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    _, ties = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(ties ** 3 - ties) / 48.0
    dev = w - n * (n + 1) / 4.0  # never positive since w is the smaller sum
    if correction:
        dev = min(dev + 0.5, 0.0)
    z = dev / math.sqrt(var) if var > 0 else 0.0
    p_normal = min(1.0, 2.0 * _normal_cdf(z))
    if exact is None:
        exact = n <= EXACT_WILCOXON_MAX_N
    if exact:
        p = min(1.0, 2.0 * _exact_lower_tail(ranks, w))
    else:
        p = p_normal
    basis = "negative" if w_minus < w_plus else "positive"
    return WilcoxonResult(n, w_plus, w_minus, z, p, basis, "exact" if exact else "normal", p_normal)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationSpec:
    n_total: int = 1000
    p: int = 25
    p0: int = 8
    minority_fraction: float = 0.10
    oversample_pool: int = 5000
    seed: int = 0

    def __post_init__(self):
        if self.n_total < 2:
            raise ValueError("n_total must be >= 2")
        if not 1 <= self.p0 <= self.p:
            raise ValueError("need 1 <= p0 <= p")
        if not 0.0 < self.minority_fraction <= 0.5:
            raise ValueError("minority_fraction must lie in (0, 0.5]")
        if self.oversample_pool < self.n_total:
            raise ValueError("oversample_pool must be >= n_total")


def simulation_pool(spec: SimulationSpec):
    """Draw the candidate pool: ``(X_pool, beta, effective, labels, rng)``.

    ``beta`` is a length-``p`` vector that is zero outside ``effective``.
    """
    rng = np.random.default_rng(spec.seed)
    X = rng.standard_normal((spec.oversample_pool, spec.p))
    effective = np.sort(rng.choice(spec.p, size=spec.p0, replace=False))
    beta = np.zeros(spec.p)
    beta[effective] = rng.standard_normal(spec.p0)
    labels = np.where(X @ beta >= 0, 1, -1)
    return X, beta, effective, labels, rng


def simulate_dataset(spec: SimulationSpec) -> Dataset:
    """Linear-threshold labels on standard normal features, subsampled to a set imbalance."""
    X, beta, effective, labels, rng = simulation_pool(spec)
    n_pos = int(np.sum(labels == 1))
    rare = 1 if n_pos <= labels.size - n_pos else -1
    n_min = int(math.floor(spec.minority_fraction * spec.n_total + 0.5))
    n_maj = spec.n_total - n_min
    rare_idx = np.flatnonzero(labels == rare)
    common_idx = np.flatnonzero(labels != rare)
    if rare_idx.size < n_min or common_idx.size < n_maj:
        raise DataError(
            f"pool of {spec.oversample_pool} rows has {rare_idx.size}/{common_idx.size} "
            f"rows per label; need {n_min}/{n_maj}, use a larger oversample_pool")
    chosen = np.sort(np.concatenate([
        rng.choice(rare_idx, size=n_min, replace=False),
        rng.choice(common_idx, size=n_maj, replace=False),
    ]))
    y = np.where(labels[chosen] == rare, 1, -1)
    if rare == -1:
        # keep y = sgn(x . beta) true for the relabelled classes
        beta = -beta
    meta = {
        "beta": beta.tolist(),
        "effective_features": effective.tolist(),
        "seed": spec.seed,
        "minority_fraction": spec.minority_fraction,
    }
    return Dataset(continuous_schema(spec.p), X[chosen], y, ("1", "-1"), meta)


# ---------------------------------------------------------------------------
# Tuning and experiments
# ---------------------------------------------------------------------------


def vdm_for(train: Dataset) -> VdmTable | None:
    if len(train.schema.categorical_index) == 0:
        return None
    return build_vdm_table(train)


def grid_search_tune(tuning_data: Dataset, grid, seed=0, smote_k: int = 5) -> ClassifierSpec:
    """Pick the grid entry with the best verification accuracy.

    80 % of ``tuning_data`` (stratified) is SMOTE-balanced and used for fitting,
    the remaining 20 % for scoring; ties go to the earlier entry.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty grid")
    split = stratified_split(tuning_data, 0.8, seed)
    train = tuning_data.subset(split.train_indices)
    verify = tuning_data.subset(split.test_indices)
    vdm = vdm_for(train)
    part = partition_by_class(train)
    balanced = train
    if part.minority.n < part.majority.n:
        up = smote_baseline(part.minority, part.majority.n, smote_k, vdm, seed)
        balanced = concat(up, part.majority)
    best, best_acc = grid[0], -1.0
    for spec in grid:
        h = train_classifier(spec, balanced, vdm, seed=seed)
        acc = float(np.mean(h.predict(verify.X) == verify.y))
        if acc > best_acc:
            best, best_acc = spec, acc
    return best


PIPELINE_KINDS = ("none", "smote", "adaboost", "smoteboost", "hsboost", "whsboost")


@dataclass(frozen=True)
class Pipeline:
    """A named (sampler or booster, configuration) pair.

    ``none`` fits the base classifier on the raw training data, ``smote``
    fits it after SMOTE-balancing the minority; the rest are boosters.
    """

    name: str
    kind: str
    config: BoostConfig = field(default_factory=BoostConfig)

    def __post_init__(self):
        if self.kind not in PIPELINE_KINDS:
            raise ValueError(f"unknown pipeline kind {self.kind!r}")


RESULT_COLUMNS = ("dataset", "pipeline", "base_classifier", "repetition", "split_seed",
                  "recall", "precision", "f_beta", "auc", "wallclock_ms", "error")
METRICS = ("recall", "precision", "f_beta", "auc")


def derive_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=key).generate_state(1)[0])


def fit_pipeline(pipe: Pipeline, train: Dataset, vdm: VdmTable | None, seed: int):
    """Fit ``pipe`` on ``train``; the result exposes ``decision_score``."""
    cfg = pipe.config
    if pipe.kind == "none":
        return train_classifier(cfg.base, train, vdm, seed=seed)
    if pipe.kind == "smote":
        part = partition_by_class(train)
        up = smote_baseline(part.minority, max(part.majority.n, part.minority.n), cfg.k, vdm, seed)
        balanced = concat(up, part.majority)
        return train_classifier(cfg.base, balanced, vdm, seed=seed)
    cfg = replace(cfg, seed=seed)
    return BOOSTERS[pipe.kind](train, cfg, vdm)


def _run_repetition(data: Dataset, pipelines, r: int, train_fraction: float, beta: float,
                    seed: int, dataset_name: str, record_timing: bool, normalize: bool):
    split_seed = derive_seed(seed, r, 0)
    fit_seed = derive_seed(seed, r, 1)
    split = stratified_split(data, train_fraction, split_seed)
    train, test = data.subset(split.train_indices), data.subset(split.test_indices)
    if normalize:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            train, (test,), _ = minmax_normalize(train, [test])
    vdm = vdm_for(train)
    rows = []
    for pipe in pipelines:
        row = {"dataset": dataset_name, "pipeline": pipe.name,
               "base_classifier": pipe.config.base.kind, "repetition": r,
               "split_seed": split_seed, "wallclock_ms": "", "error": ""}
        start = time.perf_counter()
        try:
            model = fit_pipeline(pipe, train, vdm, fit_seed)
            score = model.decision_score(test.X)
            pred = np.where(score >= 0, 1, -1)
            rep = compute_metrics(confusion_matrix(pred, test.y), beta, roc_auc(score, test.y))
            row.update(recall=rep.recall, precision=rep.precision, f_beta=rep.f_beta, auc=rep.auc)
        except Exception as exc:  # one failing pipeline must not sink the run
            row.update({m: float("nan") for m in METRICS})
            row["error"] = f"{type(exc).__name__}: {exc}"
        if record_timing:
            row["wallclock_ms"] = round((time.perf_counter() - start) * 1000.0, 3)
        rows.append(row)
    return rows


@dataclass
class ExperimentResult:
    rows: list
    summary: dict


def summarize(rows, pipelines=None) -> dict:
    names = list(dict.fromkeys(r["pipeline"] for r in rows)) if pipelines is None else \
        [p.name for p in pipelines]
    out = {}
    for name in names:
        mine = [r for r in rows if r["pipeline"] == name]
        ok = [r for r in mine if not r["error"]]
        entry = {"repetitions": len(mine), "failures": len(mine) - len(ok),
                 "errors": sorted({r["error"] for r in mine if r["error"]})}
        for m in METRICS:
            vals = np.array([r[m] for r in ok], dtype=np.float64)
            entry[f"{m}_mean"] = float(vals.mean()) if vals.size else None
            entry[f"{m}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else (0.0 if vals.size else None)
        out[name] = entry
    return out


def run_experiment(data: Dataset, pipelines, repetitions: int = 50, train_fraction: float = 0.7,
                   beta: float = DEFAULT_BETA, seed: int = 0, dataset_name: str = "data",
                   workers: int = 1, record_timing: bool = False,
                   normalize: bool = True) -> ExperimentResult:
    """Repeated stratified train/test evaluation of several pipelines.

    Every pipeline sees the same split in repetition ``r`` (a paired design).
    Min-max normalization (unless ``normalize`` is off) and VDM tables are
    fitted on the training side only.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    pipelines = list(pipelines)
    if len({p.name for p in pipelines}) != len(pipelines):
        raise ValueError("pipeline names must be unique")
    args = [(data, pipelines, r, train_fraction, beta, seed, dataset_name, record_timing, normalize)
            for r in range(repetitions)]
    if workers > 1 and repetitions > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_repetition, *zip(*args)))
    else:
        chunks = [_run_repetition(*a) for a in args]
    rows = [row for chunk in chunks for row in chunk]
    summary = summarize(rows, pipelines)
    if data.meta.get("beta") is not None:
        summary = {"pipelines": summary, "simulation": dict(data.meta)}
    else:
        summary = {"pipelines": summary}
    return ExperimentResult(rows, summary)


def paired_values(rows, a: str, b: str, metric: str = "f_beta", dataset: str | None = None):
    """Metric values of pipelines ``a`` and ``b`` matched on (dataset, repetition).

    Raises ``ValueError`` if the pairs were not run on the same splits.
    """
    def index(name):
        return {(r["dataset"], int(r["repetition"])): r for r in rows
                if r["pipeline"] == name and (dataset is None or r["dataset"] == dataset)}

    ia, ib = index(a), index(b)
    if set(ia) != set(ib):
        raise ValueError(f"pipelines {a!r} and {b!r} cover different repetitions")
    keys = sorted(ia)
    for k in keys:
        if str(ia[k]["split_seed"]) != str(ib[k]["split_seed"]):
            raise ValueError(f"unpaired runs: split seeds differ at {k}")
    va = np.array([float(ia[k][metric]) for k in keys])
    vb = np.array([float(ib[k][metric]) for k in keys])
    ok = np.isfinite(va) & np.isfinite(vb)
    return va[ok], vb[ok]
