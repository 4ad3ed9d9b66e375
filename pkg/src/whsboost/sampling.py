"""Weighted and unweighted re-balancing samplers.

``wsmote`` spreads synthetic minority points over anchors in proportion to
their boosting weights; ``wusample`` removes majority rows preferentially from
a low-weight candidate pool. ``smote_baseline``, ``random_undersample`` and
``hybrid_sample_baseline`` are the unweighted counterparts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, concat, uniform_weights, weight_vector
from .distance import VdmTable, neighbor_order, squared_distances

DEFAULT_POOL_CONSTANT = 0.5


def _round_half_away(x):
    # small slack absorbs products like 10 * 0.35 = 3.4999999999999996
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5 + 1e-9).astype(np.int64)


@dataclass(frozen=True)
class SynthesisPlan:
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def allocate_synthesis_counts(weights, n_syn: int) -> SynthesisPlan:
    """Per-anchor synthetic counts ``round(n_syn * w_i)``, repaired to total ``n_syn``.

    A deficit is added one-per-row to the highest weights; a surplus is removed
    one-per-row from the lowest weights that still have a nonzero count. Equal
    weights are ordered by row index (descending order is index-stable, so the
    low end is walked from the highest index).
    """
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise ValueError("need at least one anchor")
    if n_syn < 0:
        raise ValueError("n_syn must be >= 0")
    if n_syn > 0 and not np.any(w > 0):
        raise ValueError("all-zero weights cannot allocate samples")
    counts = _round_half_away(n_syn * w)
    order = np.argsort(-w, kind="stable")
    gap = n_syn - int(counts.sum())
    if gap > 0:
        # deficit is bounded by n/2 but loop anyway in case of degenerate input
        i = 0
        while gap > 0:
            counts[order[i % w.size]] += 1
            gap -= 1
            i += 1
    elif gap < 0:
        for idx in order[::-1]:
            if gap == 0:
                break
            if counts[idx] > 0:
                counts[idx] -= 1
                gap += 1
    return SynthesisPlan(counts)


def _vote(values: np.ndarray, anchor_value: float) -> float:
    uniq, freq = np.unique(values, return_counts=True)
    best = uniq[freq == freq.max()]
    if anchor_value in best:
        return anchor_value
    # tie not involving the anchor: lowest code wins
    return float(best.min())


def _synthesize(minority: Dataset, counts: np.ndarray, k: int, vdm: VdmTable | None,
                rng: np.random.Generator, literal_formula: bool):
    X = minority.X
    n = minority.n
    schema = minority.schema
    cont = schema.continuous_index
    cat = schema.categorical_index
    active = np.flatnonzero(counts > 0)
    total = int(counts.sum())
    out = np.empty((total, X.shape[1]))
    anchors = np.empty(total, dtype=np.int64)
    partners = np.empty(total, dtype=np.int64)
    if total == 0:
        return out, anchors, partners
    kk = min(k, n - 1)
    D = squared_distances(X[active], X, schema, vdm)
    D[np.arange(active.size), active] = np.inf
    neigh = neighbor_order(D, kk)
    pos = 0
    for row, i in enumerate(active):
        c = int(counts[i])
        replace = c > kk
        chosen = neigh[row, rng.choice(kk, size=c, replace=replace)]
        r = rng.random(c)
        base = X[i]
        E = X[chosen]
        block = np.repeat(base[None, :], c, axis=0)
        if literal_formula:
            block[:, cont] = base[cont] + r[:, None] * (base[cont] - E[:, cont])
        else:
            block[:, cont] = base[cont] + r[:, None] * (E[:, cont] - base[cont])
        for j in cat:
            block[:, j] = _vote(E[:, j], base[j])
        out[pos:pos + c] = block
        anchors[pos:pos + c] = i
        partners[pos:pos + c] = chosen
        pos += c
    return out, anchors, partners


def wsmote(minority: Dataset, weights, n_target: int, k: int, vdm: VdmTable | None,
           seed=None, literal_formula: bool = False, return_origin: bool = False):
    """Weighted SMOTE: grow ``minority`` to ``n_target`` rows.

    Anchor ``i`` receives ``No_i`` synthetic rows from
    ``allocate_synthesis_counts(weights, n_target - n)``. Each synthetic row
    interpolates continuous features towards a neighbour drawn from the
    anchor's ``k`` nearest minority rows (with replacement once ``No_i > k``).
    Categorical features take the majority value among the drawn neighbours,
    the anchor's value breaking ties. ``literal_formula`` flips the
    interpolation to ``x + r (x - e)``.

    With ``return_origin`` the anchor and neighbour row of each synthetic
    point are returned too.
    """
    n = minority.n
    if n < 2:
        raise ValueError("WSMOTE needs at least 2 minority rows")
    if n_target < n:
        raise ValueError(f"n_target={n_target} is below the {n} input rows")
    if k < 1:
        raise ValueError("k must be >= 1")
    w = weight_vector(weights)
    if w.size != n:
        raise ValueError("one weight per minority row is required")
    rng = np.random.default_rng(seed)
    plan = allocate_synthesis_counts(w, n_target - n)
    S, anchors, partners = _synthesize(minority, plan.counts, k, vdm, rng, literal_formula)
    syn = minority.with_rows(S, np.ones(S.shape[0], dtype=np.int64))
    out = concat(minority, syn) if S.shape[0] else minority
    if return_origin:
        return out, anchors, partners
    return out


def smote_baseline(minority: Dataset, n_target: int, k: int, vdm: VdmTable | None,
                   seed=None, literal_formula: bool = False) -> Dataset:
    """Plain SMOTE: ``wsmote`` with uniform weights."""
    return wsmote(minority, uniform_weights(minority.n), n_target, k, vdm, seed,
                  literal_formula=literal_formula)


def wusample_keep(weights, n_keep: int, c: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted indices of rows surviving weighted under-sampling."""
    w = np.asarray(weights, dtype=np.float64).ravel()
    n = w.size
    if not 0 < n_keep <= n:
        raise ValueError(f"n_keep={n_keep} outside (0, {n}]")
    if not 0.0 <= c <= 1.0:
        raise ValueError("c must lie in [0, 1]")
    n_elim = n - n_keep
    if n_elim == 0:
        return np.arange(n)
    pool_size = min(n, int(math.floor((1.0 + c) * n_elim + 0.5)))
    pool = np.argsort(w, kind="stable")[:pool_size]
    eliminated = rng.choice(pool, size=n_elim, replace=False)
    keep = np.ones(n, dtype=bool)
    keep[eliminated] = False
    return np.flatnonzero(keep)


def wusample(majority: Dataset, weights, n_keep: int, c: float = DEFAULT_POOL_CONSTANT,
             seed=None) -> Dataset:
    """Weighted under-sampling: keep ``n_keep`` of the majority rows.

    The ``n - n_keep`` eliminated rows are drawn uniformly from the
    ``round((1 + c) (n - n_keep))`` lowest-weight rows.
    """
    w = weight_vector(weights)
    if w.size != majority.n:
        raise ValueError("one weight per majority row is required")
    keep = wusample_keep(w, n_keep, c, np.random.default_rng(seed))
    return majority.subset(keep)


def random_undersample_keep(n: int, n_keep: int, rng: np.random.Generator) -> np.ndarray:
    if not 0 < n_keep <= n:
        raise ValueError(f"n_keep={n_keep} outside (0, {n}]")
    return np.sort(rng.choice(n, size=n_keep, replace=False))


def random_undersample(majority: Dataset, n_keep: int, seed=None) -> Dataset:
    keep = random_undersample_keep(majority.n, n_keep, np.random.default_rng(seed))
    return majority.subset(keep)


def hybrid_sample_baseline(data: Dataset, n_per_class: int, k: int, vdm: VdmTable | None,
                           seed=None) -> Dataset:
    """SMOTE the minority up and randomly under-sample the majority to ``n_per_class`` each."""
    minority = data.subset(np.flatnonzero(data.y == 1))
    majority = data.subset(np.flatnonzero(data.y == -1))
    if not minority.n <= n_per_class <= majority.n:
        raise ValueError(
            f"n_per_class={n_per_class} outside [{minority.n}, {majority.n}]")
    rng = np.random.default_rng(seed)
    up = smote_baseline(minority, n_per_class, k, vdm, rng) if n_per_class > minority.n else minority
    down = random_undersample(majority, n_per_class, rng)
    return concat(up, down)
