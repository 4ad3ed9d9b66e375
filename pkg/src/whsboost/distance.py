"""Mixed continuous/categorical distance and nearest-neighbour queries.

Continuous features contribute squared differences and categorical features
contribute value-difference-metric (VDM) terms, all under one square root::

    dist(a, b) = sqrt( sum_cont (a_s - b_s)^2 + sum_cat VDM_f(a_f, b_f) )

The VDM of two values of a categorical feature compares their class-conditional
frequencies over both classes. Unseen values behave as a virtual value with a
uniform (0.5, 0.5) class profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import DataError, Dataset, FeatureSchema


@dataclass(frozen=True)
class VdmTable:
    """Per categorical feature: ``(V+1, V+1)`` distance matrix and class profiles.

    Row/column ``V`` (one past the vocabulary) is the virtual unseen value.
    Keys are column indices into the dataset.
    """

    tables: dict
    profiles: dict
    counts: dict
    smoothing: bool = True
    n_classes: int = 2

    def lookup(self, feature: int, u: int, v: int) -> float:
        table = self.tables[feature]
        last = table.shape[0] - 1
        u = u if 0 <= u < last else last
        v = v if 0 <= v < last else last
        return float(table[u, v])

    def to_dict(self) -> dict:
        return {
            "smoothing": self.smoothing,
            "features": {
                str(j): {"counts": self.counts[j].tolist()} for j in sorted(self.tables)
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VdmTable":
        counts = {int(j): np.asarray(v["counts"], dtype=np.float64)
                  for j, v in d["features"].items()}
        return _table_from_counts(counts, bool(d["smoothing"]))


def _table_from_counts(counts: dict, smoothing: bool) -> VdmTable:
    tables, profiles = {}, {}
    for j, c in counts.items():
        # c: (V, 2) counts of (positive, negative) per value
        if smoothing:
            prof = (c + 1.0) / (c.sum(axis=1, keepdims=True) + 2.0)
        else:
            tot = c.sum(axis=1, keepdims=True)
            prof = np.where(tot > 0, c / np.where(tot > 0, tot, 1.0), 0.5)
        prof = np.vstack([prof, [0.5, 0.5]])
        diff = prof[:, None, :] - prof[None, :, :]
        tables[j] = np.sum(diff**2, axis=2)
        profiles[j] = prof
    return VdmTable(tables, profiles, counts, smoothing)


def build_vdm_table(data: Dataset, smoothing: bool = True) -> VdmTable:
    """Class-conditional value-difference tables for every categorical feature.

    ``VDM(u, v) = sum_c (N_uc / N_u - N_vc / N_v)^2`` over the two classes, with
    Laplace smoothing ``N_uc + 1``, ``N_u + 2`` unless ``smoothing`` is off.
    """
    if data.n_positive == 0 or data.n_negative == 0:
        raise DataError("VDM needs both classes present")
    counts = {}
    for j in data.schema.categorical_index:
        size = len(data.schema.features[j].vocabulary)
        if size == 0:
            raise DataError(f"feature {data.schema.features[j].name!r} has an empty vocabulary")
        codes = data.X[:, j].astype(np.int64)
        pos = np.bincount(codes[data.y == 1], minlength=size)
        neg = np.bincount(codes[data.y == -1], minlength=size)
        counts[int(j)] = np.column_stack([pos, neg]).astype(np.float64)
    return _table_from_counts(counts, smoothing)


def empty_vdm() -> VdmTable:
    return VdmTable({}, {}, {})


def _codes(col: np.ndarray, size: int) -> np.ndarray:
    c = col.astype(np.int64)
    return np.where((c >= 0) & (c < size), c, size)


def mixed_distance(a, b, schema: FeatureSchema, vdm: VdmTable | None) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cont = schema.continuous_index
    total = float(np.sum((a[cont] - b[cont]) ** 2))
    for j in schema.categorical_index:
        total += vdm.lookup(int(j), int(a[j]), int(b[j]))
    return float(np.sqrt(total))


def squared_distances(A, B, schema: FeatureSchema, vdm: VdmTable | None) -> np.ndarray:
    """Matrix of squared mixed distances between rows of ``A`` and ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    cont = schema.continuous_index
    if cont.size:
        D = cdist(A[:, cont], B[:, cont], "sqeuclidean")
    else:
        D = np.zeros((A.shape[0], B.shape[0]))
    for j in schema.categorical_index:
        table = vdm.tables[int(j)]
        size = table.shape[0] - 1
        D += table[_codes(A[:, j], size)[:, None], _codes(B[:, j], size)[None, :]]
    return D


def pairwise_distances(A, B, schema: FeatureSchema, vdm: VdmTable | None) -> np.ndarray:
    return np.sqrt(squared_distances(A, B, schema, vdm))


@dataclass(frozen=True)
class NeighborList:
    anchor: int
    indices: np.ndarray
    distances: np.ndarray


def neighbor_order(D: np.ndarray, k: int, exclude_self: bool = False) -> np.ndarray:
    """Indices of the ``k`` smallest entries per row; ties go to the lower index."""
    D = np.array(D, dtype=np.float64, copy=True)
    if exclude_self:
        np.fill_diagonal(D, np.inf)
    n_rows, n_cols = D.shape
    k = min(k, n_cols)
    if k == 0 or n_rows == 0:
        return np.empty((n_rows, k), dtype=np.int64)
    # select the k smallest per row without a full sort: everything below the
    # k-th value, plus the lowest-index entries tied with it
    kth = np.partition(D, k - 1, axis=1)[:, k - 1:k]
    below = D < kth
    need = k - below.sum(axis=1, keepdims=True)
    tied = D == kth
    chosen = below | (tied & (np.cumsum(tied, axis=1) <= need))
    cols = np.nonzero(chosen)[1].reshape(n_rows, k)
    inner = np.argsort(np.take_along_axis(D, cols, axis=1), axis=1, kind="stable")
    return np.take_along_axis(cols, inner, axis=1)


def k_nearest_neighbors(pool: Dataset, anchor: int, k: int, vdm: VdmTable | None) -> NeighborList:
    """The ``min(k, n-1)`` rows of ``pool`` closest to row ``anchor``."""
    if pool.n < 2:
        raise DataError("neighbour search needs at least 2 rows")
    if k < 1:
        raise ValueError("k must be >= 1")
    d = pairwise_distances(pool.X[anchor:anchor + 1], pool.X, pool.schema, vdm)[0]
    d[anchor] = np.inf
    order = np.argsort(d, kind="stable")[: min(k, pool.n - 1)]
    return NeighborList(anchor, order, d[order])
