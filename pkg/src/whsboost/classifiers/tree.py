"""C4.5-style decision tree: gain-ratio splits, binary thresholds on continuous
features, multiway branches on categorical ones. No pruning; depth and leaf
size limits stand in for it."""

from __future__ import annotations

import copy

import numpy as np

from ..data import Dataset, FeatureSchema
from .base import TrainedClassifier

EPSILON = 1e-12


def _entropy(pos, total):
    pos = np.asarray(pos, dtype=np.float64)
    total = np.asarray(total, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, pos / np.where(total > 0, total, 1), 0.0)
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(np.where(p > 0, p, 1)), 0.0)
              + np.where(q > 0, q * np.log2(np.where(q > 0, q, 1)), 0.0))
    return h


def _split_info(sizes, total):
    frac = np.asarray(sizes, dtype=np.float64) / total
    frac = frac[frac > 0]
    return float(-np.sum(frac * np.log2(frac)))


def continuous_candidates(x, y, min_leaf):
    """(gain, split_info, threshold) for every admissible midpoint threshold."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = xs.size
    cum_pos = np.cumsum(ys == 1)
    left_n = np.arange(1, n)
    boundary = xs[1:] > xs[:-1]
    ok = boundary & (left_n >= min_leaf) & (n - left_n >= min_leaf)
    if not ok.any():
        return np.empty(0), np.empty(0), np.empty(0)
    ln = left_n[ok]
    lp = cum_pos[:-1][ok]
    rn = n - ln
    rp = cum_pos[-1] - lp
    parent = _entropy(cum_pos[-1], n)
    gain = parent - (ln / n) * _entropy(lp, ln) - (rn / n) * _entropy(rp, rn)
    fl, fr = ln / n, rn / n
    info = -(fl * np.log2(fl) + fr * np.log2(fr))
    thr = (xs[:-1][ok] + xs[1:][ok]) / 2.0
    return gain, info, thr


def categorical_candidate(x, y, min_leaf):
    values, inverse = np.unique(x, return_inverse=True)
    if values.size < 2:
        return None
    sizes = np.bincount(inverse)
    if sizes.min() < min_leaf:
        return None
    pos = np.bincount(inverse, weights=(y == 1).astype(np.float64))
    n = x.size
    gain = _entropy(np.sum(y == 1), n) - np.sum(sizes / n * _entropy(pos, sizes))
    return float(gain), _split_info(sizes, n), values


def best_split(X, y, schema: FeatureSchema, min_leaf: int):
    """Highest gain-ratio split among those with at least average gain.

    Returns ``(feature, threshold_or_values, ratio)`` or ``None``.
    """
    cands = []
    for j, feat in enumerate(schema.features):
        if feat.is_categorical:
            c = categorical_candidate(X[:, j], y, min_leaf)
            if c is not None and c[0] > EPSILON and c[1] > 0:
                cands.append((c[0], c[0] / c[1], j, c[2]))
        else:
            gain, info, thr = continuous_candidates(X[:, j], y, min_leaf)
            if gain.size == 0:
                continue
            good = (gain > EPSILON) & (info > 0)
            if not good.any():
                continue
            ratio = np.where(good, gain / np.where(info > 0, info, 1), -np.inf)
            # the feature's representative threshold is its best-gain cut
            i = int(np.argmax(np.where(good, gain, -np.inf)))
            cands.append((float(gain[i]), float(ratio[i]), j, float(thr[i])))
    if not cands:
        return None
    avg_gain = np.mean([c[0] for c in cands])
    best = None
    for gain, ratio, j, how in cands:
        if gain + EPSILON < avg_gain:
            continue
        if best is None or ratio > best[2] + EPSILON:
            best = (j, how, ratio)
    return best


def _leaf(y):
    n = y.size
    pos = int(np.sum(y == 1))
    return {"n": n, "pos": pos}


def grow(X, y, schema, depth, max_depth, min_leaf):
    node = _leaf(y)
    if depth >= max_depth or node["pos"] in (0, node["n"]) or node["n"] < 2 * min_leaf:
        return node
    split = best_split(X, y, schema, min_leaf)
    if split is None:
        return node
    j, how, _ = split
    node["feature"] = int(j)
    if schema.features[j].is_categorical:
        node["children"] = {}
        for v in how:
            mask = X[:, j] == v
            node["children"][int(v)] = grow(X[mask], y[mask], schema, depth + 1, max_depth, min_leaf)
    else:
        node["threshold"] = float(how)
        mask = X[:, j] <= how
        node["left"] = grow(X[mask], y[mask], schema, depth + 1, max_depth, min_leaf)
        node["right"] = grow(X[~mask], y[~mask], schema, depth + 1, max_depth, min_leaf)
    return node


def _node_score(node):
    return node["pos"] / node["n"] - 0.5 if node["n"] else 0.0


def _is_leaf(node):
    return "feature" not in node


def _children_from_json(node):
    if "children" in node:
        node["children"] = {int(k): _children_from_json(v) for k, v in node["children"].items()}
    for side in ("left", "right"):
        if side in node:
            _children_from_json(node[side])
    return node


class DecisionTreeClassifier(TrainedClassifier):
    kind = "dtree"

    def __init__(self, schema: FeatureSchema, root: dict, max_depth: int, min_leaf: int):
        super().__init__(schema)
        self.root = root
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def _score(self, node, X, idx, out):
        if idx.size == 0:
            return
        if _is_leaf(node):
            out[idx] = _node_score(node)
            return
        j = node["feature"]
        col = X[idx, j]
        if "threshold" in node:
            mask = col <= node["threshold"]
            self._score(node["left"], X, idx[mask], out)
            self._score(node["right"], X, idx[~mask], out)
            return
        handled = np.zeros(idx.size, dtype=bool)
        for v, child in node["children"].items():
            mask = col == v
            handled |= mask
            self._score(child, X, idx[mask], out)
        # unseen categorical branch falls back to this node's majority
        out[idx[~handled]] = _node_score(node)

    def decision_score(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty(X.shape[0])
        self._score(self.root, X, np.arange(X.shape[0]), out)
        return out

    def depth(self, node=None) -> int:
        node = self.root if node is None else node
        if _is_leaf(node):
            return 0
        kids = list(node["children"].values()) if "children" in node else [node["left"], node["right"]]
        return 1 + max(self.depth(c) for c in kids)

    def leaves(self, node=None):
        node = self.root if node is None else node
        if _is_leaf(node):
            yield node
            return
        kids = list(node["children"].values()) if "children" in node else [node["left"], node["right"]]
        for c in kids:
            yield from self.leaves(c)

    def params(self) -> dict:
        return {"max_depth": self.max_depth, "min_leaf": self.min_leaf, "root": self.root}

    @classmethod
    def from_params(cls, schema, p):
        return cls(schema, _children_from_json(copy.deepcopy(p["root"])), p["max_depth"], p["min_leaf"])


def train_decision_tree(train: Dataset, max_depth: int = 10, min_leaf: int = 1) -> DecisionTreeClassifier:
    if train.n == 0:
        raise ValueError("empty training set")
    root = grow(np.asarray(train.X), np.asarray(train.y), train.schema, 0, max_depth, min_leaf)
    return DecisionTreeClassifier(train.schema, root, max_depth, min_leaf)
