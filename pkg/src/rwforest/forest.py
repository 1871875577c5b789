"""Weighted regression trees and forests.

Each tree is grown on the full training set with a per-observation weight
vector; splits minimize the weighted sum of squared errors around the
weighted child means, and leaves predict the weighted mean of their rows.
A forest averages the trees.  Rows with weight exactly zero (bootstrap
multiplicity schemes) are excluded from node counts, candidate thresholds
and estimates, which makes a multiplicity-weighted tree identical to an
unweighted tree on the physically resampled data.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateData, DimensionMismatch, EmptyChild,
                     ZeroWeightLeaf)
from .policy import (AlgorithmicK, GrowthPolicy, ValidPartition,
                     child_constraint, may_split)
from .rng import (STREAM_TREE_FEATURES, STREAM_TREE_WEIGHTS, substream,
                  substream_id)
from .weights import WeightScheme, WeightVector, draw_weights

THREADS_ENV = "RWFOREST_THREADS"


@dataclass
class Dataset:
    """Time-ordered feature matrix and response vector."""

    features: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.response = np.ascontiguousarray(self.response, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if self.response.ndim != 1:
            raise ValueError("response must be a 1-D vector")
        T, p = self.features.shape
        if T < 1 or p < 1:
            raise ValueError(f"need T >= 1 and p >= 1, got T={T}, p={p}")
        if self.response.shape[0] != T:
            raise ValueError("features and response row counts differ")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite entries")
        if not np.all(np.isfinite(self.response)):
            raise ValueError("response contains non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    """Axis-aligned split: rows with feature value <= threshold go left."""

    feature: int
    threshold: float


@dataclass
class Leaf:
    estimate: float
    weight_total: float
    count: int
    is_leaf = True


@dataclass
class Internal:
    split: SplitSpec
    left: "Leaf | Internal"
    right: "Leaf | Internal"
    is_leaf = False


Node = Leaf | Internal


@dataclass(frozen=True)
class ForestConfig:
    """Ensemble settings: tree count, feature sample size, growth policy,
    weight scheme and the master seed all substreams derive from."""

    num_trees: int
    m_try: int
    growth_policy: GrowthPolicy
    weight_scheme: WeightScheme
    master_seed: int

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError(f"num_trees must be >= 1, got {self.num_trees}")
        if self.m_try < 1:
            raise ValueError(f"m_try must be >= 1, got {self.m_try}")
        if self.master_seed < 0 or self.master_seed >= 2 ** 64:
            raise ValueError("master_seed must fit in 64 unsigned bits")

    @property
    def min_node(self) -> int:
        return self.growth_policy.k


class Tree:
    """One fitted recursive partition."""

    def __init__(self, root: Node, n_features: int, policy_tag: str = "",
                 seed_record: str = ""):
        self.root = root
        self.n_features = n_features
        self.policy_tag = policy_tag
        self.seed_record = seed_record

    def nodes(self):
        """Yield (preorder_id, node); left subtree before right."""
        stack = [(0, self.root)]
        next_id = 1
        while stack:
            node_id, node = stack.pop()
            yield node_id, node
            if not node.is_leaf:
                left_id, right_id = next_id, next_id + 1
                next_id += 2
                stack.append((right_id, node.right))
                stack.append((left_id, node.left))

    def structure_signature(self) -> tuple:
        """Hashable encoding of the full tree (splits and leaf payloads)."""
        parts = []
        for _, node in self.nodes():
            if node.is_leaf:
                parts.append(("L", node.estimate, node.weight_total, node.count))
            else:
                parts.append(("S", node.split.feature, node.split.threshold))
        return tuple(parts)

    def predict(self, x: np.ndarray) -> float | np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            if x.shape[0] != self.n_features:
                raise DimensionMismatch(
                    f"query has {x.shape[0]} features, tree expects {self.n_features}")
            node = self.root
            while not node.is_leaf:
                node = node.left if x[node.split.feature] <= node.split.threshold else node.right
            return node.estimate
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"query matrix must be (n, {self.n_features}), got {x.shape}")
        out = np.empty(x.shape[0])
        stack = [(self.root, np.arange(x.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if node.is_leaf:
                out[idx] = node.estimate
                continue
            mask = x[idx, node.split.feature] <= node.split.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
        return out


@dataclass
class Forest:
    trees: list[Tree]
    config: ForestConfig

    def __post_init__(self):
        if len(self.trees) != self.config.num_trees:
            raise ValueError("tree count does not match config.num_trees")

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict(self, x: np.ndarray) -> float | np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        preds = [tree.predict(x) for tree in self.trees]
        if x.ndim == 1:
            return float(np.mean(preds))
        return np.mean(preds, axis=0)


def predict(model: Tree | Forest, x: np.ndarray) -> float | np.ndarray:
    """Predict with a tree or a forest at one point or a matrix of points."""
    return model.predict(x)


def node_estimate(rows: np.ndarray, weights: np.ndarray, response: np.ndarray) -> float:
    """Weighted mean of the response over the given rows."""
    rows = np.asarray(rows, dtype=np.intp)
    w = np.asarray(weights, dtype=np.float64)[rows]
    wsum = float(w.sum())
    if wsum <= 0.0:
        raise ZeroWeightLeaf("weight sum over rows is zero")
    return float((w * np.asarray(response, dtype=np.float64)[rows]).sum() / wsum)


def split_score(candidate: SplitSpec, rows: np.ndarray, weights: np.ndarray,
                features: np.ndarray, response: np.ndarray) -> float:
    """Weighted SSE of the two children induced by the candidate split."""
    rows = np.asarray(rows, dtype=np.intp)
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    response = np.asarray(response, dtype=np.float64)
    go_left = features[rows, candidate.feature] <= candidate.threshold
    score = 0.0
    for side_rows in (rows[go_left], rows[~go_left]):
        w = weights[side_rows]
        if side_rows.size == 0 or not np.any(w > 0):
            raise EmptyChild("candidate split leaves an empty or zero-weight child")
        c = node_estimate(side_rows, weights, response)
        score += float((w * (response[side_rows] - c) ** 2).sum())
    return score


def _sweep_candidates(X: np.ndarray, y: np.ndarray, w: np.ndarray,
                      rows: np.ndarray, feats: np.ndarray, min_child: int):
    """Best (score, feature, threshold) over all admissible thresholds of
    the candidate features, or None.

    Thresholds are midpoints between consecutive distinct sorted in-node
    values; ties resolve to the lowest score, then lowest feature index,
    then lowest threshold.
    """
    n = rows.size
    if n < 2 or min_child * 2 > n:
        return None
    Xn = X[np.ix_(rows, feats)]
    order = np.argsort(Xn, axis=0, kind="stable")
    Xs = np.take_along_axis(Xn, order, axis=0)

    wn = w[rows]
    wy = wn * y[rows]
    wyy = wy * y[rows]
    cw = np.cumsum(wn[order], axis=0)
    cwy = np.cumsum(wy[order], axis=0)
    cwyy = np.cumsum(wyy[order], axis=0)

    lw, lwy, lwyy = cw[:-1], cwy[:-1], cwyy[:-1]
    rw = cw[-1] - lw
    rwy = cwy[-1] - lwy
    rwyy = cwyy[-1] - lwyy

    lo, hi = Xs[:-1], Xs[1:]
    thr = lo + (hi - lo) * 0.5
    # distinct values with a representable strictly-between midpoint
    ok = (lo < thr) & (thr < hi)
    if min_child > 1:
        left_n = np.arange(1, n)
        size_ok = (left_n >= min_child) & (n - left_n >= min_child)
        ok &= size_ok[:, None]
    if not ok.any():
        return None

    with np.errstate(invalid="ignore", divide="ignore"):
        sse = (lwyy - lwy * lwy / lw) + (rwyy - rwy * rwy / rw)
    sse = np.where(ok, np.maximum(sse, 0.0), np.inf)

    # column-major scan: first minimum = lowest feature, then lowest threshold
    flat = sse.ravel(order="F")
    best = int(np.argmin(flat))
    if not np.isfinite(flat[best]):
        return None
    col, pos = divmod(best, n - 1)
    return float(flat[best]), int(feats[col]), float(thr[pos, col])


def best_split(rows: np.ndarray, weights: np.ndarray, features: np.ndarray,
               response: np.ndarray, candidate_features: np.ndarray,
               policy: GrowthPolicy) -> SplitSpec | None:
    """Minimize the weighted two-child SSE over the candidate features."""
    rows = np.asarray(rows, dtype=np.intp)
    weights = np.asarray(weights, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    response = np.asarray(response, dtype=np.float64)
    rows = rows[weights[rows] > 0]
    if rows.size < 2:
        return None
    feats = np.unique(np.asarray(candidate_features, dtype=np.intp))
    hit = _sweep_candidates(features, response, weights, rows, feats,
                            child_constraint(rows.size, policy))
    if hit is None:
        return None
    _, feature, threshold = hit
    return SplitSpec(feature, threshold)


def grow_tree(data: Dataset, weights: WeightVector | np.ndarray,
              config: ForestConfig, rng: np.random.Generator,
              seed_record: str = "") -> Tree:
    """Grow one weighted tree; freshly samples m_try features per node."""
    w = weights.values if isinstance(weights, WeightVector) else np.asarray(weights, dtype=np.float64)
    X, y = data.features, data.response
    T, p = X.shape
    if w.shape[0] != T:
        raise ValueError(f"weights length {w.shape[0]} != T={T}")
    if config.m_try > p:
        raise ValueError(f"m_try={config.m_try} exceeds p={p}")
    rows0 = np.flatnonzero(w > 0)
    if rows0.size == 0:
        raise DegenerateData("no positive-weight rows")
    policy = config.growth_policy
    strict = isinstance(policy, ValidPartition)
    all_feats = np.arange(p, dtype=np.intp)

    def make_leaf(rows: np.ndarray) -> Leaf:
        wn = w[rows]
        tot = float(wn.sum())
        return Leaf(float((wn * y[rows]).sum() / tot), tot, int(rows.size))

    def attach(parent, side, node):
        if parent is None:
            return
        if side == 0:
            parent.left = node
        else:
            parent.right = node

    root: Node | None = None
    # stack entries: (rows, parent node, side); left child pushed last so the
    # preorder (left-first) visit order fixes the feature-sampling draw order
    stack: list = [(rows0, None, 0)]
    while stack:
        rows, parent, side = stack.pop()
        node: Node | None = None
        if may_split(rows.size, policy):
            feats = np.sort(rng.choice(p, size=config.m_try, replace=False))
            spec = best_split(rows, w, X, y, feats, policy)
            if spec is None and strict and config.m_try < p:
                # a node holding >= m rows must split if any feature admits one
                spec = best_split(rows, w, X, y, all_feats, policy)
            if spec is not None:
                mask = X[rows, spec.feature] <= spec.threshold
                node = Internal(spec, None, None)  # children attached via stack
                stack.append((rows[~mask], node, 1))
                stack.append((rows[mask], node, 0))
        if node is None:
            node = make_leaf(rows)
        if parent is None:
            root = node
        else:
            attach(parent, side, node)
    return Tree(root, p, policy.tag, seed_record)


def _grow_one(data: Dataset, config: ForestConfig, b: int) -> Tree:
    seed = config.master_seed
    wv = draw_weights(config.weight_scheme, data.n_rows,
                      substream(seed, STREAM_TREE_WEIGHTS, b),
                      substream_id(seed, STREAM_TREE_WEIGHTS, b))
    fs_rng = substream(seed, STREAM_TREE_FEATURES, b)
    return grow_tree(data, wv, config, fs_rng,
                     seed_record=substream_id(seed, STREAM_TREE_FEATURES, b))


def fit_forest(data: Dataset, config: ForestConfig, n_workers: int | None = None) -> Forest:
    """Fit all trees; per-tree substreams make the result schedule-independent."""
    if config.m_try > data.n_features:
        raise ValueError(f"m_try={config.m_try} exceeds p={data.n_features}")
    if n_workers is None:
        n_workers = int(os.environ.get(THREADS_ENV, "1"))
    indices = range(config.num_trees)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            trees = list(pool.map(lambda b: _grow_one(data, config, b), indices))
    else:
        trees = [_grow_one(data, config, b) for b in indices]
    return Forest(trees, config)
