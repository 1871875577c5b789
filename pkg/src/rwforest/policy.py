"""Tree-growth stopping rules and the post-fit auditor.

Two policies are shipped.  ``AlgorithmicK`` is the classic rule: keep
splitting any node holding at least k counted rows, children only need to
be nonempty.  ``ValidPartition`` is the stricter rule used for theory-style
growth: a node must split once it holds m rows, every split must route at
least max(k, ceil(xi * parent)) rows to each child, and every leaf keeps
at least k rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AlgorithmicK:
    """Split while the counted node size is at least k (children >= 1 row)."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @property
    def tag(self) -> str:
        return f"algk(k={self.k})"


@dataclass(frozen=True)
class ValidPartition:
    """Fraction-constrained growth: children >= max(k, ceil(xi*parent)),
    leaves >= k, and any node with >= m rows must split."""

    xi: float
    k: int
    m: int

    def __post_init__(self):
        if not (0.0 < self.xi < 0.5):
            raise ValueError(f"xi must lie in (0, 1/2), got {self.xi}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.m < 2 * self.k:
            raise ValueError(f"m must be >= 2k, got m={self.m}, k={self.k}")

    @property
    def tag(self) -> str:
        return f"valid(xi={self.xi},k={self.k},m={self.m})"


GrowthPolicy = AlgorithmicK | ValidPartition


def may_split(node_size: int, policy: GrowthPolicy) -> bool:
    """Is a node of this counted size eligible for splitting?"""
    if node_size < 1:
        raise ValueError(f"node_size must be >= 1, got {node_size}")
    if isinstance(policy, AlgorithmicK):
        return node_size >= max(2, policy.k)
    return node_size >= policy.m


def child_constraint(parent_size: int, policy: GrowthPolicy) -> int:
    """Minimum counted rows each child of a split must receive."""
    if isinstance(policy, AlgorithmicK):
        return 1
    return max(policy.k, math.ceil(policy.xi * parent_size))


def auto_min_node_size(T: int) -> int:
    """Minimum-node-size schedule floor(0.02 * (ln T)^4 * ln(ln T)).

    Natural logarithms; grows slowly so leaves widen with the sample.
    """
    if T < 16:
        raise ValueError(f"schedule needs T >= 16, got {T}")
    return int(math.floor(0.02 * math.log(T) ** 4 * math.log(math.log(T))))


@dataclass
class RoutingTable:
    """Replay of training rows through a fitted tree.

    counts[node_id] is the number of positive-weight rows reaching the
    node (preorder ids); leaf_rows maps leaf node ids to their row-index
    arrays so leaf-level checks can inspect the actual data.
    """

    counts: dict[int, int]
    leaf_rows: dict[int, np.ndarray]


def replay_routing(tree, features: np.ndarray, weights: np.ndarray) -> RoutingTable:
    """Route every positive-weight training row through the tree."""
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    rows = np.flatnonzero(weights > 0)
    counts: dict[int, int] = {}
    leaf_rows: dict[int, np.ndarray] = {}
    stack = [(0, tree.root, rows)]
    next_id = 1
    while stack:
        node_id, node, idx = stack.pop()
        counts[node_id] = int(idx.size)
        if node.is_leaf:
            leaf_rows[node_id] = idx
            continue
        left_id, right_id = next_id, next_id + 1
        next_id += 2
        mask = features[idx, node.split.feature] <= node.split.threshold
        # push right first so preorder ids match Tree.nodes()
        stack.append((right_id, node.right, idx[~mask]))
        stack.append((left_id, node.left, idx[mask]))
    return RoutingTable(counts, leaf_rows)


@dataclass
class AuditReport:
    """Per-tree verdicts against a growth policy.

    Feature-selection coverage (each feature having positive split
    probability) is guaranteed by uniform feature sampling and is reported
    as an informational note rather than checked numerically.
    """

    is_recursive_partition: bool
    leaves_min_k_ok: bool
    split_fraction_ok: bool
    must_split_ok: bool
    offending_nodes: list[int] = field(default_factory=list)
    n_nodes: int = 0
    n_leaves: int = 0
    note: str = "feature coverage follows from uniform candidate sampling"

    @property
    def ok(self) -> bool:
        return (self.is_recursive_partition and self.leaves_min_k_ok
                and self.split_fraction_ok and self.must_split_ok)


def audit_tree(tree, routing: RoutingTable, policy: GrowthPolicy,
               features: np.ndarray | None = None,
               weights: np.ndarray | None = None) -> AuditReport:
    """Check a fitted tree against the policy it claims to satisfy.

    ``features``/``weights`` enable the must-split check (whether an
    oversized leaf truly had no admissible split); without them that
    check only validates leaves smaller than m.
    """
    from .forest import best_split  # local import: forest depends on this module

    strict = isinstance(policy, ValidPartition)
    offenders: set[int] = set()
    recursive_ok = True
    leaves_k_ok = True
    fraction_ok = True
    must_split = True
    n_nodes = n_leaves = 0

    # (node_id, node, per-feature open bounds inherited from ancestors)
    p = tree.n_features
    stack = [(0, tree.root, np.full(p, -np.inf), np.full(p, np.inf))]
    next_id = 1
    while stack:
        node_id, node, lo, hi = stack.pop()
        n_nodes += 1
        if node.is_leaf:
            n_leaves += 1
            count = routing.counts.get(node_id, 0)
            if strict and count < policy.k:
                leaves_k_ok = False
                offenders.add(node_id)
            if strict and count >= policy.m:
                rows = routing.leaf_rows.get(node_id)
                if features is not None and weights is not None and rows is not None:
                    # admissibility depends only on feature values and the
                    # child constraint, so a zero response suffices
                    admissible = best_split(
                        rows, weights, features, np.zeros(len(weights)),
                        np.arange(features.shape[1]), policy)
                    if admissible is not None:
                        must_split = False
                        offenders.add(node_id)
            continue
        j, thr = node.split.feature, node.split.threshold
        if not (lo[j] < thr < hi[j]) or not math.isfinite(thr):
            recursive_ok = False
            offenders.add(node_id)
        parent_count = routing.counts.get(node_id, 0)
        left_id, right_id = next_id, next_id + 1
        next_id += 2
        need = child_constraint(parent_count, policy) if parent_count else 1
        for child_id in (left_id, right_id):
            if routing.counts.get(child_id, 0) < need:
                fraction_ok = False
                offenders.add(node_id)
        hi_l = hi.copy(); hi_l[j] = thr
        lo_r = lo.copy(); lo_r[j] = thr
        stack.append((right_id, node.right, lo_r, hi))
        stack.append((left_id, node.left, lo, hi_l))

    return AuditReport(
        is_recursive_partition=recursive_ok,
        leaves_min_k_ok=leaves_k_ok,
        split_fraction_ok=fraction_ok,
        must_split_ok=must_split,
        offending_nodes=sorted(offenders),
        n_nodes=n_nodes,
        n_leaves=n_leaves,
    )
