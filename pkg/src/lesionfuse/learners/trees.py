"""Tree ensembles: extremely randomized trees and softmax boosted trees.

Both are built from scratch on the kernel backend.  Extra trees draw one
uniform threshold per sampled feature and keep the best Gini score; the
boosted variants fit one regression tree per class per round to softmax
residuals, growing either level-wise to a fixed depth or best-first to a
leaf budget.  Training consumes no global RNG state: extra trees seed a
fresh generator per tree, the boosted trees are fully deterministic.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from lesionfuse import _kernels
from lesionfuse.errors import ConfigError, DataError
from lesionfuse.learners.logreg import softmax

N_CLASSES = 4

_PRIOR_CLIP = 1e-12


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; feature == -1 marks a leaf.

    value holds class frequencies (n_nodes, 4) for extra trees and scalar
    leaf weights (n_nodes,) for boosted regression trees.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


class _TreeBuilder:
    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []

    def new_node(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        return len(self.feature) - 1

    def set_split(self, node, f, thr, lid, rid):
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = lid
        self.right[node] = rid

    def arrays(self):
        return (
            np.array(self.feature, dtype=np.int64),
            np.array(self.threshold, dtype=np.float64),
            np.array(self.left, dtype=np.int64),
            np.array(self.right, dtype=np.int64),
        )


# ---------------------------------------------------------------- extra trees


@dataclass(frozen=True)
class ExtraTreesModel:
    trees: tuple

    def predict_proba(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.zeros((X.shape[0], N_CLASSES), dtype=np.float64)
        for tree in self.trees:
            leaves = _kernels.tree_apply(
                tree.feature, tree.threshold, tree.left, tree.right, X, False
            )
            out += tree.value[leaves]
        return out / len(self.trees)


def _build_extra_tree(X, y, k, min_leaf, rng) -> Tree:
    n, d = X.shape
    tb = _TreeBuilder()
    values = {}
    root = tb.new_node()
    stack = [(root, np.arange(n, dtype=np.int64))]
    while stack:
        node, idx = stack.pop()
        counts = np.bincount(y[idx], minlength=N_CLASSES)
        pure = int((counts > 0).sum()) < 2
        if pure or idx.size < 2 * min_leaf:
            values[node] = counts / idx.size
            continue
        feats = rng.choice(d, size=k, replace=False)
        sub = X[np.ix_(idx, feats)]
        lows = sub.min(axis=0)
        highs = sub.max(axis=0)
        thr = rng.uniform(lows, highs)
        scores = _kernels.gini_scores(
            sub.T, y[idx], thr, N_CLASSES, min_leaf
        )
        best = int(np.argmax(scores))
        if not np.isfinite(scores[best]):
            values[node] = counts / idx.size
            continue
        f = int(feats[best])
        t = float(thr[best])
        go_left = X[idx, f] < t
        lid = tb.new_node()
        rid = tb.new_node()
        tb.set_split(node, f, t, lid, rid)
        # Push right first so the left child is expanded next (preorder),
        # keeping the RNG consumption order fixed.
        stack.append((rid, idx[~go_left]))
        stack.append((lid, idx[go_left]))
    feature, threshold, left, right = tb.arrays()
    value = np.zeros((feature.shape[0], N_CLASSES), dtype=np.float64)
    for node, v in values.items():
        value[node] = v
    return Tree(feature, threshold, left, right, value)


def train_extra_trees(X, y, n_trees=300, min_leaf=2, seed=0) -> ExtraTreesModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise DataError("empty training set")
    if n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    k = math.ceil(math.sqrt(X.shape[1]))
    trees = []
    for t in range(n_trees):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, t)))
        )
        trees.append(_build_extra_tree(X, y, k, min_leaf, rng))
    return ExtraTreesModel(trees=tuple(trees))


# ------------------------------------------------------------- boosted trees

GBDT_VARIANTS = ("level", "leaf")


@dataclass(frozen=True)
class GbdtModel:
    variant: str
    f0: np.ndarray  # (4,)
    trees: tuple  # trees[round][class] is a Tree with scalar leaf values
    learning_rate: float

    def decision_function(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        F = np.tile(self.f0, (X.shape[0], 1))
        for round_trees in self.trees:
            for c, tree in enumerate(round_trees):
                leaves = _kernels.tree_apply(
                    tree.feature,
                    tree.threshold,
                    tree.left,
                    tree.right,
                    X,
                    True,
                )
                F[:, c] += self.learning_rate * tree.value[leaves]
        return F

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))


def _partition(node_order, members_sorted, go_left, n_total):
    mask = np.zeros(n_total, dtype=bool)
    mask[members_sorted[go_left]] = True
    sel = mask[node_order]
    n_left = int(go_left.sum())
    d = node_order.shape[0]
    left = node_order[sel].reshape(d, n_left)
    right = node_order[~sel].reshape(d, node_order.shape[1] - n_left)
    return left, right


def _node_stats(node_order, resid):
    members = node_order[0]
    return members, float(resid[members].sum())


def _choose_split(X, node_order, resid, l2, min_leaf):
    """Best (feature, threshold, gain) for a node, or None.

    Gain is the score improvement over leaving the node whole; splits
    must improve strictly.  Ties break to the lowest feature index (the
    kernel already breaks threshold ties to the lowest threshold).
    """
    m = node_order.shape[1]
    scores, thrs = _kernels.split_scan(X, node_order, resid, l2, min_leaf)
    best = int(np.argmax(scores))
    if not np.isfinite(scores[best]):
        return None
    _, total = _node_stats(node_order, resid)
    parent_score = total * total / (m + l2)
    gain = float(scores[best]) - parent_score
    if gain <= 0.0:
        return None
    return best, float(thrs[best]), gain


class _RegressionTree:
    """Incremental builder that records leaf membership for F updates."""

    def __init__(self, X, resid, l2, min_leaf):
        self.X = X
        self.resid = resid
        self.l2 = l2
        self.min_leaf = min_leaf
        self.n_total = X.shape[0]
        self.tb = _TreeBuilder()
        self.pending = {}  # node id -> node_order while undecided

    def open_node(self, node_order):
        node = self.tb.new_node()
        self.pending[node] = node_order
        return node

    def split(self, node, f, thr):
        node_order = self.pending.pop(node)
        members = node_order[f]
        go_left = self.X[members, f] <= thr
        lorder, rorder = _partition(
            node_order, members, go_left, self.n_total
        )
        lid = self.open_node(lorder)
        rid = self.open_node(rorder)
        self.tb.set_split(node, f, thr, lid, rid)
        return lid, rid

    def finish(self):
        """Close pending nodes as leaves; returns (Tree, member lists)."""
        feature, threshold, left, right = self.tb.arrays()
        value = np.zeros(feature.shape[0], dtype=np.float64)
        assignments = []
        for node, node_order in sorted(self.pending.items()):
            members, total = _node_stats(node_order, self.resid)
            value[node] = total / (node_order.shape[1] + self.l2)
            assignments.append((node, members))
        tree = Tree(feature, threshold, left, right, value)
        return tree, assignments


def _grow_level_wise(rt: _RegressionTree, root_order, depth, l2, min_leaf):
    frontier = [rt.open_node(root_order)]
    for _ in range(depth):
        next_frontier = []
        for node in frontier:
            choice = _choose_split(
                rt.X, rt.pending[node], rt.resid, l2, min_leaf
            )
            if choice is None:
                continue
            f, thr, _ = choice
            lid, rid = rt.split(node, f, thr)
            next_frontier.append(lid)
            next_frontier.append(rid)
        frontier = next_frontier


def _grow_leaf_wise(rt: _RegressionTree, root_order, max_leaves, l2, min_leaf):
    heap = []
    serial = 0  # creation order; earlier nodes win gain ties

    def consider(node):
        nonlocal serial
        choice = _choose_split(
            rt.X, rt.pending[node], rt.resid, l2, min_leaf
        )
        if choice is not None:
            f, thr, gain = choice
            heapq.heappush(heap, (-gain, serial, node, f, thr))
        serial += 1

    consider(rt.open_node(root_order))
    n_leaves = 1
    while heap and n_leaves < max_leaves:
        _, _, node, f, thr = heapq.heappop(heap)
        lid, rid = rt.split(node, f, thr)
        consider(lid)
        consider(rid)
        n_leaves += 1


def train_gbdt(
    X,
    y,
    variant="level",
    rounds=200,
    learning_rate=0.1,
    depth=3,
    max_leaves=31,
    l2=1.0,
    min_leaf=1,
) -> GbdtModel:
    if variant not in GBDT_VARIANTS:
        raise ConfigError(f"unknown gbdt variant {variant!r}")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if n == 0:
        raise DataError("empty training set")
    if np.unique(y).size < 2:
        raise DataError("single-class input: need >= 2 classes to train")

    Y = np.zeros((n, N_CLASSES), dtype=np.float64)
    Y[np.arange(n), y] = 1.0
    prior = Y.mean(axis=0)
    f0 = np.log(np.clip(prior, _PRIOR_CLIP, None))
    F = np.tile(f0, (n, 1))

    # One global presort; every node works on stably partitioned slices
    # of it, so per-node values arrive already sorted.
    root_order = np.ascontiguousarray(
        np.argsort(X, axis=0, kind="stable").T
    )

    all_trees = []
    for _ in range(rounds):
        P = softmax(F)
        round_trees = []
        for c in range(N_CLASSES):
            resid = Y[:, c] - P[:, c]
            rt = _RegressionTree(X, resid, l2, min_leaf)
            if variant == "level":
                _grow_level_wise(rt, root_order, depth, l2, min_leaf)
            else:
                _grow_leaf_wise(rt, root_order, max_leaves, l2, min_leaf)
            tree, assignments = rt.finish()
            for node, members in assignments:
                F[members, c] += learning_rate * tree.value[node]
            round_trees.append(tree)
        all_trees.append(tuple(round_trees))
    return GbdtModel(
        variant=variant,
        f0=f0,
        trees=tuple(all_trees),
        learning_rate=learning_rate,
    )
