"""Binary classification trees grown on the Gini criterion, with cost-complexity pruning.

Trees are stored as flat arrays (node ``i`` has ``feature[i]``,
``threshold[i]``, ``left[i]``, ``right[i]``); :attr:`Tree.root` rebuilds the
nested :class:`Leaf` / :class:`Split` view on demand. Rows with
``x[feature] <= threshold`` go left.

Tie rules: among equally good splits the lower predictor index wins, then the
lower threshold; a leaf with equal class counts predicts 0 (competitive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numba import njit

from ..errors import DimensionMismatch, EmptyTrainingSet


@njit(cache=True, nogil=True)
def _grow(X, y, samples, mtry, min_leaf, max_depth, seed):
    np.random.seed(seed)
    n_total = samples.size
    p = X.shape[1]
    cap = 2 * n_total + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    counts = np.zeros((cap, 2))
    decrease = np.zeros(cap)
    n_node = np.zeros(cap, np.int64)

    samples = samples.copy()
    st_node = np.zeros(cap, np.int64)
    st_start = np.zeros(cap, np.int64)
    st_end = np.zeros(cap, np.int64)
    st_depth = np.zeros(cap, np.int64)
    sp = 1
    st_end[0] = n_total
    node_count = 1
    feats = np.arange(p)
    vals = np.empty(n_total)
    tmp = np.empty(n_total, np.int64)

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        nn = end - start
        c1 = 0
        for i in range(start, end):
            c1 += y[samples[i]]
        c0 = nn - c1
        counts[node, 0] = c0
        counts[node, 1] = c1
        n_node[node] = nn
        if c0 == 0 or c1 == 0 or nn < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue
        parent = 1.0 - (c0 / nn) ** 2 - (c1 / nn) ** 2

        if mtry >= p:
            cand = feats.copy()
        else:
            for i in range(mtry):
                j = i + np.random.randint(0, p - i)
                t = feats[i]
                feats[i] = feats[j]
                feats[j] = t
            cand = np.sort(feats[:mtry])

        best_dec = -1.0
        best_f = -1
        best_thr = 0.0
        for f in cand:
            for i in range(nn):
                vals[i] = X[samples[start + i], f]
            order = np.argsort(vals[:nn], kind="mergesort")
            l0 = 0
            l1 = 0
            for i in range(nn - 1):
                if y[samples[start + order[i]]] == 1:
                    l1 += 1
                else:
                    l0 += 1
                v_lo = vals[order[i]]
                v_hi = vals[order[i + 1]]
                if v_lo == v_hi:
                    continue
                nl = i + 1
                nr = nn - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                r0 = c0 - l0
                r1 = c1 - l1
                gl = 1.0 - (l0 / nl) ** 2 - (l1 / nl) ** 2
                gr = 1.0 - (r0 / nr) ** 2 - (r1 / nr) ** 2
                dec = parent - (nl / nn) * gl - (nr / nn) * gr
                if dec > best_dec:
                    best_dec = dec
                    best_f = f
                    thr = 0.5 * (v_lo + v_hi)
                    if thr >= v_hi:
                        thr = v_lo
                    best_thr = thr
        if best_f < 0:
            continue

        # partition samples[start:end] on the chosen split
        nl = 0
        for i in range(start, end):
            if X[samples[i], best_f] <= best_thr:
                tmp[nl] = samples[i]
                nl += 1
        k = nl
        for i in range(start, end):
            if X[samples[i], best_f] > best_thr:
                tmp[k] = samples[i]
                k += 1
        for i in range(nn):
            samples[start + i] = tmp[i]

        feature[node] = best_f
        threshold[node] = best_thr
        decrease[node] = max(best_dec, 0.0)
        lc = node_count
        rc = node_count + 1
        node_count += 2
        left[node] = lc
        right[node] = rc
        st_node[sp] = rc
        st_start[sp] = start + nl
        st_end[sp] = end
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = lc
        st_start[sp] = start
        st_end[sp] = start + nl
        st_depth[sp] = depth + 1
        sp += 1

    m = node_count
    return (feature[:m].copy(), threshold[:m].copy(), left[:m].copy(), right[:m].copy(),
            counts[:m].copy(), decrease[:m].copy(), n_node[:m].copy())


@njit(cache=True, nogil=True)
def _apply(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], np.int64)
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


@dataclass(frozen=True)
class Leaf:
    predicted_class: int
    class_counts: tuple[float, float]


@dataclass(frozen=True)
class Split:
    predictor_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    gini_decrease: float


TreeNode = Union[Leaf, Split]


def node_gini(counts) -> float:
    c = np.asarray(counts, dtype=float)
    tot = c.sum()
    if tot == 0:
        return 0.0
    q = c / tot
    return float(1.0 - np.sum(q * q))


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    decrease: np.ndarray
    n_node: np.ndarray
    n_features: int

    @property
    def node_count(self) -> int:
        return self.feature.size

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.is_leaf))

    @property
    def node_class(self) -> np.ndarray:
        # equal counts resolve to class 0
        return (self.counts[:, 1] > self.counts[:, 0]).astype(np.int64)

    def depth(self) -> int:
        def d(i):
            return 0 if self.feature[i] < 0 else 1 + max(d(self.left[i]), d(self.right[i]))
        return d(0)

    def _check(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"tree expects {self.n_features} predictors, got {X.shape[1]}")
        return X

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        return _apply(self.feature, self.threshold, self.left, self.right, self._check(X))

    def predict(self, X) -> np.ndarray:
        return self.node_class[self.apply(X)]

    def mdg(self) -> np.ndarray:
        """Per-predictor Gini decrease weighted by node sample fraction."""
        out = np.zeros(self.n_features)
        split = self.feature >= 0
        w = self.n_node[split] / self.n_node[0]
        np.add.at(out, self.feature[split], self.decrease[split] * w)
        return out

    @property
    def root(self) -> TreeNode:
        def build(i):
            if self.feature[i] < 0:
                c = self.counts[i]
                return Leaf(int(self.node_class[i]), (float(c[0]), float(c[1])))
            return Split(int(self.feature[i]), float(self.threshold[i]), build(self.left[i]),
                         build(self.right[i]), float(self.decrease[i]))
        return build(0)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
            "left": self.left.tolist(), "right": self.right.tolist(),
            "counts": self.counts.tolist(), "decrease": self.decrease.tolist(),
            "n_node": self.n_node.tolist(), "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(np.array(d["feature"], np.int64), np.array(d["threshold"], float),
                   np.array(d["left"], np.int64), np.array(d["right"], np.int64),
                   np.array(d["counts"], float).reshape(-1, 2), np.array(d["decrease"], float),
                   np.array(d["n_node"], np.int64), int(d["n_features"]))


def fit_tree(X, y, min_leaf: int = 5, max_depth: int | None = None, mtry: int | None = None,
             seed: int = 0, sample_idx=None) -> Tree:
    """Grow a tree greedily on Gini decrease.

    Growth stops at pure nodes, nodes smaller than ``2 * min_leaf``, or
    ``max_depth``. ``mtry`` (default: all predictors) is the number of
    predictors sampled without replacement at each split; ``sample_idx``
    lets a caller pass bootstrap row indices (duplicates allowed).
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("no training rows")
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch("X and y have different row counts")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    p = X.shape[1]
    mtry = p if mtry is None else max(1, min(int(mtry), p))
    samples = np.arange(X.shape[0], dtype=np.int64) if sample_idx is None else \
        np.asarray(sample_idx, dtype=np.int64)
    if samples.size == 0:
        raise EmptyTrainingSet("empty sample index")
    arrays = _grow(X, y, samples, mtry, max(1, int(min_leaf)),
                   -1 if max_depth is None else int(max_depth), int(seed) % (2 ** 31))
    return Tree(*arrays, n_features=p)


# ------------------------------------------------------------------ pruning

def _subtree_stats(tree: Tree, collapsed: np.ndarray):
    """Leaf count and resubstitution error of the subtree under every node."""
    n = tree.node_count
    node_err = tree.n_node - tree.counts.max(axis=1)
    leaves = np.zeros(n, np.int64)
    sub_err = np.zeros(n)
    # children always have larger indices than their parent
    for i in range(n - 1, -1, -1):
        if tree.feature[i] < 0 or collapsed[i]:
            leaves[i] = 1
            sub_err[i] = node_err[i]
        else:
            l, r = tree.left[i], tree.right[i]
            leaves[i] = leaves[l] + leaves[r]
            sub_err[i] = sub_err[l] + sub_err[r]
    return node_err, leaves, sub_err


def _reachable_internal(tree: Tree, collapsed: np.ndarray) -> list[int]:
    out, stack = [], [0]
    while stack:
        i = stack.pop()
        if tree.feature[i] < 0 or collapsed[i]:
            continue
        out.append(i)
        stack.extend((tree.left[i], tree.right[i]))
    return out


def pruning_sequence(tree: Tree) -> list[tuple[float, np.ndarray]]:
    """Weakest-link sequence ``[(alpha_k, collapsed_mask_k), ...]`` with increasing alpha.

    Errors are misclassification counts divided by the root sample size. The
    last entry is the root alone.
    """
    n_root = tree.n_node[0]
    eps = 1e-12
    collapsed = np.zeros(tree.node_count, bool)

    def weakest():
        internal = _reachable_internal(tree, collapsed)
        if not internal:
            return internal, None
        node_err, leaves, sub_err = _subtree_stats(tree, collapsed)
        g = np.array([(node_err[i] - sub_err[i]) / n_root / (leaves[i] - 1) for i in internal])
        return internal, g

    # smallest subtree with the full tree's training error
    internal, g = weakest()
    while internal and g.min() <= eps:
        for i, gi in zip(internal, g):
            if gi <= eps:
                collapsed[i] = True
        internal, g = weakest()
    seq = [(0.0, collapsed.copy())]
    while internal:
        g_min = float(g.min())
        for i, gi in zip(internal, g):
            if gi <= g_min + eps:
                collapsed[i] = True
        seq.append((g_min, collapsed.copy()))
        internal, g = weakest()
    return seq


def collapse(tree: Tree, collapsed: np.ndarray) -> Tree:
    """Compact copy of ``tree`` with the masked internal nodes turned into leaves."""
    keep, stack = [], [0]
    while stack:
        i = stack.pop()
        keep.append(i)
        if tree.feature[i] >= 0 and not collapsed[i]:
            stack.extend((tree.right[i], tree.left[i]))
    keep.sort()
    remap = {old: new for new, old in enumerate(keep)}
    k = np.array(keep)
    feature = tree.feature[k].copy()
    left = np.full(k.size, -1, np.int64)
    right = np.full(k.size, -1, np.int64)
    decrease = tree.decrease[k].copy()
    for new, old in enumerate(keep):
        if tree.feature[old] >= 0 and not collapsed[old]:
            left[new] = remap[tree.left[old]]
            right[new] = remap[tree.right[old]]
        else:
            feature[new] = -1
            decrease[new] = 0.0
    threshold = np.where(feature >= 0, tree.threshold[k], 0.0)
    return Tree(feature, threshold, left, right, tree.counts[k].copy(), decrease,
                tree.n_node[k].copy(), tree.n_features)


def _at_alpha(seq, alpha: float) -> np.ndarray:
    mask = seq[0][1]
    for a, m in seq:
        if a <= alpha + 1e-15:
            mask = m
        else:
            break
    return mask


@dataclass(frozen=True)
class PruneResult:
    tree: Tree
    alpha: float
    alphas: np.ndarray
    cv_error: np.ndarray


def prune_tree(tree: Tree, X, y, folds: int = 10, seed: int = 0, min_leaf: int = 5,
               max_depth: int | None = None) -> PruneResult:
    """Cost-complexity pruning with the penalty chosen by k-fold cross-validation.

    ``tree`` must have been grown on ``(X, y)`` with the same ``min_leaf`` and
    ``max_depth``. Candidate penalties are the geometric midpoints of the
    full tree's weakest-link sequence; the one with the smallest
    cross-validated misclassification count wins, ties going to the larger
    penalty (smaller tree).
    """
    if folds < 2:
        raise ValueError("folds must be at least 2")
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y).astype(np.int64)
    n = X.shape[0]
    folds = min(folds, n)
    seq = pruning_sequence(tree)
    alphas = np.array([a for a, _ in seq])
    cand = np.empty(alphas.size)
    for i in range(alphas.size - 1):
        cand[i] = math.sqrt(alphas[i] * alphas[i + 1])
    cand[-1] = alphas[-1]

    perm = np.random.default_rng(seed).permutation(n)
    errors = np.zeros(cand.size)
    for hold in np.array_split(perm, folds):
        train = np.setdiff1d(perm, hold, assume_unique=True)
        if train.size == 0 or hold.size == 0:
            continue
        t = fit_tree(X[train], y[train], min_leaf=min_leaf, max_depth=max_depth)
        fseq = pruning_sequence(t)
        for c, a in enumerate(cand):
            sub = collapse(t, _at_alpha(fseq, a))
            errors[c] += np.sum(sub.predict(X[hold]) != y[hold])
    cv_error = errors / n
    best = int(np.flatnonzero(errors == errors.min())[-1])
    pruned = collapse(tree, _at_alpha(seq, cand[best]))
    return PruneResult(pruned, float(cand[best]), cand, cv_error)


class TreeClassifier:
    """Single CART tree, optionally pruned by cross-validated cost complexity."""

    def __init__(self, min_leaf: int = 5, max_depth: int | None = None, prune: bool = True,
                 folds: int = 10, seed: int = 0):
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.prune = prune
        self.folds = folds
        self.seed = seed

    def fit(self, X, y, names=None) -> "TreeClassifier":
        self.names_ = tuple(names) if names is not None else None
        tree = fit_tree(X, y, min_leaf=self.min_leaf, max_depth=self.max_depth)
        if self.prune and tree.node_count > 1:
            res = prune_tree(tree, X, y, folds=self.folds, seed=self.seed,
                             min_leaf=self.min_leaf, max_depth=self.max_depth)
            tree = res.tree
            self.alpha_ = res.alpha
        self.tree_ = tree
        self.importances_ = tree.mdg()
        return self

    def predict(self, X) -> np.ndarray:
        return self.tree_.predict(X)
