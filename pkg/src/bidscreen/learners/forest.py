"""Random forest of Gini trees with mean-decrease-in-Gini importance."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, EmptyTrainingSet
from .tree import Tree, fit_tree

DEFAULT_TREES = 1000


def default_mtry(p: int) -> int:
    return max(1, math.floor(math.sqrt(p)))


def _tree_streams(seed: int, index: int, n: int):
    # one generator per (seed, tree) so thread scheduling cannot change results
    rng = np.random.default_rng([int(seed) % (2 ** 63), index])
    boot = rng.integers(0, n, size=n)
    return boot, int(rng.integers(0, 2 ** 31 - 1))


@dataclass(frozen=True)
class Forest:
    trees: tuple[Tree, ...]
    n_trees: int
    mtry: int
    seed: int
    n_features: int
    min_leaf: int = 1

    def votes(self, X) -> np.ndarray:
        """Share of trees voting collusive for each row."""
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"forest expects {self.n_features} predictors, got {X.shape[1]}")
        total = np.zeros(X.shape[0])
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)

    def predict(self, X) -> np.ndarray:
        # an exact half of the votes counts as competitive
        return (self.votes(X) > 0.5).astype(np.int64)

    def mdg(self) -> np.ndarray:
        return np.mean([t.mdg() for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {"n_trees": self.n_trees, "mtry": self.mtry, "seed": self.seed,
                "n_features": self.n_features, "min_leaf": self.min_leaf,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        return cls(tuple(Tree.from_dict(t) for t in d["trees"]), d["n_trees"], d["mtry"], d["seed"],
                   d["n_features"], d.get("min_leaf", 1))


def fit_forest(X, y, n_trees: int = DEFAULT_TREES, mtry: int | None = None, min_leaf: int = 1,
               max_depth: int | None = None, seed: int = 0, threads: int | None = 1) -> Forest:
    """Bootstrap-aggregated trees with ``mtry`` predictors tried per split.

    Each tree sees ``n`` rows drawn with replacement. ``threads=None`` uses
    all cores; results do not depend on the thread count.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise EmptyTrainingSet("no training rows")
    n, p = X.shape
    mtry = default_mtry(p) if mtry is None else int(mtry)

    def grow(i):
        boot, tseed = _tree_streams(seed, i, n)
        return fit_tree(X, y, min_leaf=min_leaf, max_depth=max_depth, mtry=mtry, seed=tseed,
                        sample_idx=boot)

    workers = (os.cpu_count() or 1) if threads is None else max(1, int(threads))
    if workers == 1:
        trees = [grow(i) for i in range(n_trees)]
    else:
        with ThreadPoolExecutor(workers) as ex:
            trees = list(ex.map(grow, range(n_trees)))
    return Forest(tuple(trees), n_trees, mtry, int(seed), p, min_leaf)


def predict_forest(f: Forest, x) -> tuple[int, float]:
    """Class and collusive vote share for a single predictor vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch("predict_forest takes one vector; use Forest.predict for matrices")
    share = float(f.votes(x)[0])
    return int(share > 0.5), share


def importance_mdg(f: Forest, names=None) -> list[tuple[str, float]]:
    """Predictors ranked by mean decrease in Gini, highest first (ties keep column order)."""
    mdg = f.mdg()
    names = [f"x{j}" for j in range(mdg.size)] if names is None else list(names)
    order = np.argsort(-mdg, kind="stable")
    return [(names[j], float(mdg[j])) for j in order]


class ForestClassifier:
    def __init__(self, n_trees: int = DEFAULT_TREES, mtry: int | None = None, min_leaf: int = 1,
                 max_depth: int | None = None, seed: int = 0, threads: int | None = 1):
        self.n_trees = n_trees
        self.mtry = mtry
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self.seed = seed
        self.threads = threads

    def fit(self, X, y, names=None) -> "ForestClassifier":
        self.forest_ = fit_forest(X, y, n_trees=self.n_trees, mtry=self.mtry, min_leaf=self.min_leaf,
                                  max_depth=self.max_depth, seed=self.seed, threads=self.threads)
        self.importances_ = self.forest_.mdg()
        return self

    def predict(self, X) -> np.ndarray:
        return self.forest_.predict(X)

    def votes(self, X) -> np.ndarray:
        return self.forest_.votes(X)
