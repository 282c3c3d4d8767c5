"""Classifiers sharing a ``fit(X, y, names)`` / ``predict(X)`` interface."""

from __future__ import annotations

from typing import Callable

from .benchmark import BenchmarkRule, benchmark_rule
from .forest import Forest, ForestClassifier, fit_forest, importance_mdg, predict_forest
from .lasso import LassoClassifier, LassoModel, fit_lasso, fit_lasso_at, lasso_path
from .tree import Leaf, Split, Tree, TreeClassifier, fit_tree, prune_tree

LEARNERS: dict[str, Callable] = {
    "forest": ForestClassifier,
    "tree": TreeClassifier,
    "lasso": LassoClassifier,
    "benchmark": BenchmarkRule,
}


def make_learner(kind: str, seed: int = 0, **params):
    try:
        cls = LEARNERS[kind]
    except KeyError:
        raise KeyError(f"unknown learner {kind!r}; choose from {sorted(LEARNERS)}") from None
    return cls(seed=seed, **params)


__all__ = [
    "BenchmarkRule", "Forest", "ForestClassifier", "LEARNERS", "LassoClassifier", "LassoModel", "Leaf",
    "Split", "Tree", "TreeClassifier", "benchmark_rule", "fit_forest", "fit_lasso", "fit_lasso_at",
    "fit_tree", "importance_mdg", "lasso_path", "make_learner", "predict_forest", "prune_tree",
]
