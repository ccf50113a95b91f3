"""Shared builders for model-level tests: hand-made trees and random ensembles."""

from __future__ import annotations

import numpy as np

from mpindex.gbdt import TrainParams, Tree, TreeEnsemble


def leaf_tree(value: float, cover: float = 100.0) -> Tree:
    return Tree([-1], [-1], [-1], [0.0], [value], [cover])


def stump(feature: int, threshold: float, left_value: float, right_value: float,
          left_cover: float, right_cover: float) -> Tree:
    return Tree(
        children_left=[1, -1, -1],
        children_right=[2, -1, -1],
        feature=[feature, -1, -1],
        threshold=[threshold, 0.0, 0.0],
        value=[0.0, left_value, right_value],
        cover=[left_cover + right_cover, left_cover, right_cover],
    )


def manual_ensemble(rounds, n_classes=2, base=None) -> TreeEnsemble:
    base = np.zeros(n_classes) if base is None else np.asarray(base, dtype=np.float64)
    return TreeEnsemble(
        n_classes=n_classes,
        base_score=base,
        rounds=rounds,
        learning_rate=1.0,
        params=TrainParams(n_rounds=max(len(rounds), 1)),
        feature_names=None,
    )


def random_tree(rng: np.random.Generator, n_features: int, max_depth: int, cover: float) -> Tree:
    children_left, children_right = [], []
    feature, threshold, value, covers = [], [], [], []

    def build(depth: int, cov: float) -> int:
        node = len(covers)
        for arr in (children_left, children_right, feature):
            arr.append(-1)
        threshold.append(0.0)
        value.append(0.0)
        covers.append(cov)
        if depth >= max_depth or cov < 2 or rng.random() < 0.25:
            value[node] = float(rng.uniform(-3.0, 3.0))
            return node
        feature[node] = int(rng.integers(0, n_features))
        threshold[node] = float(rng.uniform(-1.0, 1.0))
        left_cov = float(rng.integers(1, int(cov)))
        children_left[node] = build(depth + 1, left_cov)
        children_right[node] = build(depth + 1, cov - left_cov)
        return node

    build(0, cover)
    return Tree(children_left, children_right, feature, threshold, value, covers)


def random_ensemble(rng: np.random.Generator, n_features: int, total_trees: int,
                    max_depth: int, n_classes: int = 2) -> TreeEnsemble:
    n_rounds = max(1, total_trees // n_classes)
    rounds = [
        [random_tree(rng, n_features, max_depth, cover=float(rng.integers(20, 200))) for _ in range(n_classes)]
        for _ in range(n_rounds)
    ]
    base = rng.uniform(-1.0, 1.0, size=n_classes)
    return manual_ensemble(rounds, n_classes=n_classes, base=base)


def banded_labels(X: np.ndarray, weights, cuts=(0.3, 0.6)) -> np.ndarray:
    """Deterministic 3-band labels from a weighted threshold rule on columns."""
    score = X @ np.asarray(weights)
    return np.digitize(score, cuts)
