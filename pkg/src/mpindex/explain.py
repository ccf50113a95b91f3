"""Exact Shapley attribution for the boosted-tree ensemble.

Attributions are on the margin (pre-softmax) scale, where additivity is
exact: for every class, base value plus the per-feature contributions
equals the model margin. The conditional expectation behind the game is
path-dependent - traversal follows the sample for features in the coalition
and mixes children by cover fractions for features outside it - and
:func:`brute_force_shap` evaluates the same game by explicit subset
enumeration, serving as the correctness oracle for :func:`tree_shap`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._shap_kernels import node_expectations, single_tree_shap, tree_depth
from .gbdt import Tree, TreeEnsemble

BRUTE_FORCE_MAX_FEATURES = 15


class ExplainError(Exception):
    pass


@dataclass(frozen=True)
class ShapAttribution:
    feature_names: tuple[str, ...]
    base_values: np.ndarray  # (K,) expected margin per class
    phi: np.ndarray  # (n_features, K)
    margin: np.ndarray  # (K,)

    def check_local_accuracy(self, tol: float = 1e-6) -> float:
        """Max | base + sum(phi) - margin | across classes."""
        residual = self.base_values + self.phi.sum(axis=0) - self.margin
        err = float(np.abs(residual).max())
        if err > tol:
            raise ExplainError(f"local accuracy violated: {err} > {tol}")
        return err

    def to_json(self) -> str:
        return json.dumps(
            {
                "base_values": self.base_values.tolist(),
                "features": [
                    {"name": name, "phi_per_class": self.phi[j].tolist()}
                    for j, name in enumerate(self.feature_names)
                ],
                "margins": self.margin.tolist(),
            }
        )


@dataclass(frozen=True)
class GlobalImportance:
    """Mean |phi| per feature over a dataset and all classes, ranked descending."""

    entries: tuple[tuple[str, float], ...]  # (feature, value), descending

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.entries]

    def to_json(self) -> str:
        return json.dumps(
            {"ranking": [{"name": n, "mean_abs_phi": v} for n, v in self.entries]}
        )


def _require_covers(model: TreeEnsemble):
    for trees in model.rounds:
        for tree in trees:
            if tree.cover[0] <= 0:
                raise ExplainError("model lacks cover counts; cannot attribute")


def _names(model: TreeEnsemble, width: int) -> tuple[str, ...]:
    if model.feature_names is not None:
        return tuple(model.feature_names)
    return tuple(f"f{j}" for j in range(width))


def _prepared_trees(model: TreeEnsemble):
    """Per-tree expectation arrays and depths, computed once per ensemble."""
    prep = getattr(model, "_shap_prep", None)
    if prep is None:
        prep = [
            [
                (
                    tree,
                    node_expectations(tree.children_left, tree.children_right, tree.value, tree.cover),
                    tree_depth(tree.children_left, tree.children_right),
                )
                for tree in trees
            ]
            for trees in model.rounds
        ]
        model._shap_prep = prep
    return prep


def tree_shap(model: TreeEnsemble, x) -> ShapAttribution:
    """Exact Shapley values of the path-dependent game, summed across trees."""
    x = np.array(x, dtype=np.float64, copy=True)  # kernels need writable contiguous input
    if x.ndim != 1:
        raise ExplainError("x must be a single sample")
    if model.n_features is not None and len(x) != model.n_features:
        raise ExplainError(f"expected {model.n_features} features, got {len(x)}")
    _require_covers(model)
    d = len(x)
    phi = np.zeros((d, model.n_classes))
    base = np.array(model.base_score, dtype=np.float64, copy=True)
    for trees in _prepared_trees(model):
        for k, (tree, exp, depth) in enumerate(trees):
            base[k] += exp[0]
            phi[:, k] += single_tree_shap(
                tree.children_left, tree.children_right, tree.feature, tree.threshold,
                exp, tree.cover, x, d, depth,
            )
    return ShapAttribution(_names(model, d), base, phi, np.asarray(model.predict_margin(x)))


def _tree_values_by_mask(tree: Tree, x: np.ndarray, n_features: int) -> np.ndarray:
    """Path-dependent expectation of one tree for every feature subset.

    Entry ``m`` is the traversal value when exactly the features whose bits
    are set in ``m`` follow the sample and the rest mix by cover fractions.
    """
    n_masks = 1 << n_features
    masks = np.arange(n_masks)

    def rec(node: int) -> np.ndarray:
        if tree.children_left[node] == -1:
            return np.full(n_masks, tree.value[node])
        f = int(tree.feature[node])
        l, r = int(tree.children_left[node]), int(tree.children_right[node])
        vl, vr = rec(l), rec(r)
        hot = vl if x[f] < tree.threshold[node] else vr
        mix = (tree.cover[l] * vl + tree.cover[r] * vr) / (tree.cover[l] + tree.cover[r])
        in_coalition = (masks >> f) & 1 == 1
        return np.where(in_coalition, hot, mix)

    return rec(0)


def brute_force_shap(model: TreeEnsemble, x) -> ShapAttribution:
    """Literal weighted subset sum over all coalitions; the oracle for tree_shap.

    Refuses more than 15 features (2^|F| enumeration).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    d = len(x)
    if d > BRUTE_FORCE_MAX_FEATURES:
        raise ExplainError(f"{d} features exceeds brute-force limit of {BRUTE_FORCE_MAX_FEATURES}")
    if model.n_features is not None and d != model.n_features:
        raise ExplainError(f"expected {model.n_features} features, got {d}")
    _require_covers(model)
    n_masks = 1 << d
    masks = np.arange(n_masks)
    sizes = np.zeros(n_masks, dtype=np.int64)
    for j in range(d):
        sizes += (masks >> j) & 1

    # v[k][m]: ensemble margin for class k under coalition mask m
    v = np.tile(model.base_score.astype(np.float64), (n_masks, 1)).T.copy()
    for trees in model.rounds:
        for k, tree in enumerate(trees):
            v[k] += _tree_values_by_mask(tree, x, d)

    fact = [math.factorial(i) for i in range(d + 1)]
    weight_by_size = np.array(
        [fact[s] * fact[d - s - 1] / fact[d] for s in range(d)], dtype=np.float64
    )
    phi = np.zeros((d, model.n_classes))
    for j in range(d):
        without_j = masks[(masks >> j) & 1 == 0]
        w = weight_by_size[sizes[without_j]]
        for k in range(model.n_classes):
            gains = v[k][without_j | (1 << j)] - v[k][without_j]
            phi[j, k] = float(np.dot(w, gains))

    base = v[:, 0].copy()  # empty coalition = expected margin
    return ShapAttribution(_names(model, d), base, phi, np.asarray(model.predict_margin(x)))


def global_importance(model: TreeEnsemble, X, feature_names: Sequence[str] | None = None) -> GlobalImportance:
    """Mean over samples and classes of |phi|, ranked descending (ties by column order)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ExplainError("X must be a non-empty 2-D matrix")
    d = X.shape[1]
    totals = np.zeros(d)
    for i in range(X.shape[0]):
        attr = tree_shap(model, X[i])
        totals += np.abs(attr.phi).mean(axis=1)
    means = totals / X.shape[0]
    names = tuple(feature_names) if feature_names is not None else _names(model, d)
    order = sorted(range(d), key=lambda j: (-means[j], j))
    return GlobalImportance(tuple((names[j], float(means[j])) for j in order))


@dataclass(frozen=True)
class WaterfallRow:
    feature: str | None  # None for the base row
    contribution: float
    running_total: float


def waterfall(attr: ShapAttribution, class_index: int) -> list[WaterfallRow]:
    """Ordered decomposition from base value to margin for one class.

    Features sorted by |phi| descending (ties by column order); exact zeros
    are omitted, so an all-zero attribution reduces to the base row.
    """
    if not 0 <= class_index < len(attr.base_values):
        raise ExplainError(f"class index {class_index} out of range")
    base = float(attr.base_values[class_index])
    rows = [WaterfallRow(None, base, base)]
    contribs = attr.phi[:, class_index]
    order = sorted(range(len(contribs)), key=lambda j: (-abs(contribs[j]), j))
    total = base
    for j in order:
        c = float(contribs[j])
        if c == 0.0:
            continue
        total += c
        rows.append(WaterfallRow(attr.feature_names[j], c, total))
    return rows


def waterfall_to_dict(attr: ShapAttribution, class_index: int) -> dict:
    rows = waterfall(attr, class_index)
    return {
        "class_index": class_index,
        "base_value": rows[0].running_total,
        "margin": float(attr.margin[class_index]),
        "rows": [
            {"feature": r.feature, "contribution": r.contribution, "running_total": r.running_total}
            for r in rows[1:]
        ],
    }
