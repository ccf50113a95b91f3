"""From-scratch gradient-boosted trees with a softmax objective.

Per boosting round one regression tree per class is fit to the first- and
second-order gradients of the multiclass cross-entropy. Split search is
exact greedy enumeration over presorted feature values (no histograms);
thresholds are midpoints of adjacent distinct values, ties broken by lowest
feature index then lowest threshold, so training is bit-deterministic.

Every node records its cover (training row count reaching it), which the
explainer uses for cover-weighted conditional expectations.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ._gbdt_kernels import NO_GAIN, scan_split

MODEL_FORMAT = "mpindex-gbdt/1"

# Splits must clear this gain. True zero-gain candidates (pure nodes) carry
# float-accumulation noise around 1e-16..1e-12 that would otherwise make the
# split decision depend on summation order (e.g. under sample duplication).
MIN_SPLIT_GAIN = 1e-10


class GbdtError(Exception):
    pass


@dataclass(frozen=True)
class TrainParams:
    n_rounds: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    l2_leaf_reg: float = 1.0
    min_child_weight: float = 1.0
    feature_subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1 or self.max_depth < 1:
            raise GbdtError("n_rounds and max_depth must be >= 1")
        if self.learning_rate <= 0 or self.l2_leaf_reg < 0:
            raise GbdtError("learning_rate must be > 0 and l2_leaf_reg >= 0")
        if self.min_child_weight < 0:
            raise GbdtError("min_child_weight must be >= 0")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise GbdtError("feature_subsample must be in (0, 1]")


class Tree:
    """Array-of-nodes binary tree; ``children_left[i] == -1`` marks a leaf.

    ``value`` holds learning-rate-scaled leaf outputs (zero on internals);
    ``cover`` holds training row counts and satisfies
    cover(parent) = cover(left) + cover(right) exactly.
    """

    __slots__ = ("children_left", "children_right", "feature", "threshold", "value", "cover")

    def __init__(self, children_left, children_right, feature, threshold, value, cover):
        self.children_left = np.asarray(children_left, dtype=np.int64)
        self.children_right = np.asarray(children_right, dtype=np.int64)
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.value = np.asarray(value, dtype=np.float64)
        self.cover = np.asarray(cover, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return len(self.children_left)

    def predict_rows(self, X: np.ndarray) -> np.ndarray:
        """Leaf value for every row; descent rule is x < threshold -> left."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        rows = np.arange(n)
        while True:
            left = self.children_left[node]
            internal = left != -1
            if not internal.any():
                break
            xv = X[rows, self.feature[node]]
            go_left = internal & (xv < self.threshold[node])
            go_right = internal & ~go_left
            node = np.where(go_left, left, np.where(go_right, self.children_right[node], node))
        return self.value[node]

    def to_dict(self) -> dict:
        return {
            "children_left": self.children_left.tolist(),
            "children_right": self.children_right.tolist(),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "value": self.value.tolist(),
            "cover": self.cover.tolist(),
        }

    @staticmethod
    def from_dict(raw: dict) -> "Tree":
        return Tree(
            raw["children_left"], raw["children_right"], raw["feature"],
            raw["threshold"], raw["value"], raw["cover"],
        )


class TreeEnsemble:
    """Fitted multiclass boosted ensemble: ``rounds`` is rectangular, one tree per class."""

    def __init__(
        self,
        n_classes: int,
        base_score: np.ndarray,
        rounds: list[list[Tree]],
        learning_rate: float,
        params: TrainParams,
        feature_names: tuple[str, ...] | None = None,
        train_loss: list[float] | None = None,
        meta: dict | None = None,
    ):
        if n_classes < 2:
            raise GbdtError("need at least 2 classes")
        for trees in rounds:
            if len(trees) != n_classes:
                raise GbdtError("rounds must hold exactly one tree per class")
        self.n_classes = n_classes
        self.base_score = np.asarray(base_score, dtype=np.float64)
        self.rounds = rounds
        self.learning_rate = learning_rate
        self.params = params
        self.feature_names = tuple(feature_names) if feature_names else None
        self.train_loss = list(train_loss) if train_loss else []
        self.meta = dict(meta) if meta else {}

    @property
    def n_features(self) -> int | None:
        return len(self.feature_names) if self.feature_names else None

    def _check_width(self, X: np.ndarray):
        if self.feature_names is not None and X.shape[-1] != len(self.feature_names):
            raise GbdtError(
                f"expected {len(self.feature_names)} features, got {X.shape[-1]}"
            )

    def predict_margin(self, X) -> np.ndarray:
        """Raw per-class scores: base score plus summed leaf values along each path."""
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        self._check_width(X)
        margins = np.tile(self.base_score, (X.shape[0], 1))
        for trees in self.rounds:
            for k, tree in enumerate(trees):
                margins[:, k] += tree.predict_rows(X)
        return margins[0] if single else margins

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.predict_margin(X))

    def predict_class(self, X) -> np.ndarray | int:
        """Argmax of margins; ties resolve to the lowest class index."""
        margins = self.predict_margin(X)
        if margins.ndim == 1:
            return int(np.argmax(margins))
        return np.argmax(margins, axis=1)

    def to_dict(self) -> dict:
        out = {
            "format": MODEL_FORMAT,
            "n_classes": self.n_classes,
            "base_score": self.base_score.tolist(),
            "learning_rate": self.learning_rate,
            "params": asdict(self.params),
            "train_loss": self.train_loss,
            "rounds": [[t.to_dict() for t in trees] for trees in self.rounds],
        }
        if self.feature_names is not None:
            out["feature_names"] = list(self.feature_names)
        if self.meta:
            out["meta"] = self.meta
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @staticmethod
    def from_dict(raw: dict) -> "TreeEnsemble":
        if raw.get("format") != MODEL_FORMAT:
            raise GbdtError(f"unsupported model format {raw.get('format')!r}")
        return TreeEnsemble(
            n_classes=int(raw["n_classes"]),
            base_score=np.array(raw["base_score"], dtype=np.float64),
            rounds=[[Tree.from_dict(t) for t in trees] for trees in raw["rounds"]],
            learning_rate=float(raw["learning_rate"]),
            params=TrainParams(**raw["params"]),
            feature_names=tuple(raw["feature_names"]) if "feature_names" in raw else None,
            train_loss=[float(x) for x in raw.get("train_loss", [])],
            meta=raw.get("meta"),
        )

    @staticmethod
    def from_json(text: str) -> "TreeEnsemble":
        return TreeEnsemble.from_dict(json.loads(text))


def softmax(margins: np.ndarray) -> np.ndarray:
    m = np.asarray(margins, dtype=np.float64)
    shifted = m - m.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_loss(margins: np.ndarray, y: np.ndarray) -> float:
    shifted = margins - margins.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(y)), y].mean())


class _TreeBuilder:
    """Grows one regression tree on (g, h) by exact greedy splitting."""

    def __init__(self, X, g, h, params: TrainParams, feature_ids: np.ndarray):
        self.X = X
        self.g = g
        self.h = h
        self.p = params
        self.feature_ids = feature_ids
        self.children_left: list[int] = []
        self.children_right: list[int] = []
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.value: list[float] = []
        self.cover: list[float] = []

    def _new_node(self) -> int:
        for arr in (self.children_left, self.children_right, self.feature):
            arr.append(-1)
        self.threshold.append(0.0)
        self.value.append(0.0)
        self.cover.append(0.0)
        return len(self.cover) - 1

    def build(self, idx: np.ndarray, depth: int) -> int:
        node = self._new_node()
        self.cover[node] = float(len(idx))
        g_sum = float(self.g[idx].sum())
        h_sum = float(self.h[idx].sum())
        split = None
        if depth < self.p.max_depth and len(idx) >= 2:
            split = self._best_split(idx)
        if split is None:
            self.value[node] = -g_sum / (h_sum + self.p.l2_leaf_reg) * self.p.learning_rate
            return node
        f, thr = split
        mask = self.X[idx, f] < thr
        left = self.build(idx[mask], depth + 1)
        right = self.build(idx[~mask], depth + 1)
        self.children_left[node] = left
        self.children_right[node] = right
        self.feature[node] = f
        self.threshold[node] = thr
        return node

    def _best_split(self, idx: np.ndarray):
        best_gain = NO_GAIN
        best = None
        for f in self.feature_ids:
            vals = self.X[idx, f]
            order = np.argsort(vals, kind="stable")
            v = np.ascontiguousarray(vals[order])
            g = np.ascontiguousarray(self.g[idx][order])
            h = np.ascontiguousarray(self.h[idx][order])
            gain, thr, left_count = scan_split(
                v, g, h, self.p.l2_leaf_reg, self.p.min_child_weight
            )
            if left_count >= 0 and gain > best_gain:
                best_gain = gain
                best = (int(f), float(thr))
        if best is None or best_gain <= MIN_SPLIT_GAIN:
            return None
        return best

    def finish(self) -> Tree:
        return Tree(
            self.children_left, self.children_right, self.feature,
            self.threshold, self.value, self.cover,
        )


def train(
    X,
    y,
    params: TrainParams = TrainParams(),
    feature_names: Sequence[str] | None = None,
) -> TreeEnsemble:
    """Fit the softmax-objective ensemble.

    Per round and class, gradients are g = p_k - 1[y = k] and hessians
    h = p_k (1 - p_k) at the current margins; leaf values are
    -G/(H + lambda) scaled by the learning rate. The per-round training
    log-loss curve (including the pre-boosting baseline) is recorded on the
    returned ensemble.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise GbdtError("X must be a non-empty 2-D matrix")
    if len(y) != X.shape[0]:
        raise GbdtError("X and y must align")
    if len(np.unique(y)) < 2:
        raise GbdtError("need at least 2 distinct labels")
    if y.min() < 0:
        raise GbdtError("labels must be in 0..K-1")
    n, d = X.shape
    n_classes = int(y.max()) + 1
    if feature_names is not None and len(feature_names) != d:
        raise GbdtError("feature_names must match X width")

    counts = np.bincount(y, minlength=n_classes)
    if (counts == 0).any():
        absent = np.flatnonzero(counts == 0).tolist()
        raise GbdtError(f"classes {absent} have no training rows")
    # Prior log-frequencies: softmax of the base scores reproduces the class
    # distribution, and the value is invariant to sample duplication.
    base = np.log(counts / n)
    margins = np.tile(base, (n, 1))

    rng = np.random.Generator(np.random.Philox(key=params.seed))
    n_sub = max(1, int(round(params.feature_subsample * d)))
    all_features = np.arange(d)

    rounds: list[list[Tree]] = []
    loss_curve = [log_loss(margins, y)]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    for _ in range(params.n_rounds):
        proba = softmax(margins)
        trees = []
        for k in range(n_classes):
            if n_sub < d:
                feats = np.sort(rng.choice(all_features, size=n_sub, replace=False))
            else:
                feats = all_features
            g = np.ascontiguousarray(proba[:, k] - onehot[:, k])
            h = np.ascontiguousarray(proba[:, k] * (1.0 - proba[:, k]))
            builder = _TreeBuilder(X, g, h, params, feats)
            builder.build(np.arange(n), 0)
            tree = builder.finish()
            margins[:, k] += tree.predict_rows(X)
            trees.append(tree)
        rounds.append(trees)
        loss_curve.append(log_loss(margins, y))

    return TreeEnsemble(
        n_classes=n_classes,
        base_score=base,
        rounds=rounds,
        learning_rate=params.learning_rate,
        params=params,
        feature_names=tuple(feature_names) if feature_names is not None else None,
        train_loss=loss_curve,
    )
