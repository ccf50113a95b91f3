"""Tree builder for benchmarks: random structure with consistent covers."""

import numpy as np


def build_tree(seed: int, n_features: int, max_depth: int, cover: float):
    rng = np.random.default_rng(seed)
    children_left, children_right = [], []
    feature, threshold, value, covers = [], [], [], []

    def build(depth: int, cov: float) -> int:
        node = len(covers)
        for arr in (children_left, children_right, feature):
            arr.append(-1)
        threshold.append(0.0)
        value.append(0.0)
        covers.append(cov)
        if depth >= max_depth or cov < 2:
            value[node] = float(rng.uniform(-1, 1))
            return node
        feature[node] = int(rng.integers(0, n_features))
        threshold[node] = float(rng.uniform(0, 1))
        left = float(rng.integers(1, int(cov)))
        children_left[node] = build(depth + 1, left)
        children_right[node] = build(depth + 1, cov - left)
        return node

    build(0, cover)
    return (
        np.array(children_left, dtype=np.int64),
        np.array(children_right, dtype=np.int64),
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(value, dtype=np.float64),
        np.array(covers, dtype=np.float64),
    )
