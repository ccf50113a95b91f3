"""Polynomial-time Shapley recursion for a single tree.

Walks every root-to-leaf path once while maintaining the "unique path" of
features encountered so far, each with the fraction of subsets that flow
through when the feature is excluded (zero fraction, from covers) or
included (one fraction, following the sample). ``pweights`` tracks the
permutation-weight polynomial so that unwinding any one feature from the
path yields its exact Shapley weight contribution at the leaf.

The recursion carries flat preallocated path buffers; each depth level uses
a disjoint slice, so a buffer of length (max_depth + 2)(max_depth + 3)/2
suffices. Compiled with numba when the accelerated path is active; the same
code runs as plain Python otherwise.
"""

from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit

_EXTEND_SIG = "void(i8[::1], f8[::1], f8[::1], f8[::1], i8, f8, f8, i8)"
_UNWIND_SIG = "void(i8[::1], f8[::1], f8[::1], f8[::1], i8, i8)"
_UNWOUND_SUM_SIG = "f8(i8[::1], f8[::1], f8[::1], f8[::1], i8, i8)"
_RECURSE_SIG = (
    "void(i8[::1], i8[::1], i8[::1], f8[::1], f8[::1], f8[::1], f8[::1], f8[::1],"
    " i8, i8, i8[::1], f8[::1], f8[::1], f8[::1], f8, f8, i8)"
)


def _extend_path(feature_indexes, zero_fractions, one_fractions, pweights,
                 unique_depth, zero_fraction, one_fraction, feature_index):
    feature_indexes[unique_depth] = feature_index
    zero_fractions[unique_depth] = zero_fraction
    one_fractions[unique_depth] = one_fraction
    if unique_depth == 0:
        pweights[unique_depth] = 1.0
    else:
        pweights[unique_depth] = 0.0
    for i in range(unique_depth - 1, -1, -1):
        pweights[i + 1] += one_fraction * pweights[i] * (i + 1) / (unique_depth + 1)
        pweights[i] = zero_fraction * pweights[i] * (unique_depth - i) / (unique_depth + 1)


def _unwind_path(feature_indexes, zero_fractions, one_fractions, pweights,
                 unique_depth, path_index):
    one_fraction = one_fractions[path_index]
    zero_fraction = zero_fractions[path_index]
    next_one_portion = pweights[unique_depth]
    for i in range(unique_depth - 1, -1, -1):
        if one_fraction != 0.0:
            tmp = pweights[i]
            pweights[i] = next_one_portion * (unique_depth + 1) / ((i + 1) * one_fraction)
            next_one_portion = tmp - pweights[i] * zero_fraction * (unique_depth - i) / (unique_depth + 1)
        else:
            pweights[i] = pweights[i] * (unique_depth + 1) / (zero_fraction * (unique_depth - i))
    for i in range(path_index, unique_depth):
        feature_indexes[i] = feature_indexes[i + 1]
        zero_fractions[i] = zero_fractions[i + 1]
        one_fractions[i] = one_fractions[i + 1]


def _unwound_path_sum(feature_indexes, zero_fractions, one_fractions, pweights,
                      unique_depth, path_index):
    one_fraction = one_fractions[path_index]
    zero_fraction = zero_fractions[path_index]
    next_one_portion = pweights[unique_depth]
    total = 0.0
    for i in range(unique_depth - 1, -1, -1):
        if one_fraction != 0.0:
            tmp = next_one_portion * (unique_depth + 1) / ((i + 1) * one_fraction)
            total += tmp
            next_one_portion = pweights[i] - tmp * zero_fraction * (unique_depth - i) / (unique_depth + 1)
        else:
            total += pweights[i] / zero_fraction / ((unique_depth - i) / (unique_depth + 1))
    return total


if USE_NUMBA:
    _extend = njit(_EXTEND_SIG, cache=True)(_extend_path)
    _unwind = njit(_UNWIND_SIG, cache=True)(_unwind_path)
    _unwound_sum = njit(_UNWOUND_SUM_SIG, cache=True)(_unwound_path_sum)
else:
    _extend = _extend_path
    _unwind = _unwind_path
    _unwound_sum = _unwound_path_sum


def tree_shap_recurse(children_left, children_right, features, thresholds,
                      values, covers, x, phi, node_index, unique_depth,
                      parent_fi, parent_zf, parent_of, parent_pw,
                      parent_zero_fraction, parent_one_fraction, parent_feature_index):
    # each depth level owns a fresh disjoint slice of the flat buffers
    feature_indexes = parent_fi[unique_depth + 1:]
    feature_indexes[: unique_depth + 1] = parent_fi[: unique_depth + 1]
    zero_fractions = parent_zf[unique_depth + 1:]
    zero_fractions[: unique_depth + 1] = parent_zf[: unique_depth + 1]
    one_fractions = parent_of[unique_depth + 1:]
    one_fractions[: unique_depth + 1] = parent_of[: unique_depth + 1]
    pweights = parent_pw[unique_depth + 1:]
    pweights[: unique_depth + 1] = parent_pw[: unique_depth + 1]

    _extend(
        feature_indexes, zero_fractions, one_fractions, pweights,
        unique_depth, parent_zero_fraction, parent_one_fraction, parent_feature_index,
    )

    if children_left[node_index] == -1:
        for i in range(1, unique_depth + 1):
            w = _unwound_sum(
                feature_indexes, zero_fractions, one_fractions, pweights,
                unique_depth, i,
            )
            phi[feature_indexes[i]] += (
                w * (one_fractions[i] - zero_fractions[i]) * values[node_index]
            )
        return

    split_index = features[node_index]
    cleft = children_left[node_index]
    cright = children_right[node_index]
    if x[split_index] < thresholds[node_index]:
        hot, cold = cleft, cright
    else:
        hot, cold = cright, cleft
    w = covers[node_index]
    hot_zero_fraction = covers[hot] / w
    cold_zero_fraction = covers[cold] / w
    incoming_zero_fraction = 1.0
    incoming_one_fraction = 1.0

    # a repeated feature on the path is unwound and its fractions folded in
    path_index = 0
    while path_index <= unique_depth:
        if feature_indexes[path_index] == split_index:
            break
        path_index += 1
    if path_index != unique_depth + 1:
        incoming_zero_fraction = zero_fractions[path_index]
        incoming_one_fraction = one_fractions[path_index]
        _unwind(
            feature_indexes, zero_fractions, one_fractions, pweights,
            unique_depth, path_index,
        )
        unique_depth -= 1

    tree_shap_recurse(
        children_left, children_right, features, thresholds, values, covers,
        x, phi, hot, unique_depth + 1,
        feature_indexes, zero_fractions, one_fractions, pweights,
        hot_zero_fraction * incoming_zero_fraction, incoming_one_fraction,
        split_index,
    )
    tree_shap_recurse(
        children_left, children_right, features, thresholds, values, covers,
        x, phi, cold, unique_depth + 1,
        feature_indexes, zero_fractions, one_fractions, pweights,
        cold_zero_fraction * incoming_zero_fraction, 0.0,
        split_index,
    )


if USE_NUMBA:
    tree_shap_recurse = njit(_RECURSE_SIG, cache=True)(tree_shap_recurse)


def node_expectations(children_left, children_right, value, cover) -> np.ndarray:
    """Cover-weighted expectation of the tree output at every node.

    Children always carry higher indices than their parent, so one reverse
    pass suffices. Leaves keep their values.
    """
    out = np.array(value, dtype=np.float64, copy=True)
    for i in range(len(out) - 1, -1, -1):
        l = children_left[i]
        if l == -1:
            continue
        r = children_right[i]
        out[i] = (cover[l] * out[l] + cover[r] * out[r]) / (cover[l] + cover[r])
    return out


def tree_depth(children_left, children_right) -> int:
    depth = [0] * len(children_left)
    best = 0
    for i in range(len(children_left)):
        l = children_left[i]
        if l != -1:
            depth[l] = depth[i] + 1
            depth[children_right[i]] = depth[i] + 1
            best = max(best, depth[i] + 1)
    return best


def single_tree_shap(children_left, children_right, feature, threshold,
                     expectations, cover, x, n_features, max_depth) -> np.ndarray:
    """Exact Shapley contributions of one tree at ``x`` (margin scale)."""
    phi = np.zeros(n_features, dtype=np.float64)
    size = (max_depth + 2) * (max_depth + 3) // 2
    fi = np.zeros(size, dtype=np.int64)
    zf = np.zeros(size, dtype=np.float64)
    of = np.zeros(size, dtype=np.float64)
    pw = np.zeros(size, dtype=np.float64)
    tree_shap_recurse(
        children_left, children_right, feature, threshold, expectations, cover,
        x, phi, 0, 0, fi, zf, of, pw, 1.0, 1.0, -1,
    )
    return phi
