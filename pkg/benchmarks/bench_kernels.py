"""Benchmark the JIT kernels against their pure numpy/Python fallbacks.

Run: python benchmarks/bench_kernels.py

Covers the two hot paths: the boosted-tree split scan (numba loop vs
vectorised numpy) and the Shapley path recursion (numba vs plain Python),
plus whole-model training and per-sample attribution to show end-to-end
impact. The library selects between the same implementations at import time
via MPINDEX_NO_NUMBA.
"""

import time

import numpy as np

from mpindex._gbdt_kernels import _scan_split_loop, _scan_split_numpy
from mpindex._jit import USE_NUMBA, njit
from mpindex._shap_kernels import (
    _RECURSE_SIG,
    node_expectations,
    single_tree_shap,
    tree_depth,
    tree_shap_recurse,
)


def timeit(fn, *args, repeat=5, number=20):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def bench_split_scan():
    print("== split scan (one presorted feature) ==")
    rng = np.random.default_rng(0)
    for n in (1_000, 10_000, 100_000):
        v = np.sort(rng.uniform(0, 1, n))
        g = np.ascontiguousarray(rng.normal(size=n))
        h = np.ascontiguousarray(rng.uniform(0.05, 0.25, n))
        args = (v, g, h, 1.0, 1.0)
        jit_fn = njit("Tuple((f8, f8, i8))(f8[::1], f8[::1], f8[::1], f8, f8)", cache=True)(
            _scan_split_loop
        ) if USE_NUMBA else _scan_split_loop
        jit_fn(*args)  # compile
        t_jit = timeit(jit_fn, *args)
        t_np = timeit(_scan_split_numpy, *args)
        agree = jit_fn(*args) == _scan_split_numpy(*args)
        label = "numba" if USE_NUMBA else "python-loop"
        print(f"n={n:>7}: {label} {t_jit * 1e6:9.1f} us | numpy {t_np * 1e6:9.1f} us | "
              f"identical={agree}")


def bench_tree_shap():
    print("== Shapley recursion (depth-4 tree, 14 features) ==")
    from helpers_bench import build_tree

    tree = build_tree(seed=1, n_features=14, max_depth=4, cover=1500.0)
    cl, cr, feat, thr, val, cov = tree
    exp = node_expectations(cl, cr, val, cov)
    depth = tree_depth(cl, cr)
    x = np.random.default_rng(2).uniform(0, 1, 14)

    t = timeit(single_tree_shap, cl, cr, feat, thr, exp, cov, x, 14, depth, number=200)
    mode = "numba" if USE_NUMBA else "python"
    print(f"single tree: {mode} {t * 1e6:9.1f} us/call")


def bench_end_to_end():
    print("== end to end (train 40x3 trees, explain 50 samples) ==")
    from mpindex.explain import tree_shap
    from mpindex.gbdt import TrainParams, train

    rng = np.random.default_rng(3)
    X = rng.uniform(0, 1, size=(1500, 14))
    y = np.digitize((X[:, :5] > 0.5) @ np.array([0.35, 0.25, 0.2, 0.15, 0.05]), [0.3, 0.6])
    t0 = time.perf_counter()
    model = train(X, y, TrainParams(n_rounds=40, max_depth=4))
    t_train = time.perf_counter() - t0
    t0 = time.perf_counter()
    for i in range(50):
        tree_shap(model, X[i])
    t_shap = (time.perf_counter() - t0) / 50
    mode = "numba" if USE_NUMBA else "fallback"
    print(f"{mode}: train {t_train:6.2f} s | attribution {t_shap * 1e3:7.2f} ms/sample")


if __name__ == "__main__":
    print(f"numba active: {USE_NUMBA} (set MPINDEX_NO_NUMBA=1 for the fallback path)\n")
    bench_split_scan()
    bench_tree_shap()
    bench_end_to_end()
