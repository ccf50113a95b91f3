"""Numba dispatch for the hot numeric kernels.

The boosted-tree split scan and the Shapley path recursion are the only
compute-bound inner loops in the package. They are JIT-compiled with numba
when it is importable, unless the environment variable ``MPINDEX_NO_NUMBA``
is set to ``1``/``true``/``yes``, in which case the pure numpy/Python
fallbacks are used instead. Both paths are kept arithmetically identical so
that fitted models and attributions do not depend on which one ran.

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

import os


def _env_disabled() -> bool:
    return os.environ.get("MPINDEX_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}


try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via MPINDEX_NO_NUMBA instead
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _env_disabled()


def njit(*args, **kwargs):
    """``numba.njit`` when the accelerated path is active, identity otherwise."""
    if USE_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap
