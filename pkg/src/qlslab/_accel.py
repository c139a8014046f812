"""Backend selection for the hot kernels.

Every kernel in :mod:`qlslab.kernels` exists twice: a numba ``@njit`` loop
version and a vectorised numpy version. ``QLSLAB_BACKEND=numpy`` (or a
missing numba) selects the numpy path at import time.
"""
from __future__ import annotations

import os

_requested = os.environ.get("QLSLAB_BACKEND", "numba").strip().lower()

try:  # pragma: no cover - exercised implicitly
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _requested != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise.

    The jitted variants are always compiled when numba exists so both paths
    can be benchmarked and cross-checked in one process.
    """
    if not HAS_NUMBA:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)
