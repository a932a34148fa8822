"""Selection between numba-compiled kernels and the pure-numpy fallback.

Set ``UNIONLAP_DISABLE_NUMBA=1`` in the environment before import to force
the numpy path. Both paths produce bit-identical neighbor lists.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("UNIONLAP_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _FLAG not in {"1", "true", "yes", "on"}


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
