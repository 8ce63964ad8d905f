"""Optional numba acceleration for the hot inner loops.

Set ``NMQO_DISABLE_NUMBA=1`` to run every kernel as plain Python/NumPy.
The flag is read once at import time.
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("NMQO_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


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
    return "numba" if HAS_NUMBA else "numpy"
