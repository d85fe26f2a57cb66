"""Numba switch shared by every hot kernel.

Set ``VEINGUARD_DISABLE_NUMBA=1`` to force the pure-numpy paths (useful for
debugging and on platforms without numba). The flag is read once at import.
"""

from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("VEINGUARD_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def njit(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it untouched."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def py_func(fn):
    """The interpreted body of a kernel, whether or not it was compiled."""
    return getattr(fn, "py_func", fn)
