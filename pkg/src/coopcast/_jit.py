"""numba switch: set COOPCAST_DISABLE_NUMBA=1 to run the kernels as plain Python."""

import os

_DISABLED = os.environ.get("COOPCAST_DISABLE_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on",
}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _numba_njit

    NUMBA_ENABLED = True
except ImportError:
    _numba_njit = None
    NUMBA_ENABLED = False


def njit(*args, **kwargs):
    """``numba.njit`` when available and enabled, identity decorator otherwise."""
    if NUMBA_ENABLED:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
