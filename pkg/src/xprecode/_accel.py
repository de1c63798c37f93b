"""Switch between numba-compiled kernels and the pure-numpy fallback.

Set ``XPRECODE_NO_NUMBA=1`` before import to force the numpy path, e.g. for
debugging or on platforms without a working numba install.
"""
import os

_DISABLED = os.environ.get("XPRECODE_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def jit(func):
    """``njit(cache=True)`` when numba is active, identity otherwise."""
    if HAVE_NUMBA:
        return _njit(cache=True, fastmath=False)(func)
    return func
