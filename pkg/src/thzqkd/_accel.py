"""Numba switch.

Set ``THZQKD_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba
is not importable the numpy path is used automatically.
"""
import os

_FLAG = "THZQKD_DISABLE_NUMBA"


def _flag_set():
    return os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


try:
    if _flag_set():
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None

USE_NUMBA = HAVE_NUMBA and not _flag_set()


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` or a passthrough decorator."""
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _njit(*args, **kwargs)
