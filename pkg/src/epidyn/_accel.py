"""Numba switch.

Kernels in :mod:`epidyn.kernels` are written in the numba-compatible subset of
numpy. When numba is importable and ``EPIDYN_DISABLE_NUMBA`` is unset (or
``0``), they are compiled with ``@njit``; otherwise the decorator is the
identity and the same source runs as plain numpy.
"""

import os

_flag = os.environ.get("EPIDYN_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:
    _numba_njit = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with caching, or a no-op when running on numpy."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(func):
        return func

    return decorator
