"""Numba switch for the hot kernels.

Set ``ALCHEMICAL_NUMBA=0`` before import to run every kernel through its
pure numpy/Python path. Numba is used whenever it imports and the flag is not
disabled.
"""
import os

_FLAG = os.environ.get("ALCHEMICAL_NUMBA", "1").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

ENABLED = _numba is not None and _FLAG not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise an identity decorator."""
    if ENABLED:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap


def backend() -> str:
    return "numba" if ENABLED else "numpy"
