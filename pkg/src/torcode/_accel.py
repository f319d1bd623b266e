"""Backend selection for the hot kernels.

Set ``TORCODE_DISABLE_NUMBA=1`` to force the pure-numpy code paths (useful for
debugging and for the numba-vs-numpy benchmark).
"""
import os

_FLAG = os.environ.get("TORCODE_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    The decorated function is always compiled if numba exists, so the
    benchmark can compare both paths even when the env flag is set. The
    dispatch decision is made by callers through ``USE_NUMBA``.
    """
    kwargs.setdefault("cache", True)
    if not HAS_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
