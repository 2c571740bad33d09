"""Optional numba acceleration.

Hot kernels are written once as plain loops and compiled with ``numba.njit``
when available. Set ``IDKIT_DISABLE_NUMBA=1`` to force the pure-numpy paths
(useful for debugging and for the benchmark comparison).
"""
import os

_disabled = os.environ.get("IDKIT_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    import numba
except ImportError:  # pragma: no cover - exercised via env flag
    numba = None

HAVE_NUMBA = numba is not None


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
