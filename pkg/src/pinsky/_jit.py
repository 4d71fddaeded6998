"""Numba switch.

Hot kernels are written as plain loop code and wrapped with :func:`jit`.
Setting ``PINSKY_DISABLE_NUMBA=1`` (or running without numba installed)
leaves them as ordinary Python; kernels that have a vectorised numpy
twin pick that twin instead via :data:`USE_NUMBA`.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get(
    "PINSKY_DISABLE_NUMBA", "0"
).lower() in ("", "0", "false", "no")


def jit(fn=None, **kwargs):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    opts = {"cache": True, "nogil": True}
    opts.update(kwargs)

    def wrap(f):
        if not USE_NUMBA:
            return f
        return numba.njit(**opts)(f)

    if fn is None:
        return wrap
    return wrap(fn)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
