"""Backend selection for the hot loops.

Set ``LADDERMEM_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is importable. The flag is read once at import time.
"""

import os

_FLAG = "LADDERMEM_DISABLE_NUMBA"

_disabled = os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _disabled:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap


def backend_name():
    return "numba" if HAVE_NUMBA else "numpy"
