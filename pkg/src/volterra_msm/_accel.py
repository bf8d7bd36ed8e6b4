"""Backend switch for the hot loops.

Set ``VOLTERRA_MSM_BACKEND=numpy`` to bypass numba entirely (pure numpy/scipy
paths); the default ``auto`` uses numba when it imports cleanly.
"""

import os

BACKEND_ENV = "VOLTERRA_MSM_BACKEND"

_requested = os.environ.get(BACKEND_ENV, "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(f"{BACKEND_ENV} must be one of auto, numba, numpy; got {_requested!r}")

try:
    if _requested == "numpy":
        raise ImportError
    import numba as _nb

    HAVE_NUMBA = True
except ImportError:
    if _requested == "numba":
        raise
    _nb = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA


def njit(func):
    """``numba.njit(cache=True)`` when numba is active, identity otherwise."""
    if _nb is None:
        return func
    return _nb.njit(cache=True)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
