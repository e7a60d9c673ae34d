"""Optional numba acceleration.

Loop kernels are decorated with :func:`maybe_njit`. Setting
``MELODYGA_DISABLE_NUMBA=1`` in the environment (before import) leaves them as
plain Python and makes :mod:`melodyga.neural.kernels` bind its vectorized
numpy implementations instead.
"""

import os

_DISABLED = os.environ.get("MELODYGA_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba

    USE_NUMBA = True
except ImportError:
    numba = None
    USE_NUMBA = False


def maybe_njit(func):
    """Compile ``func`` in nopython mode when numba is enabled."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
