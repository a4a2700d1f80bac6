"""Backend selection for the hot numeric kernels.

The environment variable STABLEFIT_NUMBA picks the implementation: the values
"0", "false", "no", "off" (case-insensitive) force the pure-numpy path, any
other value (including unset) uses the compiled path when numba is importable.
The flag is read at call time, so flipping it between calls is honored without
reimporting the package.
"""
import os

_OFF_VALUES = frozenset({"0", "false", "no", "off"})

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def numba_requested():
    return os.environ.get("STABLEFIT_NUMBA", "1").strip().lower() not in _OFF_VALUES


def numba_active():
    """True when the compiled kernel variants should be dispatched to."""
    return HAVE_NUMBA and numba_requested()
