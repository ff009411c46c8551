"""Numba switch for the hot kernels.

Kernels are written once as plain numpy/scalar Python.  When numba is
importable and ``QSSA_CM_DISABLE_NUMBA`` is unset (or ``0``), ``jit`` compiles
them with ``njit``; otherwise it hands back the function untouched.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dep in practice
    numba = None

NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and os.environ.get("QSSA_CM_DISABLE_NUMBA", "0") in ("", "0")

_JIT_OPTIONS = dict(cache=True, nogil=True, fastmath=False, error_model="numpy")


def jit(func):
    if NUMBA_ENABLED:
        return numba.njit(**_JIT_OPTIONS)(func)
    return func


def python_version(func):
    """The uncompiled function behind a (possibly) jitted kernel."""
    return getattr(func, "py_func", func)
