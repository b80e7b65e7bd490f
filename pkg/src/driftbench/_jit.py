"""Optional numba acceleration.

Set ``DRIFTBENCH_DISABLE_NUMBA=1`` to run every kernel as plain Python.
The kernels are written so that both paths produce bit-identical results.
"""

import os


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(f):
        return f

    return wrap


def _want_numba():
    flag = os.environ.get("DRIFTBENCH_DISABLE_NUMBA", "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


# True when kernels are compiled with numba.
HAVE_NUMBA = _want_numba()

if HAVE_NUMBA:
    from numba import njit
else:
    njit = _noop_jit
