"""Kernel backend selection.

Hot per-vertex/per-face loops have two implementations: a numba @njit loop
and a vectorized pure-numpy fallback.  The active path is chosen once at
import time from the SPHEREFLOW_BACKEND environment variable:

    SPHEREFLOW_BACKEND=numba   force numba (error if unavailable)
    SPHEREFLOW_BACKEND=numpy   force the pure-numpy path
    unset                      numba if importable, else numpy

Both paths compute the same quantities; they may differ in the last bits
because summation order differs.  benchmarks/bench_kernels.py compares them.
"""

import os

_REQUESTED = os.environ.get("SPHEREFLOW_BACKEND", "auto").strip().lower() or "auto"
if _REQUESTED not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"SPHEREFLOW_BACKEND must be 'numba' or 'numpy', got {_REQUESTED!r}"
    )

if _REQUESTED == "numpy":
    HAS_NUMBA = False
else:
    try:
        from numba import njit  # noqa: F401
        HAS_NUMBA = True
    except ImportError:
        if _REQUESTED == "numba":
            raise
        HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA and _REQUESTED != "numpy"


def backend_name():
    return "numba" if USING_NUMBA else "numpy"
