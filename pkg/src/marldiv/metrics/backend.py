"""Kernel backend selection.

The metric kernels exist twice: a numba-jitted version and a pure-numpy
fallback.  The active backend is chosen once at import time from the
``MARLDIV_BACKEND`` environment variable:

    auto   (default) numba if importable, numpy otherwise
    numba  require numba, fail loudly if missing
    numpy  force the pure-numpy fallback

Both backends expose the same kernel names; ``benchmarks/kernel_backends.py``
times them side by side.
"""

import os

_FLAG = os.environ.get("MARLDIV_BACKEND", "auto").strip().lower()

if _FLAG not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"MARLDIV_BACKEND must be one of auto/numba/numpy, got {_FLAG!r}"
    )

if _FLAG == "numpy":
    from . import _kernels_numpy as kernels

    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as kernels

        BACKEND = "numba"
    except ImportError:
        if _FLAG == "numba":
            raise
        from . import _kernels_numpy as kernels

        BACKEND = "numpy"


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
