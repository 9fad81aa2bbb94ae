"""Backend selection for the hot inner loops.

The coordinate-descent kernels dominate runtime (they run once per candidate
start and per concentration step). They are compiled with numba by default; a
pure-numpy path is selected with ``TRIMREG_BACKEND=numpy`` or used
automatically when numba is unavailable.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_requested = os.environ.get("TRIMREG_BACKEND", "numba").lower()

if _requested == "numpy":
    _impl = _kernels_numpy
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:
        _impl = _kernels_numpy
        BACKEND = "numpy"

cd_weighted_lasso = _impl.cd_weighted_lasso
cd_gamma = _impl.cd_gamma
