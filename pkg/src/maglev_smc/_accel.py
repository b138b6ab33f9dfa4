"""Optional numba acceleration.

Set ``MAGLEV_SMC_DISABLE_NUMBA=1`` to run every kernel as plain Python.
The kernels are written so that both paths execute the same source.
"""

from __future__ import annotations

import os

_FLAG = "MAGLEV_SMC_DISABLE_NUMBA"

try:  # pragma: no cover - exercised implicitly
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

NUMBA_ENABLED = _numba is not None and os.environ.get(_FLAG, "").strip() not in ("1", "true", "yes")


def kernel(fn):
    """Compile ``fn`` with ``numba.njit`` unless acceleration is disabled.

    The uncompiled function stays reachable as ``.py_func`` either way, which
    is what the benchmark uses for the interpreted baseline.
    """
    if NUMBA_ENABLED:
        return _numba.njit(cache=True, fastmath=False)(fn)
    fn.py_func = fn
    return fn
