"""Kernel backend selection.

Hot inner loops (orbit iteration, Lyapunov sums, per-sample SGD) live in
two sibling modules with identical call signatures: a numba ``@njit``
implementation and a pure-numpy fallback. The numba path is the default;
set ``TUMORNET_DISABLE_NUMBA=1`` to force the fallback, which is also
used automatically when numba is not importable.

``benchmarks/bench_kernels.py`` imports both modules directly and times
them against each other.
"""

import os


def _numba_wanted() -> bool:
    flag = os.environ.get("TUMORNET_DISABLE_NUMBA", "").strip().lower()
    if flag in {"1", "true", "yes", "on"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_wanted()

if USE_NUMBA:
    from tumornet import _kernels_numba as kernels
else:
    from tumornet import _kernels_numpy as kernels

BACKEND = "numba" if USE_NUMBA else "numpy"

__all__ = ["kernels", "USE_NUMBA", "BACKEND"]
