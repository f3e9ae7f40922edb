"""Kernel backend selection.

Hot numeric kernels in this package come in two flavors: a numba ``@njit``
version and a pure-numpy version. The numba path is the default whenever
numba imports cleanly; setting ``VOXSCENE_NO_NUMBA=1`` (or ``true``/``yes``)
forces the numpy path. ``benchmarks/kernel_bench.py`` compares the two.
"""

import logging
import os

logger = logging.getLogger(__name__)


def _env_disabled() -> bool:
    return os.environ.get("VOXSCENE_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


def _probe_numba() -> bool:
    if _env_disabled():
        logger.debug("numba disabled via VOXSCENE_NO_NUMBA")
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        logger.warning("numba not importable, falling back to pure-numpy kernels")
        return False
    return True


NUMBA_ENABLED = _probe_numba()

if NUMBA_ENABLED:
    from numba import njit, prange
else:
    def njit(*args, **kwargs):
        """No-op stand-in so kernel modules import cleanly without numba."""
        def wrap(func):
            return func
        if args and callable(args[0]):
            return args[0]
        return wrap

    prange = range
