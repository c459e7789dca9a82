"""Acceleration switch: numba kernels vs pure-numpy fallbacks.

VORTEXLDP_NUMBA=0 forces the numpy paths (useful on machines without a
working numba, and for the benchmark comparing both).  VORTEXLDP_THREADS
caps numba threading.
"""

import os


def env_flag(name, default=True):
    v = os.environ.get(name)
    if v is None:
        return default
    return v.strip().lower() not in ("0", "false", "off", "no")


HAS_NUMBA = False
if env_flag("VORTEXLDP_NUMBA", True):
    try:
        import numba  # noqa: F401

        HAS_NUMBA = True
        t = os.environ.get("VORTEXLDP_THREADS")
        if t:
            numba.set_num_threads(
                max(1, min(int(t), numba.config.NUMBA_NUM_THREADS))
            )
    except ImportError:
        HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA
