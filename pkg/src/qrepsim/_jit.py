"""Kernel acceleration switch.

Hot loops in :mod:`qrepsim.kernels` are compiled with numba when it is
importable. Setting the environment variable ``QREPSIM_NO_NUMBA`` to any
value other than ``0``/``false`` forces the pure-Python fallback: the same
functions run uncompiled, producing identical results (the kernels draw all
randomness from an integer LCG whose arithmetic never overflows int64).

The flag is read once at import time; switch backends by restarting the
interpreter (the benchmark does this via subprocesses).
"""

import os

_flag = os.environ.get("QREPSIM_NO_NUMBA", "").strip().lower()
FORCE_PYTHON = _flag not in ("", "0", "false")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - exercised only without numba installed
    _numba = None

NUMBA_ENABLED = _numba is not None and not FORCE_PYTHON
BACKEND = "numba" if NUMBA_ENABLED else "python"


def njit(*args, **kwargs):
    """numba.njit when acceleration is on, identity decorator otherwise."""
    if NUMBA_ENABLED:
        return _numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def identity(fn):
        return fn

    return identity
