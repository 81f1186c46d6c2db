"""Backend selection for the hot assembly kernels.

The environment variable DGNS_BACKEND picks the implementation:

    auto   try numba, fall back to pure numpy (default)
    numba  require the jitted kernels
    numpy  force the vectorized numpy fallback

Both backends implement identical signatures and agree to rounding error;
see benchmarks/bench_kernels.py for a speed comparison.
"""

import os

from . import numpy_backend

BACKEND_ENV = "DGNS_BACKEND"

_numba_backend = None
_numba_failed = False


def _load_numba():
    global _numba_backend, _numba_failed
    if _numba_backend is None and not _numba_failed:
        try:
            from . import numba_backend
            _numba_backend = numba_backend
        except ImportError:
            _numba_failed = True
    return _numba_backend


def get_backend():
    """Active kernel module according to DGNS_BACKEND (re-read on each call)."""
    choice = os.environ.get(BACKEND_ENV, "auto").strip().lower()
    if choice == "numpy":
        return numpy_backend
    if choice == "numba":
        backend = _load_numba()
        if backend is None:
            raise RuntimeError(f"{BACKEND_ENV}=numba requested but numba is unavailable")
        return backend
    if choice not in ("", "auto"):
        raise ValueError(f"unknown {BACKEND_ENV} value {choice!r}")
    return _load_numba() or numpy_backend


def backend_name():
    return get_backend().NAME
