"""Hot per-pixel kernels with a compiled core and a numpy fallback.

The compiled Cython extension is preferred when built; set the
environment variable DENOREG_KERNELS=python to force the numpy fallback
(useful for benchmarking, see benchmarks/bench_kernels.py).
"""

import os

from denoreg.kernels import _pykernels

if os.environ.get("DENOREG_KERNELS", "").lower() in ("python", "py", "numpy"):
    _impl = _pykernels
    BACKEND = "numpy"
else:
    try:
        from denoreg.kernels import _cykernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "numpy"

median_filter = _impl.median_filter
nlm_filter = _impl.nlm_filter


def backend() -> str:
    """Name of the kernel backend selected at import: 'cython' or 'numpy'."""
    return BACKEND
