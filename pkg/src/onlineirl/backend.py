"""Kernel backend selection.

The fixed-point sweeps dominate the runtime of everything in this package,
so they exist twice: a compiled Cython module (``onlineirl._kernels``) and
a pure-numpy fallback (``onlineirl._kernels_py``).  This module picks one
at import time:

* ``ONLINEIRL_KERNELS=compiled`` requires the compiled module (ImportError
  if it is missing),
* ``ONLINEIRL_KERNELS=python`` forces the fallback,
* unset or ``auto`` prefers the compiled module when it imports.

Both backends implement identical signatures and convergence rules; see
``benchmarks/kernel_benchmark.py`` for a speed comparison.
"""

from __future__ import annotations

import os

from . import _kernels_py


def _load():
    choice = os.environ.get("ONLINEIRL_KERNELS", "auto").lower()
    if choice == "python":
        return _kernels_py, "python"
    if choice == "compiled":
        from . import _kernels

        return _kernels, "compiled"
    if choice != "auto":
        raise ValueError(
            f"ONLINEIRL_KERNELS={choice!r} not understood; "
            "use 'auto', 'compiled' or 'python'"
        )
    try:
        from . import _kernels

        return _kernels, "compiled"
    except ImportError:
        return _kernels_py, "python"


kernels, _backend_name = _load()


def kernel_backend() -> str:
    """Name of the kernel implementation in use ('compiled' or 'python')."""
    return _backend_name
