"""Hot-kernel backend selection.

``VNSAC_BACKEND=numpy`` forces the pure-numpy path, ``numba`` requires the
compiled path, and the default (``auto``) prefers numba when it imports.
The choice is resolved once at import time; ``benchmarks/bench_backends.py``
times the two implementations against each other.
"""

from __future__ import annotations

import os

from .config import BACKEND_ENV


def _resolve():
    choice = os.environ.get(BACKEND_ENV, "auto").lower()
    if choice in ("numpy", "np"):
        from . import _kernels_np as impl

        return impl, "numpy"
    if choice in ("numba", "auto"):
        try:
            from . import _kernels_nb as impl

            return impl, "numba"
        except ImportError:
            if choice == "numba":
                raise
            from . import _kernels_np as impl

            return impl, "numpy"
    raise ValueError(f"{BACKEND_ENV} must be 'numba', 'numpy', or 'auto', got {choice!r}")


kernels, BACKEND_NAME = _resolve()
