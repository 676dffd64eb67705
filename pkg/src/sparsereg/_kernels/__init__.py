"""Backend selection for the hot prox kernel.

The compiled Cython extension is used when available; setting the
environment variable ``SPARSEREG_PURE_PYTHON=1`` forces the NumPy
fallback (useful for benchmarking and debugging).
"""

import os

__all__ = ["prox_power", "BACKEND"]

if os.environ.get("SPARSEREG_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes"}:
    from ._prox_py import BACKEND, prox_power
else:
    try:
        from ._prox_cy import BACKEND, prox_power
    except ImportError:
        from ._prox_py import BACKEND, prox_power
