"""Backend selection for the multiprecision Vandermonde kernel.

The compiled MPFR extension is used when it imports; otherwise, or when
``SINGCOV_PURE_PYTHON=1`` is set, the gmpy2 implementation is used.  Both
expose ``NodeTable`` with the same interface.
"""

from __future__ import annotations

import os

from . import _vdm_py

python_backend = _vdm_py

compiled_backend = None
try:
    from . import _vdm as compiled_backend  # type: ignore[no-redef]
except ImportError:
    compiled_backend = None

if compiled_backend is not None and os.environ.get("SINGCOV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    backend = compiled_backend
else:
    backend = python_backend

NodeTable = backend.NodeTable
BACKEND = backend.BACKEND

__all__ = ["NodeTable", "BACKEND", "backend", "python_backend", "compiled_backend"]
