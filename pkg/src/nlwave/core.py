"""Selects the compiled quadrature kernels, falling back to numpy.

Set NLWAVE_PURE_PYTHON=1 to force the fallback.
"""

import os

from . import _core_py

IMPLEMENTATION = "python"

if os.environ.get("NLWAVE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl

        IMPLEMENTATION = "compiled"
    except ImportError:
        _impl = _core_py
else:
    _impl = _core_py

row_nodes = _impl.row_nodes
row_accumulate = _impl.row_accumulate
legendre_table = _core_py.legendre_table
