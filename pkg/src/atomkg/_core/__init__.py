"""Hot kernels: compiled extension when built, pure-Python otherwise.

Set ``ATOMKG_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("ATOMKG_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

truth_table = _impl.truth_table
find_clause = _impl.find_clause
closure = _impl.closure
bootstrap_count = _impl.bootstrap_count

OP_VAR = _pykernels.OP_VAR
OP_NOT = _pykernels.OP_NOT
OP_AND = _pykernels.OP_AND
OP_OR = _pykernels.OP_OR
OP_IMPLIES = _pykernels.OP_IMPLIES

__all__ = [
    "BACKEND",
    "truth_table",
    "find_clause",
    "closure",
    "bootstrap_count",
]
