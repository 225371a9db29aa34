"""Kernel selection: compiled extension when available, pure Python otherwise.

Set DEHNFILL_PURE=1 to force the pure-Python kernels (used by the benchmark
and as an escape hatch on platforms where the extension fails to build).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("DEHNFILL_PURE"):
    _impl = _kernels_py
    IMPL = "pure"
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        IMPL = "compiled"
    except ImportError:
        _impl = _kernels_py
        IMPL = "pure"

mat_mul_int = _impl.mat_mul_int
apply_ops_inplace = _impl.apply_ops_inplace
eval_ops = _impl.eval_ops
is_identity_ops = _impl.is_identity_ops
lll_reduce = _impl.lll_reduce

PURE = _kernels_py
