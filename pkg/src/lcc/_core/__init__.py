"""Kernel selection: compiled extension when available, pure Python otherwise.

Set ``LCC_PURE_PYTHON=1`` to force the fallback (used by the benchmark and by
tests that compare the two paths).
"""

import os

from . import _louvain_py

if os.environ.get("LCC_PURE_PYTHON") == "1":
    _impl = _louvain_py
else:
    try:
        from . import _louvain_cy as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _louvain_py

IMPLEMENTATION = _impl.IMPLEMENTATION
local_move_sweep = _impl.local_move_sweep
local_move_sweep_py = _louvain_py.local_move_sweep
