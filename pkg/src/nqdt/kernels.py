"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``NQDT_PURE_PYTHON=1`` to force the fallback (used by the benchmark and
by the cross-backend tests).
"""
from __future__ import annotations

import os

from . import _pykernels

python = _pykernels

try:
    if os.environ.get("NQDT_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

active = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

amplitudes = active.amplitudes
value_and_grad = active.value_and_grad
rmsprop_step = active.rmsprop_step
tred2 = active.tred2
tql2 = active.tql2
