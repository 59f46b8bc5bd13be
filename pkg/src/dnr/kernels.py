"""Kernel backend selection.

The compiled extension is used when importable; ``DNR_PURE_PYTHON=1`` forces
the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("DNR_PURE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
sweep_radial = _impl.sweep_radial
path_argmin = _impl.path_argmin


def available_backends() -> dict:
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
