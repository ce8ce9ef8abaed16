"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; set
RATATTN_KERNELS=python (or =cython) to force a backend. Either backend
exposes the same five functions; tests assert their numerical agreement.
"""

from __future__ import annotations

import os

from . import _pykernels

_forced = os.environ.get("RATATTN_KERNELS")

_cy = None
if _forced != "python":
    try:
        from . import _ckernels as _cy
    except ImportError:
        _cy = None
        if _forced == "cython":
            raise ImportError(
                "RATATTN_KERNELS=cython but the compiled extension is not "
                "available; reinstall with a C compiler present")

_impl = _cy if _cy is not None else _pykernels

BACKEND = _impl.BACKEND_NAME

im2col = _impl.im2col
segmax_relu = _impl.segmax_relu
conv_filter_grad = _impl.conv_filter_grad
conv_input_grad = _impl.conv_input_grad
adam_update = _impl.adam_update


def available_backends() -> dict[str, object]:
    """Importable backend modules by name, for tests and benchmarks."""
    out = {"python": _pykernels}
    if _cy is not None:
        out["cython"] = _cy
    else:
        try:
            from . import _ckernels
            out["cython"] = _ckernels
        except ImportError:
            pass
    return out
