"""Selects the compiled elementwise kernels when available.

Override with GREENLIFT_BACKEND=python|compiled; requesting "compiled"
without the built extension raises at import.
"""

import os

from . import kernels_numpy

_requested = os.environ.get("GREENLIFT_BACKEND", "").strip().lower()

if _requested in ("", "compiled"):
    try:
        from . import _speedups as _impl
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise ImportError("GREENLIFT_BACKEND=compiled but greenlift.net._speedups "
                              "is not built; reinstall with a C compiler available")
        _impl = kernels_numpy
        BACKEND = "python"
elif _requested == "python":
    _impl = kernels_numpy
    BACKEND = "python"
else:
    raise ValueError(f"unknown GREENLIFT_BACKEND={_requested!r} (use python|compiled)")

tanh_jet = _impl.tanh_jet
tanh_jet_vjp = _impl.tanh_jet_vjp
