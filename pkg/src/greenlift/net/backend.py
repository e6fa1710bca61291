"""Stable access point for the batched network kernels.

The layer-stack algorithms live in ``core``; only the elementwise jet
transforms switch between the compiled extension and the NumPy fallback
(see ``backend_kernels``).
"""

from .backend_kernels import BACKEND
from .core import forward, forward_tape, forward_vjp, jet, jet_tape, jet_vjp

__all__ = ["BACKEND", "forward", "forward_tape", "forward_vjp",
           "jet", "jet_tape", "jet_vjp"]
