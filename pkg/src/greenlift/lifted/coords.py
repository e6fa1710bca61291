"""Augmented coordinates for the lifted kernel.

The kernel network takes (x, y, r) with r = |y - x|, plus s1 = |x - alpha|
and s2 = |y - alpha| when the diffusion coefficient jumps at alpha.  The
derivative kinks of the restricted kernel live entirely in r, s1, s2, so
the lifted function itself stays smooth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

# column order of network inputs
IX, IY, IR, IS1, IS2 = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class LiftedInput:
    x: float
    y: float
    r: float
    s1: Optional[float] = None
    s2: Optional[float] = None

    def as_array(self) -> np.ndarray:
        if self.s1 is None:
            return np.array([self.x, self.y, self.r])
        return np.array([self.x, self.y, self.r, self.s1, self.s2])


def augment(x: float, y: float, alpha: Optional[float] = None) -> LiftedInput:
    """Lift one (x, y) pair; fills s1/s2 iff alpha is given."""
    r = abs(y - x)
    if alpha is None:
        return LiftedInput(x=x, y=y, r=r)
    return LiftedInput(x=x, y=y, r=r, s1=abs(x - alpha), s2=abs(y - alpha))


def lift_pairs(xs, ys, alpha: Optional[float] = None) -> np.ndarray:
    """Vectorized augment: rows (x, y, r[, s1, s2])."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    xs, ys = np.broadcast_arrays(xs, ys)
    r = np.abs(ys - xs)
    if alpha is None:
        return np.stack([xs, ys, r], axis=-1)
    return np.stack([xs, ys, r, np.abs(xs - alpha), np.abs(ys - alpha)], axis=-1)
