"""Training-set sampling.

Uniform draws over the domain with exclusion zones: interior pairs must
stay off the diagonal (r > 0) and, in the piecewise regime, off the
interface (the operators divide by r and s2).  Points landing inside the
exclusion radius are redrawn, so the sets are deterministic given the rng.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..problems import ProblemSpec

EXCLUSION = 1e-6


@dataclass(frozen=True)
class SampleSets:
    x_interior: np.ndarray                      # (N,)
    y_interior: np.ndarray                      # (N, N') per-x y draws
    y_boundary: np.ndarray                      # endpoint values
    x_gamma: Optional[np.ndarray] = None        # smooth regime
    x_gamma1: Optional[np.ndarray] = None       # piecewise: diagonal left of alpha
    x_gamma2: Optional[np.ndarray] = None       # piecewise: diagonal right of alpha
    x_sigma: Optional[np.ndarray] = None        # paired with y = alpha
    y_sigma: Optional[np.ndarray] = None        # paired with x = alpha
    n_alpha: int = 0

    @property
    def piecewise(self) -> bool:
        return self.x_gamma is None

    def interior_pairs(self):
        n, m = self.y_interior.shape
        return np.repeat(self.x_interior, m), self.y_interior.ravel()


def _uniform_avoiding(rng, lo, hi, size, avoid):
    """Uniform samples with |x - a| > EXCLUSION for every a in avoid
    (avoid entries may be arrays broadcastable to the sample shape)."""
    x = rng.uniform(lo, hi, size=size)
    while True:
        bad = np.zeros(np.shape(x), dtype=bool)
        for a in avoid:
            bad |= np.abs(x - a) <= EXCLUSION
        bad |= (x - lo) <= EXCLUSION
        bad |= (hi - x) <= EXCLUSION
        if not bad.any():
            return x
        x = np.array(x)
        x[bad] = rng.uniform(lo, hi, size=int(bad.sum()))


def sample_training_sets(spec: ProblemSpec, rng: np.random.Generator, *,
                         n_x: int, n_y: int, n_boundary: int = 2,
                         n_gamma: int = 0, n_sigma: int = 0,
                         n_alpha: int = 0) -> SampleSets:
    a, b = spec.domain
    alpha = spec.alpha
    x_avoid = [] if alpha is None else [alpha]

    x_int = _uniform_avoiding(rng, a, b, n_x, x_avoid)
    y_avoid = [x_int[:, None]] + ([] if alpha is None else [alpha])
    y_int = _uniform_avoiding(rng, a, b, (n_x, n_y), y_avoid)

    if n_boundary % 2:
        raise ValueError("n_boundary must pair the two endpoints")
    y_bnd = np.tile([a, b], n_boundary // 2)

    if alpha is None:
        x_gamma = _uniform_avoiding(rng, a, b, n_gamma, [])
        return SampleSets(x_interior=x_int, y_interior=y_int, y_boundary=y_bnd,
                          x_gamma=x_gamma)

    half = n_gamma // 2
    x_g1 = _uniform_avoiding(rng, a, alpha, half, [])
    x_g2 = _uniform_avoiding(rng, alpha, b, n_gamma - half, [])
    x_sigma = _uniform_avoiding(rng, a, b, n_sigma, [alpha])
    y_sigma = _uniform_avoiding(rng, a, b, n_sigma, [alpha])
    return SampleSets(x_interior=x_int, y_interior=y_int, y_boundary=y_bnd,
                      x_gamma1=x_g1, x_gamma2=x_g2,
                      x_sigma=x_sigma, y_sigma=y_sigma, n_alpha=n_alpha)


def draw_minibatch(sets: SampleSets, rng: np.random.Generator, *,
                   mb_x: Optional[int] = None, mb_y: Optional[int] = None,
                   mb_gamma: Optional[int] = None,
                   mb_sigma: Optional[int] = None) -> SampleSets:
    """Per-epoch subset: mb_x of the x points (with their y rows, optionally
    thinned to mb_y), mb_gamma of each diagonal set, mb_sigma of the
    interface sets.  None keeps a set whole."""

    def pick(arr, m):
        if arr is None or m is None or m >= len(arr):
            return arr
        return arr[rng.choice(len(arr), size=m, replace=False)]

    x, y = sets.x_interior, sets.y_interior
    if mb_x is not None and mb_x < len(x):
        idx = rng.choice(len(x), size=mb_x, replace=False)
        x, y = x[idx], y[idx]
    if mb_y is not None and mb_y < y.shape[1]:
        cols = rng.choice(y.shape[1], size=mb_y, replace=False)
        y = y[:, cols]

    return replace(
        sets,
        x_interior=x,
        y_interior=y,
        x_gamma=pick(sets.x_gamma, mb_gamma),
        x_gamma1=pick(sets.x_gamma1, None if mb_gamma is None else mb_gamma // 2),
        x_gamma2=pick(sets.x_gamma2, None if mb_gamma is None else mb_gamma // 2),
        x_sigma=pick(sets.x_sigma, mb_sigma),
        y_sigma=pick(sets.y_sigma, mb_sigma),
    )
