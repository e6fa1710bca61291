"""Residuals of the lifted kernel equations.

Each function evaluates one family of equations the lifted kernel must
satisfy, at given sample points, through a model exposing ``jet``/``forward``
(a TapedNet during training, plain network parameters via NetJets, or an
analytic stub).  Arithmetic is polymorphic over ndarrays and loss-tape
Vars, so the same formulas serve evaluation and gradient paths.

Derivatives are requested only along the directions each operator reads;
gradient/Hessian entries below are indexed by position in ``dirs``.

Smooth regime (inputs x, y, r):

    interior   -c'(y) (G_y + sgn*G_r) - c(y) (G_yy + 2 sgn G_yr + G_rr)
               - k(y)^2 G,   sgn = (y-x)/r
    diagonal   2 G_r(x,x,0) + 1/c(x)

Piecewise regime (inputs x, y, r, s1, s2; c jumps at alpha):

    interior   -c(y) (G_yy + 2 sgn_r G_yr + 2 sgn_s G_ys2 + G_rr + G_s2s2
               + 2 sgn_r sgn_s G_rs2) - k^2 G
    diagonal   2 G_r(x,x,0,s,s) + 1/c_i on each side
    sigma      (c2-c1)(G_y + sgn_r G_r) + (c2+c1) G_s2          at y=alpha
    sigma*     (c2-c1)(G_x - sgn_r G_r) + (c2+c1) G_s1          at x=alpha
    alpha      (c2-c1) G_y + (c2+c1)(G_r + G_s2) + 1            at x=y=alpha
"""

from __future__ import annotations

import numpy as np

from ..problems import PiecewiseCoefficient, ProblemSpec, SmoothCoefficient
from .coords import IR, IS1, IS2, IX, IY, lift_pairs

_EDGE = 1e-12


def _pair_arrays(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    x, y = np.broadcast_arrays(x, y)
    return x.ravel(), y.ravel()


def residual_interior_smooth(model, spec: ProblemSpec, x, y):
    """Lifted interior operator at off-diagonal points (smooth c)."""
    if not isinstance(spec.coeff, SmoothCoefficient):
        raise ValueError("smooth-coefficient residual on a piecewise problem")
    xs, ys = _pair_arrays(x, y)
    r = np.abs(ys - xs)
    if np.any(r <= _EDGE):
        raise ValueError("interior residual needs y != x; sample off the diagonal")
    sgn = (ys - xs) / r
    v, g, h = model.jet(lift_pairs(xs, ys), 2, dirs=(IY, IR))
    c = spec.coeff.c(ys)
    cp = spec.coeff.c_prime(ys)
    k2 = spec.coeff.k(ys) ** 2
    return (-cp * (g[:, 0] + sgn * g[:, 1])
            - c * (h[:, 0, 0] + 2.0 * sgn * h[:, 0, 1] + h[:, 1, 1])
            - k2 * v)


def residual_gamma_smooth(model, spec: ProblemSpec, x):
    """Derivative-jump condition 2 dG/dr + 1/c(x) on the diagonal."""
    if not isinstance(spec.coeff, SmoothCoefficient):
        raise ValueError("smooth-coefficient residual on a piecewise problem")
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    c = spec.coeff.c(xs)
    if np.any(c == 0.0):
        raise ValueError("c(x) = 0 at a diagonal sample point")
    _, g = model.jet(lift_pairs(xs, xs), 1, dirs=(IR,))
    return 2.0 * g[:, 0] + 1.0 / c


def residual_boundary(model, spec: ProblemSpec, x, y_boundary):
    """Kernel values at boundary y (should vanish)."""
    xs, ys = _pair_arrays(x, y_boundary)
    v = model.forward(lift_pairs(xs, ys, spec.alpha))
    return v


def residual_symmetry(model, spec: ProblemSpec, x, y):
    """Ghat(x,y,aug) - Ghat(y,x,aug): zero for a symmetric kernel."""
    xs, ys = _pair_arrays(x, y)
    return (model.forward(lift_pairs(xs, ys, spec.alpha))
            - model.forward(lift_pairs(ys, xs, spec.alpha)))


def _require_piecewise(spec: ProblemSpec) -> PiecewiseCoefficient:
    if not spec.is_piecewise:
        raise ValueError("piecewise residual on a smooth problem")
    return spec.coeff


def residual_interior_piecewise(model, spec: ProblemSpec, x, y):
    """Lifted interior operator away from y = x and y = alpha."""
    pc = _require_piecewise(spec)
    xs, ys = _pair_arrays(x, y)
    r = np.abs(ys - xs)
    s2 = np.abs(ys - pc.alpha)
    if np.any(r <= _EDGE):
        raise ValueError("interior residual needs y != x")
    if np.any(s2 <= _EDGE):
        raise ValueError("interior residual needs y != alpha (interface point)")
    sgn_r = (ys - xs) / r
    sgn_s = (ys - pc.alpha) / s2
    v, g, h = model.jet(lift_pairs(xs, ys, pc.alpha), 2, dirs=(IY, IR, IS2))
    c = pc.c(ys)
    k2 = pc.k ** 2
    lap = (h[:, 0, 0]
           + 2.0 * sgn_r * h[:, 0, 1]
           + 2.0 * sgn_s * h[:, 0, 2]
           + h[:, 1, 1]
           + h[:, 2, 2]
           + 2.0 * (sgn_r * sgn_s) * h[:, 1, 2])
    return -c * lap - k2 * v


def residual_gamma_piecewise(model, spec: ProblemSpec, x):
    """Diagonal jump 2 dG/dr + 1/c_i, per subdomain of x."""
    pc = _require_piecewise(spec)
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(np.abs(xs - pc.alpha) <= _EDGE):
        raise ValueError("diagonal samples must avoid the interface alpha")
    _, g = model.jet(lift_pairs(xs, xs, pc.alpha), 1, dirs=(IR,))
    return 2.0 * g[:, 0] + 1.0 / pc.c(xs)


def residual_sigma(model, spec: ProblemSpec, x):
    """Flux-continuity condition across y = alpha for x != alpha."""
    pc = _require_piecewise(spec)
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(np.abs(xs - pc.alpha) <= _EDGE):
        raise ValueError("sigma residual needs x != alpha (use residual_alpha)")
    ys = np.full_like(xs, pc.alpha)
    sgn_r = np.sign(pc.alpha - xs)
    _, g = model.jet(lift_pairs(xs, ys, pc.alpha), 1, dirs=(IY, IR, IS2))
    return ((pc.c2 - pc.c1) * (g[:, 0] + sgn_r * g[:, 1])
            + (pc.c2 + pc.c1) * g[:, 2])


def residual_sigma_star(model, spec: ProblemSpec, y):
    """Mirror condition: flux continuity in x across x = alpha, y != alpha."""
    pc = _require_piecewise(spec)
    ys = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if np.any(np.abs(ys - pc.alpha) <= _EDGE):
        raise ValueError("sigma* residual needs y != alpha")
    xs = np.full_like(ys, pc.alpha)
    sgn_x = np.sign(pc.alpha - ys)  # d r / d x at x = alpha
    _, g = model.jet(lift_pairs(xs, ys, pc.alpha), 1, dirs=(IX, IR, IS1))
    return ((pc.c2 - pc.c1) * (g[:, 0] + sgn_x * g[:, 1])
            + (pc.c2 + pc.c1) * g[:, 2])


def residual_alpha(model, spec: ProblemSpec):
    """Unit flux jump where the diagonal meets the interface (x = y = alpha)."""
    pc = _require_piecewise(spec)
    X = lift_pairs(np.array([pc.alpha]), np.array([pc.alpha]), pc.alpha)
    _, g = model.jet(X, 1, dirs=(IY, IR, IS2))
    return ((pc.c2 - pc.c1) * g[:, 0]
            + (pc.c2 + pc.c1) * (g[:, 1] + g[:, 2])
            + 1.0)
