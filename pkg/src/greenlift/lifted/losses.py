"""Loss assembly: mean squared residuals per equation family, weighted sum.

Terms follow the displayed training objectives exactly: the interior and
boundary terms average over x then over the per-x y sets (a flat mean,
since the pairing is rectangular), the diagonal/interface terms average
over their own sample sets, and the symmetry term penalizes
Ghat(x,y,.) - Ghat(y,x,.) over the interior pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..net.engine import NonFiniteLossError, Var
from ..problems import ProblemSpec
from . import residuals as res
from .sampling import SampleSets


@dataclass(frozen=True)
class PenaltyWeights:
    """Positive penalty coefficients; ``boundary`` may be a per-endpoint
    pair (left, right) in the piecewise regime."""

    boundary: Union[float, tuple[float, float]] = 400.0
    gamma: float = 1000.0
    sym: float = 400.0
    sigma: float = 400.0
    alpha: float = 400.0

    def __post_init__(self):
        vals = (self.boundary if isinstance(self.boundary, tuple) else (self.boundary,))
        if any(v <= 0 for v in vals) or min(self.gamma, self.sym) <= 0:
            raise ValueError("penalty weights must be positive")

    def boundary_pair(self) -> tuple[float, float]:
        if isinstance(self.boundary, tuple):
            return self.boundary
        return (self.boundary, self.boundary)


def _mean_sq(r):
    return (r * r).mean()


def loss_terms(model, sets: SampleSets, spec: ProblemSpec,
               betas: PenaltyWeights) -> dict:
    """All loss components plus the weighted total, keyed by CSV column."""
    xp, yp = sets.interior_pairs()
    terms = {}

    if spec.is_piecewise:
        terms["L_interior"] = _mean_sq(res.residual_interior_piecewise(model, spec, xp, yp))
        bl, br = betas.boundary_pair()
        a, b = spec.domain
        lb_left = _mean_sq(res.residual_boundary(
            model, spec, np.repeat(sets.x_interior, (sets.y_boundary == a).sum()),
            np.tile(sets.y_boundary[sets.y_boundary == a], len(sets.x_interior))))
        lb_right = _mean_sq(res.residual_boundary(
            model, spec, np.repeat(sets.x_interior, (sets.y_boundary == b).sum()),
            np.tile(sets.y_boundary[sets.y_boundary == b], len(sets.x_interior))))
        terms["L_boundary"] = 0.5 * lb_left + 0.5 * lb_right
        lg1 = _mean_sq(res.residual_gamma_piecewise(model, spec, sets.x_gamma1))
        lg2 = _mean_sq(res.residual_gamma_piecewise(model, spec, sets.x_gamma2))
        terms["L_gamma"] = lg1 + lg2
        terms["L_sym"] = _mean_sq(res.residual_symmetry(model, spec, xp, yp))
        terms["L_sigma"] = _mean_sq(res.residual_sigma(model, spec, sets.x_sigma))
        terms["L_sigma_star"] = _mean_sq(res.residual_sigma_star(model, spec, sets.y_sigma))
        # all n_alpha replicas share the single point (alpha, alpha)
        terms["L_alpha"] = _mean_sq(res.residual_alpha(model, spec))
        total = (terms["L_interior"]
                 + bl * lb_left + br * lb_right
                 + betas.gamma * terms["L_gamma"]
                 + betas.sym * terms["L_sym"]
                 + betas.sigma * (terms["L_sigma"] + terms["L_sigma_star"])
                 + betas.alpha * terms["L_alpha"])
    else:
        terms["L_interior"] = _mean_sq(res.residual_interior_smooth(model, spec, xp, yp))
        terms["L_boundary"] = _mean_sq(res.residual_boundary(
            model, spec, np.repeat(sets.x_interior, len(sets.y_boundary)),
            np.tile(sets.y_boundary, len(sets.x_interior))))
        terms["L_gamma"] = _mean_sq(res.residual_gamma_smooth(model, spec, sets.x_gamma))
        terms["L_sym"] = _mean_sq(res.residual_symmetry(model, spec, xp, yp))
        total = (terms["L_interior"]
                 + betas.boundary_pair()[0] * terms["L_boundary"]
                 + betas.gamma * terms["L_gamma"]
                 + betas.sym * terms["L_sym"])

    for name, t in terms.items():
        val = float(t.data) if isinstance(t, Var) else float(t)
        if not np.isfinite(val):
            raise NonFiniteLossError(f"loss term {name} is non-finite ({val})")
    terms["total"] = total
    return terms


def total_loss(model, sets: SampleSets, spec: ProblemSpec, betas: PenaltyWeights):
    """Weighted objective; a Var when ``model`` is a TapedNet, else a float."""
    total = loss_terms(model, sets, spec, betas)["total"]
    if isinstance(total, Var):
        return total
    return float(total)
