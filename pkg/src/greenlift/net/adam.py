"""Adam with bias correction, operating on MlpParams-shaped pytrees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import MlpParams, ParamGrad


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: ParamGrad | None = None
    v: ParamGrad | None = None

    def _ensure(self, params: MlpParams):
        if self.m is None:
            self.m = params.zeros_like()
            self.v = params.zeros_like()


def adam_step(params: MlpParams, grad: ParamGrad, state: AdamState) -> tuple[MlpParams, AdamState]:
    """One Adam update; returns new parameters and the advanced state.

    The update is theta -= lr * m_hat / (sqrt(v_hat) + eps), so a constant
    gradient moves every coordinate by ~lr on the first step.
    """
    grad.check_congruent(params)
    state._ensure(params)
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    out = params.copy()
    for group, ggroup, mgroup, vgroup in (
        (out.weights, grad.weights, state.m.weights, state.v.weights),
        (out.biases, grad.biases, state.m.biases, state.v.biases),
    ):
        for p, g, m, v in zip(group, ggroup, mgroup, vgroup):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return out, state
