"""Kernel sources: the one abstraction every downstream solver consumes.

A kernel source evaluates G(x, y).  The analytic variant wraps a closed
form; the neural variant restricts a trained lifted network to the surface
r = |y - x| and symmetrizes it, G_sym(x,y) = (Ghat(x,y,..) + Ghat(y,x,..))/2,
which is exactly symmetric because float addition commutes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..net import MlpParams, forward_batch, jet_batch, load_checkpoint
from ..problems import ProblemSpec
from .coords import lift_pairs


class ConfigurationError(ValueError):
    """Kernel source and problem regime do not match."""


class NetJets:
    """Evaluation-mode model protocol around fixed network parameters
    (same ``forward``/``jet`` surface as TapedNet, returning ndarrays)."""

    def __init__(self, params: MlpParams):
        self.params = params

    def forward(self, X):
        return forward_batch(self.params, X)

    def jet(self, X, order: int = 2, dirs=None):
        return jet_batch(self.params, X, order, dirs)


@dataclass(frozen=True)
class AnalyticKernel:
    """Closed-form G(x, y); evaluation bypasses symmetrization."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "analytic"

    def eval_pairs(self, xs, ys) -> np.ndarray:
        return np.asarray(self.fn(xs, ys), dtype=np.float64)


class NeuralKernel:
    """Symmetrized restriction of a trained lifted network."""

    def __init__(self, params: MlpParams, alpha: Optional[float] = None,
                 name: str = "neural"):
        expected = 3 if alpha is None else 5
        if params.input_dim != expected:
            raise ConfigurationError(
                f"checkpoint has input_dim={params.input_dim} but "
                f"{'an interface location was' if alpha is not None else 'no interface location'} "
                f"given (expected {expected})")
        self.params = params
        self.alpha = alpha
        self.name = name

    @classmethod
    def from_checkpoint(cls, path: str, alpha: Optional[float] = None) -> "NeuralKernel":
        params, meta = load_checkpoint(path)
        if alpha is None and meta is not None and meta.get("alpha") is not None:
            alpha = float(meta["alpha"])
        return cls(params, alpha=alpha, name=f"checkpoint:{path}")

    def eval_pairs(self, xs, ys) -> np.ndarray:
        fw = forward_batch(self.params, lift_pairs(xs, ys, self.alpha))
        bw = forward_batch(self.params, lift_pairs(ys, xs, self.alpha))
        return 0.5 * (fw + bw)


KernelSource = AnalyticKernel | NeuralKernel


def kernel_eval(source: KernelSource, x, y):
    """G(x, y) for scalars or broadcastable arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    shape = np.broadcast_shapes(x.shape, y.shape)
    xs = np.broadcast_to(x, shape).ravel()
    ys = np.broadcast_to(y, shape).ravel()
    out = source.eval_pairs(xs, ys).reshape(shape)
    return float(out) if shape == () else out


def check_regime(source: KernelSource, spec: ProblemSpec):
    """Reject 3-input kernels on interface problems and mismatched alphas."""
    if isinstance(source, NeuralKernel):
        if spec.is_piecewise:
            if source.alpha is None:
                raise ConfigurationError(
                    f"problem {spec.name!r} has an interface but the kernel "
                    "was trained without one (3-input network)")
            if abs(source.alpha - spec.alpha) > 1e-12:
                raise ConfigurationError(
                    f"kernel interface alpha={source.alpha} != problem alpha={spec.alpha}")
        elif source.alpha is not None:
            raise ConfigurationError(
                f"kernel was trained with an interface (5 inputs) but problem "
                f"{spec.name!r} is smooth")


class AnalyticLiftedKernel:
    """Closed-form lifted function with analytic jets (model protocol).

    Used to inject exact kernels into the residual operators; the master
    check of every operator is that an exact kernel zeroes them out.
    """

    def __init__(self, value, grad, hess, input_dim: int = 3):
        # grad/hess map an (N, d) batch to (N, d) and (N, d, d)
        self._value, self._grad, self._hess = value, grad, hess
        self.input_dim = input_dim

    def forward(self, X):
        return self._value(np.asarray(X, dtype=np.float64))

    def jet(self, X, order: int = 2, dirs=None):
        X = np.asarray(X, dtype=np.float64)
        dirs = tuple(range(self.input_dim)) if dirs is None else tuple(dirs)
        v = self._value(X)
        g = self._grad(X)[:, dirs]
        if order == 1:
            return v, g
        h = self._hess(X)[np.ix_(range(X.shape[0]), dirs, dirs)]
        return v, g, h


def benchmark_lifted_kernel(k: float = 10.0) -> AnalyticLiftedKernel:
    """The benchmark Green's function re-expressed smoothly in (x, y, r):

        Ghat = [cos(k(x+y-1)) - cos(k(1-r))] / (2 k sin k)

    Restricted to r = |y-x| this reproduces -sin(k min)sin(k(max-1))/(k sin k)
    by the product-to-sum identity, but is C-infinity in all three lifted
    coordinates, so it satisfies the interior, boundary, and derivative-jump
    equations exactly; the residual operators must vanish on it.
    """
    scale = 1.0 / (2.0 * k * np.sin(k))

    def value(X):
        return (np.cos(k * (X[:, 0] + X[:, 1] - 1.0))
                - np.cos(k * (1.0 - X[:, 2]))) * scale

    def grad(X):
        p = k * (X[:, 0] + X[:, 1] - 1.0)
        q = k * (1.0 - X[:, 2])
        g = np.empty_like(X)
        g[:, 0] = -k * np.sin(p) * scale
        g[:, 1] = -k * np.sin(p) * scale
        g[:, 2] = -k * np.sin(q) * scale
        return g

    def hess(X):
        n = X.shape[0]
        p = k * (X[:, 0] + X[:, 1] - 1.0)
        q = k * (1.0 - X[:, 2])
        h = np.zeros((n, 3, 3))
        cpp = -k * k * np.cos(p) * scale
        h[:, 0, 0] = h[:, 1, 1] = h[:, 0, 1] = h[:, 1, 0] = cpp
        h[:, 2, 2] = k * k * np.cos(q) * scale
        return h

    return AnalyticLiftedKernel(value, grad, hess, input_dim=3)
