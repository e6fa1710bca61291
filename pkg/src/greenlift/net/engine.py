"""Network evaluation API: values, input-derivative jets, loss gradients.

``forward``/``forward_jet`` are pure functions of (params, input).  Losses
are differentiated by recording network calls on a :class:`TapedNet` and
backpropagating through a small array-valued tape (sums, products, slices);
the network-specific part of the chain rule lives in the backend vjp
kernels, so gradients are exact also for terms that read first and second
input derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .params import MlpParams, ParamGrad


class NonFiniteLossError(ArithmeticError):
    """Raised when a loss or one of its terms evaluates to NaN/Inf."""


@dataclass
class Jet2:
    """Value, input gradient and input Hessian of the network at one point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray


def _check_input(params: MlpParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.input_dim,):
        raise ValueError(f"input has shape {x.shape}, expected ({params.input_dim},)")
    return x


def forward(params: MlpParams, x) -> float:
    """Network value at a single input point."""
    x = _check_input(params, x)
    return float(backend.forward(params.weights, params.biases, x[None, :])[0])


def forward_batch(params: MlpParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ValueError(f"batch has shape {X.shape}, expected (N, {params.input_dim})")
    return backend.forward(params.weights, params.biases, X)


def forward_jet(params: MlpParams, x) -> Jet2:
    """Value plus exact first/second derivatives w.r.t. the input."""
    x = _check_input(params, x)
    v, g, h = backend.jet(params.weights, params.biases, x[None, :], 2)
    return Jet2(value=float(v[0]), grad=g[0], hess=h[0])


def jet_batch(params: MlpParams, X: np.ndarray, order: int = 2, dirs=None):
    """Batched jets; ``dirs`` restricts derivatives to those input indices
    (gradient rows / Hessian blocks then follow the order of ``dirs``)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ValueError(f"batch has shape {X.shape}, expected (N, {params.input_dim})")
    return backend.jet(params.weights, params.biases, X, order, dirs)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return np.asarray(g).reshape(shape)


class Var:
    """Array node of the loss tape.  Supports the arithmetic the residual
    formulas need (+, -, *, /, integer powers, slicing, sum/mean)."""

    __array_ufunc__ = None  # keep numpy from hijacking ndarray <op> Var

    def __init__(self, data, parents=(), bw=None):
        self.data = np.asarray(data, dtype=np.float64)
        self._parents = parents
        self._bw = bw
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    def _accum(self, g):
        g = _unbroadcast(np.asarray(g, dtype=np.float64), self.data.shape)
        self.grad = g if self.grad is None else self.grad + g

    def __add__(self, other):
        if isinstance(other, Var):
            out = Var(self.data + other.data, (self, other))
            out._bw = lambda g: (self._accum(g), other._accum(g))
        else:
            out = Var(self.data + other, (self,))
            out._bw = lambda g: self._accum(g)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Var(-self.data, (self,))
        out._bw = lambda g: self._accum(-g)
        return out

    def __sub__(self, other):
        return self + (-other if isinstance(other, Var) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Var):
            out = Var(self.data * other.data, (self, other))
            out._bw = lambda g: (self._accum(g * other.data), other._accum(g * self.data))
        else:
            other = np.asarray(other, dtype=np.float64)
            out = Var(self.data * other, (self,))
            out._bw = lambda g: self._accum(g * other)
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            raise TypeError("Var/Var division is not needed by any loss; "
                            "multiply by a precomputed reciprocal instead")
        return self * (1.0 / np.asarray(other, dtype=np.float64))

    def __pow__(self, n):
        if not isinstance(n, int) or n < 1:
            raise TypeError("only positive integer powers are supported")
        out = Var(self.data ** n, (self,))
        out._bw = lambda g: self._accum(g * n * self.data ** (n - 1))
        return out

    def __getitem__(self, idx):
        out = Var(self.data[idx], (self,))

        def bw(g):
            full = np.zeros_like(self.data)
            full[idx] = g
            self._accum(full)

        out._bw = bw
        return out

    def sum(self):
        out = Var(self.data.sum(), (self,))
        out._bw = lambda g: self._accum(np.broadcast_to(g, self.data.shape))
        return out

    def mean(self):
        return self.sum() * (1.0 / self.data.size)

    def backward(self):
        if self.data.shape != ():
            raise ValueError("backward() expects a scalar loss")
        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones(())
        for node in reversed(topo):
            if node._bw is not None and node.grad is not None:
                node._bw(node.grad)


class _Leaf:
    __slots__ = ("kind", "tape", "n", "m", "order", "vbar", "gbar", "hbar")

    def __init__(self, kind, tape, n, m, order):
        self.kind = kind
        self.tape = tape
        self.n, self.m, self.order = n, m, order
        self.vbar = self.gbar = self.hbar = None


class TapedNet:
    """Records forward/jet calls against fixed parameters so that a scalar
    loss assembled from the returned :class:`Var` objects can be
    differentiated w.r.t. the parameters."""

    def __init__(self, params: MlpParams):
        self.params = params
        self._leaves: list[_Leaf] = []

    def forward(self, X: np.ndarray) -> Var:
        X = np.asarray(X, dtype=np.float64)
        vals, tape = backend.forward_tape(self.params.weights, self.params.biases, X)
        leaf = _Leaf("forward", tape, X.shape[0], X.shape[1], 0)
        self._leaves.append(leaf)
        out = Var(vals)

        def bw(g):
            leaf.vbar = g if leaf.vbar is None else leaf.vbar + g

        out._bw = bw
        return out

    def jet(self, X: np.ndarray, order: int = 2, dirs=None):
        X = np.asarray(X, dtype=np.float64)
        out, tape = backend.jet_tape(self.params.weights, self.params.biases,
                                     X, order, dirs)
        leaf = _Leaf("jet", tape, X.shape[0], len(tape[1]), order)
        self._leaves.append(leaf)

        def seed(field):
            def bw(g):
                cur = getattr(leaf, field)
                setattr(leaf, field, g if cur is None else cur + g)
            return bw

        v = Var(out[0]); v._bw = seed("vbar")
        g = Var(out[1]); g._bw = seed("gbar")
        if order == 2:
            h = Var(out[2]); h._bw = seed("hbar")
            return v, g, h
        return v, g

    def grad(self, loss: Var) -> ParamGrad:
        loss.backward()
        total = self.params.zeros_like()
        for leaf in self._leaves:
            if leaf.kind == "forward":
                if leaf.vbar is None:
                    continue
                dws, dbs = backend.forward_vjp(self.params.weights, self.params.biases,
                                               leaf.tape, leaf.vbar)
            else:
                if leaf.vbar is None and leaf.gbar is None and leaf.hbar is None:
                    continue
                dws, dbs = backend.jet_vjp(self.params.weights, self.params.biases,
                                           leaf.tape, leaf.vbar, leaf.gbar,
                                           leaf.hbar)
            for acc, dw in zip(total.weights, dws):
                acc += dw
            for acc, db in zip(total.biases, dbs):
                acc += db
        return total


def loss_grad(params: MlpParams, loss_fn) -> tuple[float, ParamGrad]:
    """Value and exact parameter gradient of ``loss_fn``.

    ``loss_fn`` receives a :class:`TapedNet` bound to ``params`` and must
    return a scalar :class:`Var` built from its ``forward``/``jet`` calls.
    """
    net = TapedNet(params)
    loss = loss_fn(net)
    if not isinstance(loss, Var):
        raise TypeError("loss_fn must return a Var (use the TapedNet it is given)")
    value = float(loss.data)
    if not np.isfinite(value):
        raise NonFiniteLossError("loss evaluated to a non-finite value")
    grad = net.grad(loss)
    grad.check_congruent(params)
    return value, grad
