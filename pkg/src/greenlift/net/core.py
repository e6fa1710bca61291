"""Layer-stack algorithms: batched values, input-derivative jets, VJPs.

Affine layers run on np.matmul (BLAS-bound either way); the elementwise
tanh-jet transform and its adjoint come from the selected kernel backend
(compiled `_speedups` or `kernels_numpy`).

Jets can be restricted to a subset of input directions via ``dirs`` (a
tuple of input indices): the returned gradient rows / Hessian blocks then
refer to those directions in order.  Residual evaluation uses this to skip
derivatives the operators never read.

Tape layout: ``(X, dirs, order, pre, post)`` where ``pre[l]``/``post[l]``
are the pre-/post-activation jet batches of hidden layer l.  VJPs replay
the tape; they never re-run the network.
"""

from __future__ import annotations

import numpy as np

from . import backend_kernels


def _kernels():
    return backend_kernels.tanh_jet, backend_kernels.tanh_jet_vjp


def _input_jet(X: np.ndarray, dirs, order: int) -> np.ndarray:
    n, d = X.shape
    m = len(dirs)
    c = 1 + m + (m * m if order == 2 else 0)
    P = np.zeros((n, c, d))
    P[:, 0, :] = X
    for row, j in enumerate(dirs):
        P[:, 1 + row, j] = 1.0
    return P


def _affine(P: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, c, wi = P.shape
    # one (N*C, wi) x (wi, wo) gemm; 3-d matmul would dispatch N tiny ones
    A = (P.reshape(n * c, wi) @ w.T).reshape(n, c, w.shape[0])
    A[:, 0, :] += b
    return A


def forward(weights, biases, X):
    """Values of the network on a batch X of shape (N, input_dim)."""
    Z = np.ascontiguousarray(X, dtype=np.float64)
    last = len(weights) - 1
    for l in range(last):
        Z = np.tanh(Z @ weights[l].T + biases[l])
    return (Z @ weights[last].T + biases[last])[:, 0]


def forward_tape(weights, biases, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    zs = [X]
    Z = X
    for l in range(len(weights) - 1):
        Z = np.tanh(Z @ weights[l].T + biases[l])
        zs.append(Z)
    vals = (Z @ weights[-1].T + biases[-1])[:, 0]
    return vals, zs


def forward_vjp(weights, biases, tape, vbar):
    """Parameter cotangents of sum(vbar * forward(X))."""
    zs = tape
    dws = [None] * len(weights)
    dbs = [None] * len(weights)
    abar = np.ascontiguousarray(vbar, dtype=np.float64)[:, None]
    for l in range(len(weights) - 1, -1, -1):
        dws[l] = abar.T @ zs[l]
        dbs[l] = abar.sum(axis=0)
        if l > 0:
            zbar = abar @ weights[l]
            t = zs[l]
            abar = zbar * (1.0 - t * t)
    return dws, dbs


def jet(weights, biases, X, order=2, dirs=None):
    out, _ = _jet_impl(weights, biases, X, order, dirs, want_tape=False)
    return out


def jet_tape(weights, biases, X, order=2, dirs=None):
    return _jet_impl(weights, biases, X, order, dirs, want_tape=True)


def _jet_impl(weights, biases, X, order, dirs, want_tape):
    tanh_jet, _ = _kernels()
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, d = X.shape
    dirs = tuple(range(d)) if dirs is None else tuple(dirs)
    m = len(dirs)
    last = len(weights) - 1
    P = _input_jet(X, dirs, order)
    pre, post = [], []
    for l in range(last):
        A = _affine(P, weights[l], biases[l])
        Z = np.empty_like(A)
        tanh_jet(A, Z, np.tanh(A[:, 0, :]), m, order)
        if want_tape:
            pre.append(A)
            post.append(Z)
        P = Z
    A = _affine(P, weights[last], biases[last])
    v = np.ascontiguousarray(A[:, 0, 0])
    g = np.ascontiguousarray(A[:, 1:1 + m, 0])
    if order == 2:
        raw = np.ascontiguousarray(A[:, 1 + m:, 0]).reshape(n, m, m)
        # propagation keeps (i,j)/(j,i) equal up to BLAS row blocking;
        # averaging makes the returned Hessian bitwise symmetric
        h = 0.5 * (raw + np.swapaxes(raw, 1, 2))
        out = (v, g, h)
    else:
        out = (v, g)
    return out, (X, dirs, order, pre, post) if want_tape else None


def jet_vjp(weights, biases, tape, vbar, gbar=None, hbar=None):
    """Parameter cotangents of sum(vbar*v + gbar:g + hbar:h) over the batch."""
    _, tanh_jet_vjp = _kernels()
    X, dirs, order, pre, post = tape
    n = X.shape[0]
    m = len(dirs)
    c = 1 + m + (m * m if order == 2 else 0)
    last = len(weights) - 1

    abar = np.zeros((n, c, 1))
    if vbar is not None:
        abar[:, 0, 0] = vbar
    if gbar is not None:
        abar[:, 1:1 + m, 0] = gbar
    if order == 2 and hbar is not None:
        # adjoint of the 0.5 (H + H^T) symmetrization in the forward pass
        hsym = 0.5 * (hbar + np.swapaxes(hbar, 1, 2))
        abar[:, 1 + m:, 0] = hsym.reshape(n, m * m)

    dws = [None] * len(weights)
    dbs = [None] * len(weights)
    for l in range(last, -1, -1):
        zin = post[l - 1] if l > 0 else _input_jet(X, dirs, order)
        wo = weights[l].shape[0]
        dws[l] = abar.reshape(n * c, wo).T @ zin.reshape(n * c, -1)
        dbs[l] = abar[:, 0, :].sum(axis=0)
        if l > 0:
            wi = weights[l].shape[1]
            zbar = np.ascontiguousarray(
                (abar.reshape(n * c, wo) @ weights[l]).reshape(n, c, wi))
            nxt = np.empty_like(zbar)
            # taped post-activation values are exactly tanh(pre values)
            tanh_jet_vjp(pre[l - 1], zbar, nxt,
                         np.ascontiguousarray(post[l - 1][:, 0, :]), m, order)
            abar = nxt
    return dws, dbs
