"""Finite-difference systems, kernel matrices, and the quadrature solver.

``discretize`` builds the conservative centred scheme for -(c u')' - k^2 u
on a uniform interior grid x_i = a + ih, h = (b-a)/(n+1):

    -c_{i-1/2} U_{i-1} + (c_{i-1/2}+c_{i+1/2}) U_i - c_{i+1/2} U_{i+1}
        - h^2 k^2(x_i) U_i = h^2 f(x_i)

which for constant c = 1 reduces to tri[-1, 2-(kh)^2, -1].  With a
piecewise-constant coefficient the interface must fall on a grid node;
face coefficients are then one-sided and the scheme keeps the flux c u'
continuous.

``kernel_matrix`` samples a kernel source on the grid.  Because the load
vector carries h^2 while G is the inverse of the h^-2-scaled operator, the
discrete inverse relation is (A^-1)_{ij} = G(x_i, x_j)/h; the default
"scaled" matrix includes that 1/h so B ~ A^-1 (exact for the Laplace
kernel).  Unscaled sampling is kept for ablation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .lifted.kernel import KernelSource, check_regime, kernel_eval
from .problems import PiecewiseCoefficient, ProblemSpec

_NODE_TOL = 1e-9


@dataclass(frozen=True)
class LinearSystem:
    """Symmetric tridiagonal system A U = F on the interior grid."""

    n: int
    h: float
    grid: np.ndarray       # interior nodes, strictly increasing
    diag: np.ndarray       # (n,)
    off: np.ndarray        # (n-1,) sub/superdiagonal (symmetric)
    F: np.ndarray

    def matvec(self, u: np.ndarray) -> np.ndarray:
        v = self.diag * u
        v[:-1] += self.off * u[1:]
        v[1:] += self.off * u[:-1]
        return v

    def dense(self) -> np.ndarray:
        A = np.diag(self.diag)
        idx = np.arange(self.n - 1)
        A[idx, idx + 1] = self.off
        A[idx + 1, idx] = self.off
        return A

    def solve_direct(self) -> np.ndarray:
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.off
        ab[1] = self.diag
        ab[2, :-1] = self.off
        return scipy.linalg.solve_banded((1, 1), ab, self.F)

    def eigenvalues(self) -> np.ndarray:
        return scipy.linalg.eigvalsh_tridiagonal(self.diag, self.off)


@dataclass(frozen=True)
class DenseKernelMatrix:
    """Kernel sampled on a grid; with ``scaled`` the 1/h factor is applied
    so the matrix approximates A^-1 of the h^2-scaled system."""

    matrix: np.ndarray
    grid: np.ndarray
    scaled: bool

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v


def discretize(spec: ProblemSpec, n: int) -> LinearSystem:
    """Assemble the n-point interior system; n >= 2 and, for interface
    problems, the interface must land on a node (choose n odd for a
    centred interface)."""
    if n < 2:
        raise ValueError("need at least two interior nodes")
    a, b = spec.domain
    h = (b - a) / (n + 1)
    grid = a + h * np.arange(1, n + 1)
    faces = a + h * (np.arange(n + 1) + 0.5)

    if spec.is_piecewise:
        pc: PiecewiseCoefficient = spec.coeff
        pos = (pc.alpha - a) / h
        if abs(pos - round(pos)) > _NODE_TOL or not (0 < round(pos) <= n):
            raise ValueError(
                f"interface alpha={pc.alpha} is not an interior grid node for "
                f"n={n}; pick n so that (alpha-a)/h is an integer")
        cf = np.where(faces < pc.alpha, pc.c1, pc.c2)
        k2 = np.full(n, pc.k ** 2)
    else:
        cf = spec.coeff.c(faces)
        k2 = spec.coeff.k(grid) ** 2

    diag = cf[:-1] + cf[1:] - h * h * k2
    off = -cf[1:-1]
    F = h * h * spec.forcing(grid)
    return LinearSystem(n=n, h=h, grid=grid, diag=diag, off=off, F=F)


def kernel_matrix(source: KernelSource, grid: np.ndarray, h: float,
                  scaled: bool = True, spec: Optional[ProblemSpec] = None,
                  chunk: int = 128) -> DenseKernelMatrix:
    """Sample G(x_i, x_j) on the grid (times 1/h when scaled)."""
    if spec is not None:
        check_regime(source, spec)
    grid = np.asarray(grid, dtype=np.float64)
    n = grid.size
    B = np.empty((n, n))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        xs = np.repeat(grid[lo:hi], n)
        ys = np.tile(grid, hi - lo)
        B[lo:hi] = source.eval_pairs(xs, ys).reshape(hi - lo, n)
    if scaled:
        B /= h
    return DenseKernelMatrix(matrix=B, grid=grid, scaled=scaled)


def fast_solve(source: KernelSource, spec: ProblemSpec, n_quad: int,
               eval_points: np.ndarray, rule: str = "trapezoid") -> np.ndarray:
    """u(x) ~ sum_q w_q f(y_q) G(x, y_q), with the quadrature split at
    y = x where the restricted kernel has a derivative kink."""
    check_regime(source, spec)
    if n_quad < 2:
        raise ValueError("n_quad must be at least 2")
    eval_points = np.atleast_1d(np.asarray(eval_points, dtype=np.float64))
    a, b = spec.domain
    out = np.empty(eval_points.size)
    for i, xe in enumerate(eval_points):
        nodes, weights = _split_rule(a, b, xe, n_quad, rule)
        vals = kernel_eval(source, np.full_like(nodes, xe), nodes)
        out[i] = np.sum(weights * spec.forcing(nodes) * vals)
    return out


def _split_rule(a: float, b: float, xe: float, n_quad: int, rule: str):
    """Composite rule on [a, xe] + [xe, b] with ~n_quad nodes total."""
    frac = min(max((xe - a) / (b - a), 0.0), 1.0)
    n_left = max(2, int(round(n_quad * frac)))
    n_right = max(2, n_quad - n_left + 2)
    if rule == "trapezoid":
        xl, wl = _trapezoid(a, xe, n_left)
        xr, wr = _trapezoid(xe, b, n_right)
    elif rule == "gauss":
        xl, wl = _gauss(a, xe, n_left)
        xr, wr = _gauss(xe, b, n_right)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return np.concatenate([xl, xr]), np.concatenate([wl, wr])


def _trapezoid(lo: float, hi: float, n: int):
    if hi <= lo:
        return np.empty(0), np.empty(0)
    x = np.linspace(lo, hi, n)
    w = np.full(n, (hi - lo) / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def _gauss(lo: float, hi: float, n: int):
    if hi <= lo:
        return np.empty(0), np.empty(0)
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


def dump_kernel_matrix_csv(path: str, B: DenseKernelMatrix):
    """row,col,value triples (debug helper)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["row", "col", "value"])
        for i in range(B.n):
            for j in range(B.n):
                w.writerow([i, j, repr(float(B.matrix[i, j]))])


def dump_banded_csv(path: str, system: LinearSystem):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["i", "diag", "sup", "F"])
        for i in range(system.n):
            sup = system.off[i] if i < system.n - 1 else ""
            w.writerow([i, repr(float(system.diag[i])),
                        repr(float(sup)) if sup != "" else "",
                        repr(float(system.F[i]))])
