"""Spectral diagnostics of a kernel: eigenpairs and frequency-resolved error.

``kernel_eigs`` discretizes the integral eigenproblem
int G(x,y) phi(y) dy = mu phi(x) by the Nystrom method with trapezoid
weights: with W = diag(w), the symmetric eigenproblem W^1/2 K W^1/2 gives
the Ritz values, and eigenfunction samples are recovered as v / sqrt(w).
Computed pairs are matched to exact ones by eigenvector correlation (not
by sorting: the indefinite spectrum interleaves signs), then sign-aligned.

``gamma_coefficients`` projects the kernel error onto the product basis
phi_j(x) phi_j(y), gamma_j = |int int (Ghat - G) phi_j phi_j|, with the
inner quadrature split at y = x (the restriction has a kink there).
Partial sums over j >= eta give the high-frequency loss tail tracked by
``bias_track`` across training snapshots.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from ._alloc import tune_for_large_batches
from .lifted.coords import lift_pairs
from .lifted.kernel import AnalyticKernel, KernelSource, NeuralKernel, kernel_eval
from .net import (AdamState, MlpParams, TapedNet, adam_step, forward_batch,
                  init_params)
from .problems import ProblemSpec, SmoothCoefficient, exact_eigenpair


@dataclass(frozen=True)
class EigenRow:
    j: int
    mu_hat: float
    mu_exact: float
    eps_mu: float
    eps_phi: float
    paired: bool
    low_resolution: bool


@dataclass
class EigenReport:
    rows: list[EigenRow]
    n: int
    source_name: str

    def eps_mu(self, j_lo: int, j_hi: int) -> float:
        """Mean relative eigenvalue error over paired rows with j in
        [j_lo, j_hi]."""
        sel = [r.eps_mu for r in self.rows if j_lo <= r.j <= j_hi and r.paired]
        if not sel:
            raise ValueError(f"no paired eigenvalues in j range [{j_lo}, {j_hi}]")
        return float(np.mean(sel))

    def write_csv(self, path: str):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["j", "mu_hat", "mu_exact", "eps_mu", "eps_phi", "flag"])
            for r in self.rows:
                flag = "" if r.paired else "unpaired"
                if r.low_resolution:
                    flag = (flag + ";" if flag else "") + "low-resolution"
                w.writerow([r.j, repr(r.mu_hat), repr(r.mu_exact),
                            repr(r.eps_mu), repr(r.eps_phi), flag])


def _exact_wavenumber(spec: ProblemSpec) -> float:
    if spec.domain != (0.0, 1.0) or not isinstance(spec.coeff, SmoothCoefficient):
        raise ValueError("exact eigenpairs are only known for the constant-"
                         "coefficient problem on (0,1)")
    probe = np.array([0.21, 0.5, 0.83])
    ks = spec.coeff.k(probe)
    cs = spec.coeff.c(probe)
    if not (np.allclose(ks, ks[0]) and np.allclose(cs, 1.0)):
        raise ValueError("exact eigenpairs require c = 1 and constant k")
    return float(ks[0])


def kernel_eigs(source: KernelSource, spec: ProblemSpec, n: int,
                count: int) -> EigenReport:
    """Nystrom eigenpairs of the kernel vs the closed-form ones."""
    if n < 4 * count:
        raise ValueError(f"need n >= 4*count nodes (got n={n}, count={count})")
    k = _exact_wavenumber(spec)
    a, b = spec.domain
    nodes = np.linspace(a, b, n)
    w = np.full(n, (b - a) / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    sw = np.sqrt(w)

    xs = np.repeat(nodes, n)
    ys = np.tile(nodes, n)
    K = kernel_eval(source, xs, ys).reshape(n, n)
    S = (sw[:, None] * sw[None, :]) * K
    mu, V = scipy.linalg.eigh(S)
    phis = V / sw[:, None]          # columns: discrete-L2 normalized

    name = getattr(source, "name", "kernel")
    rows = []
    taken: set[int] = set()
    for j in range(1, count + 1):
        mu_j, phi_j = exact_eigenpair(j, k)
        pj = phi_j(nodes)
        corr = np.abs((sw * (sw * pj)) @ phis)   # |<phi_j, phi_hat_m>_w|
        order = np.argsort(corr)[::-1]
        best = next(m for m in order if m not in taken)
        runner = next((m for m in order if m not in taken and m != best), None)
        ambiguous = runner is not None and corr[best] - corr[runner] < 1e-8
        taken.add(best)
        mu_hat = float(mu[best])
        eps_mu = abs(mu_j - mu_hat) / abs(mu_j)
        phi_hat = phis[:, best] * np.sign((w * pj) @ phis[:, best])
        eps_phi = float(np.sqrt(w @ (pj - phi_hat) ** 2)
                        / np.sqrt(w @ pj ** 2))
        rows.append(EigenRow(j=j, mu_hat=mu_hat, mu_exact=mu_j, eps_mu=eps_mu,
                             eps_phi=eps_phi, paired=not ambiguous,
                             low_resolution=j > n // 8))
    return EigenReport(rows=rows, n=n, source_name=name)


KernelLike = Union[KernelSource, MlpParams, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def _as_pair_fn(kernel: KernelLike) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    if isinstance(kernel, MlpParams):
        if kernel.input_dim != 3:
            raise ValueError("gamma coefficients are defined for the 3-input "
                             "(smooth-regime) lifted kernel")
        return lambda xs, ys: forward_batch(kernel, lift_pairs(xs, ys))
    if isinstance(kernel, (AnalyticKernel, NeuralKernel)):
        return kernel.eval_pairs
    return kernel


def gamma_coefficients(kernel: KernelLike, spec: ProblemSpec, J: int,
                       n_quad: int) -> np.ndarray:
    """gamma_j = |double integral of (Ghat - G) phi_j(x) phi_j(y)|, j=1..J."""
    gam, _ = gamma_with_total(kernel, spec, J, n_quad)
    return gam


def gamma_with_total(kernel: KernelLike, spec: ProblemSpec, J: int,
                     n_quad: int) -> tuple[np.ndarray, float]:
    """Gammas plus the total squared error integral (Bessel majorant)."""
    if spec.exact_green is None:
        raise ValueError(f"problem {spec.name!r} has no exact kernel to "
                         "compare against")
    if n_quad < 8 * J:
        raise ValueError(f"need n_quad >= 8*J quadrature nodes (got {n_quad})")
    a, b = spec.domain
    fn = _as_pair_fn(kernel)

    gl_x, gw_x = np.polynomial.legendre.leggauss(n_quad)
    xs = 0.5 * (a + b) + 0.5 * (b - a) * gl_x
    wx = 0.5 * (b - a) * gw_x

    half = max(4, n_quad // 2)
    gl, gw = np.polynomial.legendre.leggauss(half)
    # per-x inner nodes: panels [a, x] and [x, b] around the diagonal kink
    mid_l, hl = 0.5 * (a + xs), 0.5 * (xs - a)
    mid_r, hr = 0.5 * (xs + b), 0.5 * (b - xs)
    Y = np.concatenate([mid_l[:, None] + hl[:, None] * gl,
                        mid_r[:, None] + hr[:, None] * gl], axis=1)
    WY = np.concatenate([hl[:, None] * gw, hr[:, None] * gw], axis=1)

    Xp = np.repeat(xs, Y.shape[1]).reshape(Y.shape)
    E = (fn(Xp.ravel(), Y.ravel()).reshape(Y.shape)
         - spec.exact_green(Xp.ravel(), Y.ravel()).reshape(Y.shape))
    WE = WY * E

    gammas = np.empty(J)
    for j in range(1, J + 1):
        inner = (WE * (np.sqrt(2.0) * np.sin(j * np.pi * Y))).sum(axis=1)
        gammas[j - 1] = abs(np.sum(wx * np.sqrt(2.0) * np.sin(j * np.pi * xs) * inner))
    total = float(np.sum(wx * (WY * E * E).sum(axis=1)))
    return gammas, total


@dataclass
class BiasRow:
    epoch: int
    eta: int
    l_eta_plus: float
    l_total: float
    gammas: np.ndarray


@dataclass
class BiasReport:
    rows: list[BiasRow]
    J: int

    def write_csv(self, path: str):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["epoch", "eta", "L_eta_plus", "L_total"]
                       + [f"gamma_{j}" for j in range(1, self.J + 1)])
            for r in self.rows:
                w.writerow([r.epoch, r.eta, repr(r.l_eta_plus), repr(r.l_total)]
                           + [repr(float(g)) for g in r.gammas])


def bias_track(snapshots: Sequence[tuple[int, KernelLike]], spec: ProblemSpec,
               etas: Sequence[int], J: int = 64, n_quad: int = 512) -> BiasReport:
    """Frequency-resolved error trajectories over training snapshots.

    L_{eta+} sums gamma_j^2 over eta <= j <= J (truncated tail; the Bessel
    inequality against L_total bounds what the truncation can hide)."""
    rows = []
    for epoch, kern in snapshots:
        gam, total = gamma_with_total(kern, spec, J, n_quad)
        for eta in etas:
            if not (1 <= eta <= J):
                raise ValueError(f"eta={eta} outside 1..J={J}")
            rows.append(BiasRow(epoch=epoch, eta=eta,
                                l_eta_plus=float(np.sum(gam[eta - 1:] ** 2)),
                                l_total=total, gammas=gam))
    return BiasReport(rows=rows, J=J)


@dataclass
class FitConfig:
    """Supervised fit of the lifted network to the exact kernel (the
    simplified objective used for the spectral-bias study)."""

    hidden_widths: list[int] = field(default_factory=lambda: [40, 40, 40, 40])
    epochs: int = 2000
    n_pairs: int = 4096
    lr: float = 1e-3
    seed: int = 0
    snapshot_every: int = 500


def fit_exact_kernel(spec: ProblemSpec, config: FitConfig,
                     snapshot_hook=None) -> tuple[MlpParams, list[tuple[int, MlpParams]]]:
    """Minimize mean (Ghat(x,y,r) - G(x,y))^2 over fixed uniform pairs."""
    if spec.exact_green is None:
        raise ValueError("fitting requires a problem with an exact kernel")
    tune_for_large_batches()
    rng = np.random.default_rng(config.seed)
    a, b = spec.domain
    params = init_params(3, config.hidden_widths, rng)
    xs = rng.uniform(a, b, config.n_pairs)
    ys = rng.uniform(a, b, config.n_pairs)
    X = lift_pairs(xs, ys)
    target = spec.exact_green(xs, ys)
    state = AdamState(lr=config.lr)
    snapshots: list[tuple[int, MlpParams]] = []
    for epoch in range(config.epochs):
        net = TapedNet(params)
        resid = net.forward(X) - target
        loss = (resid * resid).mean()
        grad = net.grad(loss)
        params, state = adam_step(params, grad, state)
        if (epoch + 1) % config.snapshot_every == 0 or epoch + 1 == config.epochs:
            snapshots.append((epoch + 1, params))
            if snapshot_hook is not None:
                snapshot_hook(epoch + 1, params)
    return params, snapshots
