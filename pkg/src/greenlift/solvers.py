"""Iterative solvers and spectral diagnostics.

GMRES is Arnoldi with modified Gram-Schmidt (one conditional
reorthogonalization pass) and Givens rotations on the Hessenberg least
squares problem, so the residual norm falls out of the rotated right-hand
side without forming iterates.  The preconditioned variant runs GMRES on
B A with starting residual B(F - A U0) and additionally tracks the true
relative residual ||F - A U_m|| / ||F||, which is what termination tests.

The hybrid method alternates one kernel correction U += B(F - AU), which
kills low-frequency error, with damped Jacobi sweeps, which kill the
high-frequency error the kernel application reintroduces.

Mode-wise error coefficients are coordinates in the orthonormal discrete
sine basis (DST-I), the eigenvectors of the constant-coefficient operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.fft
import scipy.linalg

from .assemble import DenseKernelMatrix, LinearSystem


@dataclass(frozen=True)
class GmresConfig:
    tol: float = 1e-10
    max_iter: int = 1000
    restart: Optional[int] = None

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")


@dataclass(frozen=True)
class HybridConfig:
    omega: float = 2.0 / 3.0
    jacobi_steps: int = 1       # damped-Jacobi sweeps per cycle
    cycles: int = 25
    tol: float = 1e-12

    def __post_init__(self):
        if not (0.0 < self.omega <= 1.0):
            raise ValueError("relaxation omega must lie in (0, 1]")
        if self.jacobi_steps < 0 or self.cycles < 1:
            raise ValueError("jacobi_steps >= 0 and cycles >= 1 required")


@dataclass
class IterTrace:
    """Per-(sub)step history.  ``stage`` labels hybrid sub-steps
    ("kernel"/"jacobi"); plain solvers leave it empty."""

    relres: list[float] = field(default_factory=list)
    err2: list[float] = field(default_factory=list)
    modes: list[np.ndarray] = field(default_factory=list)
    stage: list[str] = field(default_factory=list)
    precond_relres: list[float] = field(default_factory=list)
    breakdown: bool = False
    stagnated: bool = False
    diverged: bool = False

    def record(self, relres: float, err: Optional[np.ndarray] = None,
               stage: str = "", precond: Optional[float] = None):
        self.relres.append(float(relres))
        if err is not None:
            self.err2.append(float(np.linalg.norm(err)))
            self.modes.append(mode_errors(err, err.size))
        self.stage.append(stage)
        if precond is not None:
            self.precond_relres.append(float(precond))

    def write_csv(self, path: str, with_modes: bool = True):
        import csv
        n_modes = self.modes[0].size if (with_modes and self.modes) else 0
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            header = ["iteration", "relres", "err2"]
            header += [f"mode_{j}" for j in range(1, n_modes + 1)]
            if any(self.stage):
                header.append("stage")
            w.writerow(header)
            for i, rr in enumerate(self.relres):
                row = [i, repr(rr)]
                row.append(repr(self.err2[i]) if i < len(self.err2) else "")
                if n_modes:
                    row += [repr(float(v)) for v in self.modes[i]]
                if any(self.stage):
                    row.append(self.stage[i])
                w.writerow(row)


MatrixLike = Union[np.ndarray, LinearSystem, Callable[[np.ndarray], np.ndarray]]


def _as_matvec(A: MatrixLike) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(A, LinearSystem):
        return A.matvec
    if isinstance(A, np.ndarray):
        return lambda v: A @ v
    return A


def gmres(A: MatrixLike, F: np.ndarray, config: GmresConfig,
          exact_U: Optional[np.ndarray] = None) -> tuple[np.ndarray, IterTrace]:
    """Restart-free (or restarted) GMRES from a zero initial guess."""
    matvec = _as_matvec(A)
    F = np.asarray(F, dtype=np.float64)
    trace = IterTrace()
    U = np.zeros_like(F)
    fnorm = np.linalg.norm(F)
    if fnorm == 0.0:
        return U, trace
    cycle = config.restart or config.max_iter
    total = 0
    while total < config.max_iter:
        steps = min(cycle, config.max_iter - total)
        U, done = _gmres_cycle(matvec, F, U, fnorm, config.tol, steps, trace, exact_U)
        total = len(trace.relres)
        if done:
            break
        if config.restart is None:
            break
    return U, trace


def _gmres_cycle(matvec, F, U0, fnorm, tol, steps, trace: IterTrace,
                 exact_U=None) -> tuple[np.ndarray, bool]:
    n = F.size
    r0 = F - matvec(U0)
    beta = np.linalg.norm(r0)
    if beta / fnorm <= tol:
        return U0, True
    Q = np.empty((steps + 1, n))
    Q[0] = r0 / beta
    H = np.zeros((steps + 1, steps))
    cs = np.zeros(steps)
    sn = np.zeros(steps)
    g = np.zeros(steps + 1)
    g[0] = beta
    m_used = 0
    converged = False
    for m in range(steps):
        w = matvec(Q[m])
        norm_before = np.linalg.norm(w)
        for j in range(m + 1):
            H[j, m] = Q[j] @ w
            w -= H[j, m] * Q[j]
        # DGK test: redo the projection once if cancellation ate the vector
        if np.linalg.norm(w) < 0.5 * norm_before:
            for j in range(m + 1):
                corr = Q[j] @ w
                H[j, m] += corr
                w -= corr * Q[j]
        hnext = np.linalg.norm(w)
        H[m + 1, m] = hnext

        for j in range(m):
            t = cs[j] * H[j, m] + sn[j] * H[j + 1, m]
            H[j + 1, m] = -sn[j] * H[j, m] + cs[j] * H[j + 1, m]
            H[j, m] = t
        rho = np.hypot(H[m, m], H[m + 1, m])
        cs[m] = H[m, m] / rho
        sn[m] = H[m + 1, m] / rho
        H[m, m] = rho
        H[m + 1, m] = 0.0
        g[m + 1] = -sn[m] * g[m]
        g[m] = cs[m] * g[m]

        m_used = m + 1
        relres = abs(g[m + 1]) / fnorm
        if exact_U is not None:
            y = scipy.linalg.solve_triangular(H[:m_used, :m_used], g[:m_used])
            trace.record(relres, (U0 + Q[:m_used].T @ y) - exact_U)
        else:
            trace.record(relres)

        happy = hnext <= 1e-14 * max(1.0, norm_before)
        if relres <= tol or happy:
            trace.breakdown = happy and relres > tol
            converged = True
            break
        Q[m + 1] = w / hnext

    y = scipy.linalg.solve_triangular(H[:m_used, :m_used], g[:m_used])
    U = U0 + Q[:m_used].T @ y
    if not converged and len(trace.relres) >= 2 and trace.relres[-1] >= trace.relres[-2] * (1 - 1e-12):
        trace.stagnated = True
    return U, converged


def pgmres(A: MatrixLike, Bhat: Union[DenseKernelMatrix, np.ndarray],
           F: np.ndarray, config: GmresConfig,
           exact_U: Optional[np.ndarray] = None) -> tuple[np.ndarray, IterTrace]:
    """Left-preconditioned GMRES on B A U = B F, tracking (and terminating
    on) the true relative residual."""
    matvec = _as_matvec(A)
    B = Bhat.matrix if isinstance(Bhat, DenseKernelMatrix) else np.asarray(Bhat)
    F = np.asarray(F, dtype=np.float64)
    if B.shape != (F.size, F.size):
        raise ValueError(f"preconditioner shape {B.shape} does not match n={F.size}")
    fnorm = np.linalg.norm(F)
    trace = IterTrace()
    if fnorm == 0.0:
        return np.zeros_like(F), trace

    n = F.size
    BF = B @ F
    bnorm = np.linalg.norm(BF)
    steps = config.max_iter
    Q = np.empty((steps + 1, n))
    Q[0] = BF / bnorm
    H = np.zeros((steps + 1, steps))
    cs = np.zeros(steps)
    sn = np.zeros(steps)
    g = np.zeros(steps + 1)
    g[0] = bnorm
    U = np.zeros_like(F)
    for m in range(steps):
        w = B @ matvec(Q[m])
        norm_before = np.linalg.norm(w)
        for j in range(m + 1):
            H[j, m] = Q[j] @ w
            w -= H[j, m] * Q[j]
        if np.linalg.norm(w) < 0.5 * norm_before:
            for j in range(m + 1):
                corr = Q[j] @ w
                H[j, m] += corr
                w -= corr * Q[j]
        hnext = np.linalg.norm(w)
        H[m + 1, m] = hnext
        for j in range(m):
            t = cs[j] * H[j, m] + sn[j] * H[j + 1, m]
            H[j + 1, m] = -sn[j] * H[j, m] + cs[j] * H[j + 1, m]
            H[j, m] = t
        rho = np.hypot(H[m, m], H[m + 1, m])
        cs[m] = H[m, m] / rho
        sn[m] = H[m + 1, m] / rho
        H[m, m] = rho
        H[m + 1, m] = 0.0
        g[m + 1] = -sn[m] * g[m]
        g[m] = cs[m] * g[m]

        y = scipy.linalg.solve_triangular(H[:m + 1, :m + 1], g[:m + 1])
        U = Q[:m + 1].T @ y
        true_rel = np.linalg.norm(F - matvec(U)) / fnorm
        trace.record(true_rel, None if exact_U is None else U - exact_U,
                     precond=abs(g[m + 1]) / bnorm)
        happy = hnext <= 1e-14 * max(1.0, norm_before)
        if true_rel <= config.tol or happy:
            trace.breakdown = happy and true_rel > config.tol
            break
        Q[m + 1] = w / hnext
    return U, trace


def damped_jacobi_step(system: LinearSystem, U: np.ndarray, omega: float) -> np.ndarray:
    """One weighted Jacobi sweep; the exact solution is a fixed point."""
    if np.any(system.diag == 0.0):
        raise ZeroDivisionError("zero diagonal entry: Jacobi smoother undefined")
    return U + omega * (system.F - system.matvec(U)) / system.diag


def jacobi_iteration_matrix(system: LinearSystem) -> np.ndarray:
    """Dense D^-1 A; the damped-Jacobi error-propagation matrix for any
    omega is then G_omega = I - omega * (D^-1 A)."""
    return system.dense() / system.diag[:, None]


def hybrid_solve(system: LinearSystem, Bhat: Union[DenseKernelMatrix, np.ndarray],
                 config: HybridConfig,
                 exact_U: Optional[np.ndarray] = None) -> tuple[np.ndarray, IterTrace]:
    """Alternate one kernel correction with damped Jacobi sweeps."""
    B = Bhat.matrix if isinstance(Bhat, DenseKernelMatrix) else np.asarray(Bhat)
    F = system.F
    fnorm = np.linalg.norm(F)
    U = np.zeros_like(F)
    trace = IterTrace()
    err = None if exact_U is None else U - exact_U
    trace.record(np.linalg.norm(F - system.matvec(U)) / fnorm, err, stage="init")
    initial = trace.relres[0]
    for m in range(config.cycles):
        U = U + B @ (F - system.matvec(U))
        rel = np.linalg.norm(F - system.matvec(U)) / fnorm
        trace.record(rel, None if exact_U is None else U - exact_U, stage="kernel")
        for _ in range(config.jacobi_steps):
            U = damped_jacobi_step(system, U, config.omega)
            rel = np.linalg.norm(F - system.matvec(U)) / fnorm
            trace.record(rel, None if exact_U is None else U - exact_U, stage="jacobi")
        if rel <= config.tol:
            break
        if rel > 1e6 * max(initial, 1e-300):
            trace.diverged = True
            break
    return U, trace


def mode_errors(error: np.ndarray, n: int) -> np.ndarray:
    """Coefficients of ``error`` in the orthonormal discrete sine basis;
    Parseval: sum of squares equals ||error||^2."""
    error = np.asarray(error, dtype=np.float64)
    if error.size != n:
        raise ValueError(f"error vector has size {error.size}, expected {n}")
    return scipy.fft.dst(error, type=1, norm="ortho")


def modes_to_error(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of mode_errors (DST-I is self-inverse in ortho form)."""
    return scipy.fft.dst(np.asarray(coeffs, dtype=np.float64), type=1, norm="ortho")


@dataclass(frozen=True)
class SpectralCondition:
    kappa: float
    eigenvalues: np.ndarray       # complex, sorted by real part
    complex_flagged: bool
    one_signed: bool


def spectral_condition(M: np.ndarray, complex_tol: float = 1e-6) -> SpectralCondition:
    """kappa = (lambda_max lambda_min) / (lambda_s lambda_{s+1}) for an
    indefinite real spectrum split at zero; one-signed spectra degrade to
    max|lambda| / min|lambda|.  A genuinely complex pair only flags the
    result (kappa then uses real parts)."""
    M = np.asarray(M)
    lam = scipy.linalg.eigvals(M)
    lam = lam[np.argsort(lam.real)]
    scale = np.abs(lam).max()
    flagged = bool(np.any(np.abs(lam.imag) > complex_tol * max(scale, 1e-300)))
    re = lam.real
    neg = re[re < 0]
    pos = re[re > 0]
    if len(neg) == 0 or len(pos) == 0:
        nz = np.abs(re[re != 0])
        kappa = float(nz.max() / nz.min()) if len(nz) else np.inf
        return SpectralCondition(kappa=kappa, eigenvalues=lam,
                                 complex_flagged=flagged, one_signed=True)
    lam_min, lam_s = neg.min(), neg.max()
    lam_s1, lam_max = pos.min(), pos.max()
    kappa = float((lam_max * lam_min) / (lam_s * lam_s1))
    return SpectralCondition(kappa=kappa, eigenvalues=lam,
                             complex_flagged=flagged, one_signed=False)


def write_eigenvalues_csv(path: str, eigenvalues: Sequence[complex]):
    import csv
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["index", "re", "im"])
        for i, ev in enumerate(eigenvalues):
            w.writerow([i, repr(float(np.real(ev))), repr(float(np.imag(ev)))])
