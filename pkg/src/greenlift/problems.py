"""Problem catalog: coefficients, forcings, closed-form references.

All three catalog problems pose -(c(x) u')' - k(x)^2 u = f on an interval
with homogeneous Dirichlet data.  Where a closed form is known (solution,
Green's function, eigenpairs) it is carried on the spec so downstream
solvers and diagnostics can be checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np


class ResonanceError(ValueError):
    """Wavenumber hits (or nearly hits) an eigenvalue: kernel undefined."""


RESONANCE_TOL = 1e-8


@dataclass(frozen=True)
class SmoothCoefficient:
    """Smooth diffusion coefficient c (nonzero on the domain) with its
    derivative, plus the wavenumber profile k(x)."""

    c: Callable[[np.ndarray], np.ndarray]
    c_prime: Callable[[np.ndarray], np.ndarray]
    k: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PiecewiseCoefficient:
    """Nonzero piecewise-constant diffusion: c1 left of alpha, c2 right;
    constant wavenumber."""

    c1: float
    c2: float
    alpha: float
    k: float

    def __post_init__(self):
        if self.c1 == 0.0 or self.c2 == 0.0:
            raise ValueError("piecewise coefficient values must be nonzero")

    def c(self, x):
        return np.where(np.asarray(x) < self.alpha, self.c1, self.c2)


CoefficientSpec = Union[SmoothCoefficient, PiecewiseCoefficient]


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: tuple[float, float]
    coeff: CoefficientSpec
    forcing: Callable[[np.ndarray], np.ndarray]
    exact_solution: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_green: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    @property
    def is_piecewise(self) -> bool:
        return isinstance(self.coeff, PiecewiseCoefficient)

    @property
    def alpha(self) -> Optional[float]:
        return self.coeff.alpha if self.is_piecewise else None


def _check_offresonance(k: float):
    j = np.sqrt(max(k, 0.0) ** 2) / np.pi
    if abs(np.sin(k)) < RESONANCE_TOL or abs(j - round(j)) * np.pi < RESONANCE_TOL:
        raise ResonanceError(f"k={k} is within {RESONANCE_TOL} of a Dirichlet "
                             "eigenvalue j*pi; Green's function undefined")


def exact_green_helmholtz(x, y, k: float = 10.0):
    """Green's function of -u'' - k^2 u on (0,1) with u(0)=u(1)=0:
    G = -sin(k min)sin(k(max-1)) / (k sin k).  Symmetric; vanishes on the
    boundary; dG/dy jumps by -1 across y=x."""
    _check_offresonance(k)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    return -np.sin(k * lo) * np.sin(k * (hi - 1.0)) / (k * np.sin(k))


def exact_green_laplace(x, y):
    """k=0 limit on (0,1): G = min(x,y)(1 - max(x,y))."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return np.minimum(x, y) * (1.0 - np.maximum(x, y))


def benchmark_helmholtz(k: float = 10.0) -> ProblemSpec:
    """-u'' - k^2 u = f on (0,1), the wide-band forcing benchmark.

    The target solution is u(x) = 10x - 10x^2 + 0.5 sin(20 pi x^3), and the
    forcing is -u'' - k^2 u evaluated in closed form:

        f(x) = 20 - 60 pi x cos(20 pi x^3) + 1800 pi^2 x^4 sin(20 pi x^3)
               - k^2 (10x - 10x^2 + 0.5 sin(20 pi x^3))

    (without the -k^2 u completion the classic first half of this formula
    is the forcing of the Poisson problem u'' = -f, and the direct solves
    would not converge to the stated u).
    """
    _check_offresonance(k)

    def forcing(x):
        x = np.asarray(x, dtype=np.float64)
        s = 20.0 * np.pi * x ** 3
        f = (20.0 - 60.0 * np.pi * x * np.cos(s)
             + 1800.0 * np.pi ** 2 * x ** 4 * np.sin(s))
        u = 10.0 * x - 10.0 * x ** 2 + 0.5 * np.sin(s)
        return f - k ** 2 * u

    def solution(x):
        x = np.asarray(x, dtype=np.float64)
        return 10.0 * x - 10.0 * x ** 2 + 0.5 * np.sin(20.0 * np.pi * x ** 3)

    coeff = SmoothCoefficient(
        c=lambda x: np.ones_like(np.asarray(x, dtype=np.float64)),
        c_prime=lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        k=lambda x, _k=k: np.full_like(np.asarray(x, dtype=np.float64), _k),
    )
    return ProblemSpec(
        name="benchmark-helmholtz",
        domain=(0.0, 1.0),
        coeff=coeff,
        forcing=forcing,
        exact_solution=solution,
        exact_green=lambda x, y, _k=k: exact_green_helmholtz(x, y, _k),
    )


def variable_coeff_problem() -> ProblemSpec:
    """-((x-2)^2 u')' - (15 sin 10x)^2 u = f on (0,1).

    No closed-form Green's function; the forcing is manufactured from
    u(x) = x(1-x) + 0.5 sin(2 pi x) so solution recovery stays checkable.
    """

    def u(x):
        x = np.asarray(x, dtype=np.float64)
        return x * (1.0 - x) + 0.5 * np.sin(2.0 * np.pi * x)

    def u1(x):
        return 1.0 - 2.0 * np.asarray(x, dtype=np.float64) \
            + np.pi * np.cos(2.0 * np.pi * np.asarray(x, dtype=np.float64))

    def u2(x):
        return -2.0 - 2.0 * np.pi ** 2 * np.sin(2.0 * np.pi * np.asarray(x, dtype=np.float64))

    c = lambda x: (np.asarray(x, dtype=np.float64) - 2.0) ** 2
    c_prime = lambda x: 2.0 * (np.asarray(x, dtype=np.float64) - 2.0)
    kf = lambda x: 15.0 * np.sin(10.0 * np.asarray(x, dtype=np.float64))

    def forcing(x):
        return manufactured_forcing(c, c_prime, kf, u, u1, u2, x)

    return ProblemSpec(
        name="variable-coeff",
        domain=(0.0, 1.0),
        coeff=SmoothCoefficient(c=c, c_prime=c_prime, k=kf),
        forcing=forcing,
        exact_solution=u,
    )


def manufactured_forcing(c, c_prime, k, u, u_prime, u_second, x):
    """f = -(c u')' - k^2 u = -(c' u' + c u'') - k^2 u."""
    x = np.asarray(x, dtype=np.float64)
    return -(c_prime(x) * u_prime(x) + c(x) * u_second(x)) - k(x) ** 2 * u(x)


def interface_problem() -> ProblemSpec:
    """-(c u')' - 100 u = f on (-1,1), c = 1 on (-1,0) and 2 on (0,1).

    The solution is the piecewise cubic u = x^3 + 2x^2 + x on (-1,0) and
    0.5x^3 - x^2 + 0.5x on (0,1): it vanishes at the endpoints, is
    continuous at 0, and carries continuous flux c u' (both sides give 1).
    The forcing value placed exactly at the interface is the two-sided
    average (here 0), which is what the finite-volume row at the interface
    node integrates.
    """

    def forcing(x):
        x = np.asarray(x, dtype=np.float64)
        left = -100.0 * x ** 3 - 200.0 * x ** 2 - 106.0 * x - 4.0
        right = -50.0 * x ** 3 + 100.0 * x ** 2 - 56.0 * x + 4.0
        return np.select([x < 0.0, x > 0.0], [left, right], default=0.0)

    def solution(x):
        x = np.asarray(x, dtype=np.float64)
        left = x ** 3 + 2.0 * x ** 2 + x
        right = 0.5 * x ** 3 - x ** 2 + 0.5 * x
        return np.where(x < 0.0, left, right)

    return ProblemSpec(
        name="interface",
        domain=(-1.0, 1.0),
        coeff=PiecewiseCoefficient(c1=1.0, c2=2.0, alpha=0.0, k=10.0),
        forcing=forcing,
        exact_solution=solution,
    )


def exact_eigenpair(j: int, k: float = 10.0):
    """Eigenpair of the benchmark integral operator: mu_j = 1/(j^2 pi^2 - k^2),
    phi_j = sqrt(2) sin(j pi x)."""
    if j < 1:
        raise ValueError("mode index must be >= 1")
    denom = j ** 2 * np.pi ** 2 - k ** 2
    if abs(denom) < RESONANCE_TOL:
        raise ResonanceError(f"mode j={j} resonates with k={k}")
    mu = 1.0 / denom

    def phi(x, _j=j):
        return np.sqrt(2.0) * np.sin(_j * np.pi * np.asarray(x, dtype=np.float64))

    return mu, phi


CATALOG = {
    "benchmark-helmholtz": benchmark_helmholtz,
    "variable-coeff": variable_coeff_problem,
    "interface": interface_problem,
}


def by_name(name: str) -> ProblemSpec:
    try:
        return CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choices: {sorted(CATALOG)}") from None
