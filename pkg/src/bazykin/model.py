"""Dimensional and nondimensional ratio-dependent Bazykin systems.

The dimensional model tracks prey N and predators P with a logistic prey
term, a ratio-dependent consumption term q*N*P/(N + a*P) and linear predator
density dependence.  All analysis happens on the nondimensional system

    du/dtau = u*(1 - u)*(u + v) - Q*u*v
    dv/dtau = C*u*v - v*(u + v)*(M + N*v)

obtained by rescaling (N, P, t) -> (u, v, tau); the rescaling is a
time-orientation preserving diffeomorphism away from the origin, so the
phase portraits of the two systems are topologically equivalent.  The time
rescaling is state dependent, hence no inverse time map is exposed: the
package works exclusively in nondimensional time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: absolute guard used when comparing against division poles
POLE_TOL = 1e-12


@dataclass(frozen=True)
class DimensionalParams:
    """Parameters of the dimensional predator-prey model.

    r     prey intrinsic growth rate (1/time)
    K     prey carrying capacity (population)
    q     per-capita predation rate (population/time)
    a     prey level at which the predation effect is maximal (population)
    c     conversion efficiency of consumed prey into predators
    mu0   predator per-capita death rate (1/time)
    mu1   predator density death rate (1/(population*time))
    """

    r: float
    K: float
    q: float
    a: float
    c: float
    mu0: float
    mu1: float

    def __post_init__(self):
        for name in ("r", "K", "q", "a", "c", "mu0", "mu1"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"dimensional parameter {name} must be positive")


@dataclass(frozen=True)
class Params:
    """The four nondimensional parameters.

    C     conversion efficiency
    M     scaled predator death rate
    N     scaled density death rate
    Q     scaled predation rate
    """

    C: float
    M: float
    N: float
    Q: float

    def __post_init__(self):
        for name in ("C", "M", "N", "Q"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"parameter {name} must be positive")

    def astuple(self) -> tuple[float, float, float, float]:
        return (self.C, self.M, self.N, self.Q)


@dataclass(frozen=True)
class State:
    """A point (u, v) in the closed first quadrant of the scaled phase plane."""

    u: float
    v: float

    def __post_init__(self):
        if self.u < 0.0 or self.v < 0.0:
            raise DomainError(f"state ({self.u}, {self.v}) outside the closed first quadrant")

    def astuple(self) -> tuple[float, float]:
        return (self.u, self.v)


def nondimensionalize(p: DimensionalParams) -> Params:
    """Map the seven dimensional parameters onto (C, M, N, Q).

    C = c,  M = mu0/r,  N = mu1*K/(a*r),  Q = q/(a*r).
    """
    ar = p.a * p.r
    return Params(C=p.c, M=p.mu0 / p.r, N=p.mu1 * p.K / ar, Q=p.q / ar)


def vector_field(params: Params, s: State) -> tuple[float, float]:
    """Right-hand side (du/dtau, dv/dtau) of the nondimensional system."""
    C, M, N, Q = params.astuple()
    u, v = s.u, s.v
    du = u * (1.0 - u) * (u + v) - Q * u * v
    dv = C * u * v - v * (u + v) * (M + N * v)
    return (du, dv)


def jacobian(params: Params, s: State) -> np.ndarray:
    """Jacobian matrix of the vector field, evaluated symbolically.

    Every entry carries a factor of u or v, so the matrix vanishes at the
    origin: the origin is a degenerate (linearisation-free) equilibrium.
    """
    C, M, N, Q = params.astuple()
    u, v = s.u, s.v
    return np.array(
        [
            [2.0 * u + v - Q * v - 2.0 * u * v - 3.0 * u * u, -u * (Q + u - 1.0)],
            [-v * (M - C + N * v), C * u - 3.0 * N * v * v - M * u - 2.0 * M * v - 2.0 * N * u * v],
        ]
    )


def prey_nullcline(params: Params, u: float) -> float:
    """Nontrivial prey nullcline v(u) = u*(1 - u)/(Q - 1 + u).

    Has a pole at u = 1 - Q; evaluation within POLE_TOL of the pole raises
    :class:`DomainError`.
    """
    denom = params.Q - 1.0 + u
    if abs(denom) < POLE_TOL:
        raise DomainError(f"prey nullcline pole at u = {1.0 - params.Q}")
    return u * (1.0 - u) / denom


def predator_nullcline(params: Params, u: float) -> float:
    """Nontrivial predator nullcline: the nonnegative root of the quadratic
    N*v^2 + (M + N*u)*v - u*(C - M) = 0 in v.

    For u >= 0 the discriminant is nonnegative, so the root is always real.
    """
    if u < 0.0:
        raise DomainError("predator nullcline requires u >= 0")
    C, M, N, _ = params.astuple()
    b = M + N * u
    return (-b + np.sqrt(b * b + 4.0 * N * u * (C - M))) / (2.0 * N)
