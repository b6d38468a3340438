"""Closed-form equilibria of the nondimensional system and their stability.

Interior equilibria are roots of a quadratic whose coefficients are the
algebraic combinations sigma1, sigma2, sigma3 and discriminant delta of the
parameters (C, M, N, Q).  The case analysis on (sigma2, delta, N - M)
decides whether there are zero, one or two interior points, or a single
point of multiplicity two where the pair collides.

The origin is degenerate (zero Jacobian); its local structure is classified
by parameter-region membership, backed by the eigenvalues of the equilibria
of the horizontal/vertical blow-up systems.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional


from .errors import DomainError, NonGenericError
from .model import Params, State, jacobian

#: |delta| below DELTA_TOL * max(1, (M-N)^2) counts as delta = 0
DELTA_TOL = 1e-9
#: |sigma2| below SIGMA2_TOL counts as sigma2 = 0
SIGMA2_TOL = 1e-9
#: |trace| below TRACE_TOL counts as a weak focus
TRACE_TOL = 1e-9
#: equality tolerance for the origin's region boundaries
BOUNDARY_TOL = 1e-12


class CaseLabel(enum.Enum):
    """Outcome of the interior-equilibrium case analysis."""

    NoInterior_ClessM = "no interior (C <= M)"
    OneInterior_Sigma2Neg = "one interior (sigma2 < 0)"
    Collision_Sigma2Zero = "P1 merged with the origin (sigma2 = 0)"
    NoInterior_DeltaNeg = "no interior (delta < 0)"
    DoubleRoot_DeltaZero = "double root (delta = 0)"
    TwoInterior = "two interior points"
    NoInterior_NleM = "no interior (delta > 0, N <= M)"


class EquilibriumKind(enum.Enum):
    Origin = "origin"
    CarryingCapacity = "carrying capacity"
    P1 = "P1"
    P2 = "P2"
    CollapsedE = "E (collapsed pair)"


class StabilityTag(enum.Enum):
    Saddle = "saddle"
    StableNode = "stable node"
    UnstableNode = "unstable node"
    StableFocus = "stable focus"
    UnstableFocus = "unstable focus"
    WeakFocus = "weak focus"
    SaddleNodeAttractor = "saddle-node attractor"
    SaddleNodeRepeller = "saddle-node repeller"
    DegenerateOrigin = "degenerate origin"


class OriginSector(enum.Enum):
    """Local structure of the first quadrant near the origin, by parameter region."""

    SaddleRepelling_I = "saddle + repelling sector (region I)"
    AttractingElliptic_II = "attracting + elliptic sector (region II)"
    Elliptic_III = "elliptic sector (region III)"
    Saddle_IV = "saddle sector (region IV)"
    AttractingSaddle_V = "attracting + saddle sector (region V)"
    EllipticRepelling_VI = "elliptic + repelling sector (region VI)"


@dataclass(frozen=True)
class SigmaSet:
    sigma1: float
    sigma2: float
    sigma3: float
    delta: float
    case_label: CaseLabel


@dataclass(frozen=True)
class Equilibrium:
    point: State
    multiplicity: int
    kind: EquilibriumKind


@dataclass(frozen=True)
class StabilityClass:
    tag: StabilityTag
    origin_sectors: Optional[OriginSector] = None

    def __post_init__(self):
        if (self.origin_sectors is not None) != (self.tag is StabilityTag.DegenerateOrigin):
            raise ValueError("origin_sectors is set iff tag is DegenerateOrigin")


def sigma_delta(params: Params, delta_tol: float = None, sigma2_tol: float = None) -> SigmaSet:
    """Compute sigma1..sigma3, delta and assign the case label.

    The equality bands around delta = 0 and sigma2 = 0 default to the module
    tolerances; callers working with rounded parameter values (e.g. a fold
    location quoted to four decimals) may widen them explicitly.
    """
    C, M, N, Q = params.astuple()
    sigma2 = C * (Q - 1.0) - M * Q
    sigma1 = 2.0 * sigma2 + Q * (M - N)
    sigma3 = -N * sigma1 + (Q * N + C) * (M - N)
    delta = (M - N) ** 2 - 4.0 * N * sigma2

    if sigma2_tol is None:
        sigma2_tol = SIGMA2_TOL
    dtol = delta_tol if delta_tol is not None else DELTA_TOL * max(1.0, (M - N) ** 2)
    if C <= M:
        label = CaseLabel.NoInterior_ClessM
    elif sigma2 < -sigma2_tol:
        label = CaseLabel.OneInterior_Sigma2Neg
    elif abs(sigma2) <= sigma2_tol:
        label = CaseLabel.Collision_Sigma2Zero
    elif delta < -dtol:
        label = CaseLabel.NoInterior_DeltaNeg
    elif abs(delta) <= dtol:
        label = CaseLabel.DoubleRoot_DeltaZero
    elif N > M:
        label = CaseLabel.TwoInterior
    else:
        label = CaseLabel.NoInterior_NleM
    return SigmaSet(sigma1=sigma1, sigma2=sigma2, sigma3=sigma3, delta=delta, case_label=label)


def interior_equilibria(params: Params) -> list[Equilibrium]:
    """All equilibria in the open first quadrant, in closed form.

    Returns [] (no interior point), [P2], [P1, P2] with u1 < u2 and
    v1 < v2, or a single multiplicity-2 point E when the pair collides.
    """
    C, M, N, Q = params.astuple()
    sig = sigma_delta(params)
    denom = 2.0 * (C + N * Q)
    label = sig.case_label

    if label in (CaseLabel.NoInterior_ClessM, CaseLabel.NoInterior_DeltaNeg, CaseLabel.NoInterior_NleM):
        return []
    if label is CaseLabel.Collision_Sigma2Zero:
        if N <= M:
            return []
        u2 = Q * (N - M) / (C + N * Q)
        v2 = C * (N - M) / (N * (C + N * Q))
        return [Equilibrium(State(u2, v2), 1, EquilibriumKind.P2)]
    if label is CaseLabel.DoubleRoot_DeltaZero:
        if N <= M:
            return []
        u_e = -sig.sigma1 / denom
        v_e = -sig.sigma3 / (N * denom)
        if u_e <= 0.0 or v_e <= 0.0:
            return []
        return [Equilibrium(State(u_e, v_e), 2, EquilibriumKind.CollapsedE)]

    root = math.sqrt(sig.delta)
    u1 = (-sig.sigma1 - Q * root) / denom
    u2 = (-sig.sigma1 + Q * root) / denom
    v1 = (-sig.sigma3 - C * root) / (N * denom)
    v2 = (-sig.sigma3 + C * root) / (N * denom)
    if label is CaseLabel.OneInterior_Sigma2Neg:
        return [Equilibrium(State(u2, v2), 1, EquilibriumKind.P2)]
    # TwoInterior
    return [
        Equilibrium(State(u1, v1), 1, EquilibriumKind.P1),
        Equilibrium(State(u2, v2), 1, EquilibriumKind.P2),
    ]


def boundary_equilibria(params: Params) -> list[Equilibrium]:
    """The two axis equilibria (0, 0) and (1, 0); present for any parameters."""
    return [
        Equilibrium(State(0.0, 0.0), 1, EquilibriumKind.Origin),
        Equilibrium(State(1.0, 0.0), 1, EquilibriumKind.CarryingCapacity),
    ]


def classify_carrying_capacity(params: Params) -> StabilityClass:
    """(1, 0) is a saddle for C > M and a stable node for C < M."""
    if params.C == params.M:
        raise NonGenericError("C = M: (1, 0) is non-hyperbolic")
    if params.C > params.M:
        return StabilityClass(StabilityTag.Saddle)
    return StabilityClass(StabilityTag.StableNode)


def _origin_region(params: Params) -> OriginSector:
    C, M, Q = params.C, params.M, params.Q
    if Q <= 1.0 or C <= M:
        raise DomainError("origin classification requires Q > 1 and C > M")
    ratio = M * Q / (Q - 1.0)
    scale = max(1.0, abs(C), abs(M) + 1.0, abs(ratio))
    if abs(C - (M + 1.0)) < BOUNDARY_TOL * scale or abs(C - ratio) < BOUNDARY_TOL * scale \
            or abs(Q - (M + 1.0)) < BOUNDARY_TOL * scale:
        raise NonGenericError("parameters on a region boundary of the origin classification")
    if Q < M + 1.0:
        # thresholds order: M < M+1 < M*Q/(Q-1)
        if C < M + 1.0:
            return OriginSector.Saddle_IV
        if C < ratio:
            return OriginSector.SaddleRepelling_I
        return OriginSector.AttractingElliptic_II
    # Q > M+1: thresholds order M < M*Q/(Q-1) < M+1
    if C < ratio:
        return OriginSector.AttractingSaddle_V
    if C < M + 1.0:
        return OriginSector.EllipticRepelling_VI
    return OriginSector.Elliptic_III


def classify_origin(params: Params) -> StabilityClass:
    """Classify the degenerate origin by region membership in the (Q, C) plane.

    Requires the standing assumptions Q > 1 and C > M; equality with a
    region boundary raises :class:`NonGenericError`.
    """
    return StabilityClass(StabilityTag.DegenerateOrigin, _origin_region(params))


@dataclass(frozen=True)
class BlowupEigenvalues:
    """Eigenvalue pairs of the blow-up equilibria used to resolve the origin.

    o_xy / o_XY always exist; i_x / i_y only exist in regions I, II, V and
    VI and are None otherwise.
    """

    o_xy: tuple[float, float]
    o_XY: tuple[float, float]
    i_x: Optional[tuple[float, float]]
    i_y: Optional[tuple[float, float]]


def blowup_eigenvalues(params: Params) -> BlowupEigenvalues:
    """Analytic eigenvalues at the blow-up equilibria O_xy, I_x, O_XY, I_Y."""
    C, M, N, Q = params.astuple()
    region = _origin_region(params)
    if abs(1.0 + M - C) < BOUNDARY_TOL * max(1.0, C):
        raise NonGenericError("degenerate denominator 1 + M - C = 0 in the I_x eigenvalue")
    if abs(M - Q + 1.0) < BOUNDARY_TOL * max(1.0, Q):
        raise NonGenericError("degenerate denominator M - Q + 1 = 0 in the I_Y eigenvalue")
    sigma2 = C * (Q - 1.0) - M * Q
    o_xy = (1.0 + M - Q, -M)
    o_XY = (1.0, C - 1.0 - M)
    if region in (OriginSector.Elliptic_III, OriginSector.Saddle_IV):
        i_x = i_y = None
    else:
        i_x = (-1.0 - M + Q, sigma2 / (1.0 + M - C))
        i_y = (-sigma2 / (M - Q + 1.0), 1.0 + M - C)
    return BlowupEigenvalues(o_xy=o_xy, o_XY=o_XY, i_x=i_x, i_y=i_y)


def classify_interior(params: Params, e: Equilibrium) -> StabilityClass:
    """Stability of a simple interior equilibrium.

    P1 is always a saddle (negative Jacobian determinant).  P2 has positive
    determinant; its trace decides stable/unstable and the discriminant of
    the characteristic polynomial refines node vs focus.
    """
    if e.multiplicity != 1:
        raise DomainError("multiplicity-2 equilibrium: use classify_collapsed")
    if e.kind not in (EquilibriumKind.P1, EquilibriumKind.P2):
        raise DomainError("classify_interior expects an interior equilibrium")
    J = jacobian(params, e.point)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    tr = J[0, 0] + J[1, 1]
    if det < 0.0:
        return StabilityClass(StabilityTag.Saddle)
    if abs(tr) < TRACE_TOL:
        return StabilityClass(StabilityTag.WeakFocus)
    disc = tr * tr - 4.0 * det
    if tr < 0.0:
        return StabilityClass(StabilityTag.StableNode if disc >= 0.0 else StabilityTag.StableFocus)
    return StabilityClass(StabilityTag.UnstableNode if disc >= 0.0 else StabilityTag.UnstableFocus)


def saddle_node_trace_threshold(M: float, N: float) -> float:
    """Critical conversion efficiency C* at which the collapsed equilibrium E
    changes from saddle-node repeller (C < C*) to attractor (C > C*)."""
    A = -8.0 * M * N * N - (1.0 - N) * (M + N) ** 2
    return (-A + math.sqrt(16.0 * M * N ** 3 * (M - N) ** 2 + A * A)) / (8.0 * N * N)


def classify_collapsed(params: Params, delta_tol: float = None) -> StabilityClass:
    """Stability of the multiplicity-2 equilibrium E on the fold delta = 0."""
    C, M, N, _ = params.astuple()
    sig = sigma_delta(params, delta_tol=delta_tol)
    if sig.case_label is not CaseLabel.DoubleRoot_DeltaZero or N <= M:
        raise DomainError("classify_collapsed requires the double-root case with N > M")
    c_star = saddle_node_trace_threshold(M, N)
    if abs(C - c_star) < TRACE_TOL * max(1.0, c_star):
        raise NonGenericError("C = C*: trace also vanishes (Bogdanov-Takens candidate)")
    if C < c_star:
        return StabilityClass(StabilityTag.SaddleNodeRepeller)
    return StabilityClass(StabilityTag.SaddleNodeAttractor)


def classify_sigma2zero(params: Params) -> StabilityClass:
    """Stability of P2 when P1 has merged with the origin (sigma2 = 0).

    The closed-form trace is strictly negative and the determinant positive
    whenever N > M, so P2 is a stable node.
    """
    C, M, N, _ = params.astuple()
    sig = sigma_delta(params)
    if not (C > M) or abs(sig.sigma2) > SIGMA2_TOL:
        raise DomainError("classify_sigma2zero requires C > M and sigma2 = 0")
    if N <= M:
        raise DomainError("N <= M: no interior equilibrium remains at sigma2 = 0")
    return StabilityClass(StabilityTag.StableNode)


def residual(params: Params, e: Equilibrium) -> float:
    """Max-norm of the vector field at an equilibrium (consistency check)."""
    from .model import vector_field

    du, dv = vector_field(params, e.point)
    return max(abs(du), abs(dv))
