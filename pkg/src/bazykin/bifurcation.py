"""Analytic bifurcation loci and the quantities certifying them.

Four families of results live here:

* the saddle-node locus delta = 0, solved for Q in closed form, together
  with the Sotomayor nondegeneracy quantities;
* the Hopf machinery in the (U, V) equilibrium chart: the trace and
  determinant factors T and D, the solved-out M on the Hopf set, the first
  Lyapunov quantity l1 and the Bautin point where it vanishes;
* the Bogdanov-Takens point (C*, Q*) with the generalised eigenvectors,
  the transversality determinant and the normal-form coefficients;
* assembly of the (Q, C) bifurcation diagram skeleton from the loci above
  plus the homoclinic bisection of the dynamics module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NonGenericError, NotFoundError
from .model import Params, State, jacobian
from .equilibria import (
    CaseLabel,
    EquilibriumKind,
    interior_equilibria,
    sigma_delta,
    saddle_node_trace_threshold,
)

__all__ = [
    "trace_split",
    "trace_sign_quantity",
    "saddle_node_Q",
    "SotomayorCheck",
    "sotomayor_check",
    "hopf_T",
    "hopf_D",
    "hopf_M",
    "L1Sign",
    "HopfData",
    "lyapunov_l1",
    "hopf_curve_UV",
    "bautin_point",
    "psi_map",
    "hopf_Q",
    "BTData",
    "bt_point",
    "BifDiagram",
    "trace_diagram",
]

#: |l1| below this counts as a degenerate (Bautin) Hopf point
L1_TOL = 1e-10


# ---------------------------------------------------------------------------
# trace-sign split at P2


def trace_split(params: Params) -> tuple[float, float]:
    """The published polynomials (T1, T2) whose combination T1*sqrt(delta) + T2
    carries the sign of the trace at P2 (up to the positive factor
    1/(N*(C+NQ)^2)).

    These are transcribed verbatim from the source derivation.  Note that at
    the reference point (0.363, 0.16, 0.25, 1.6) the combination does not
    reproduce the historically quoted value; see the regression test for the
    documented discrepancy.  Stability decisions in this package always use
    the Jacobian trace itself, never this split.
    """
    C, M, N, Q = params.astuple()
    t1 = (
        N * Q ** 2 * (3 * C - M - N - C * N ** 2 + M * N ** 2)
        + C * Q * (C - 3 * N - C * N ** 2 - 2 * C * N ** 3 + M * N ** 2 + 2 * M * N ** 3)
        + C ** 2 * (M * N ** 2 + N ** 3 - 1)
    )
    t2 = (
        4 * N ** 2 * Q ** 3 * (C - M)
        - N * Q ** 2 * (
            C * N ** 3 - M * N ** 3 - 2 * C ** 2 * N ** 2 + 2 * C ** 2 * N ** 3
            - M ** 2 * N ** 2 + 2 * M ** 2 * N ** 3 + C * M + 3 * C * N - 2 * M * N
            + M ** 2 + N ** 2 + 3 * C * M * N ** 2 - 4 * C * M * N ** 3
        )
        + C * Q * (
            -3 * C * N ** 3 + 2 * C * N ** 4 + 3 * M * N ** 3 - 2 * M * N ** 4
            + 2 * C ** 2 * N ** 2 + 2 * C ** 2 * N ** 3 + M ** 2 * N ** 2
            - 2 * M ** 2 * N ** 3 - C * M + C * N + M * N - N ** 2 - 3 * C * M * N ** 2
        )
        - C ** 2 * (
            -M + N + 2 * C * N ** 2 + 2 * C * N ** 3 - 2 * M * N ** 2
            + M ** 2 * N ** 2 + N ** 4
        )
    )
    return (t1, t2)


def trace_sign_quantity(params: Params) -> float:
    """T1*sqrt(delta) + T2 for the published trace-sign split at P2."""
    sig = sigma_delta(params)
    if sig.delta < 0.0:
        raise DomainError("trace_sign_quantity needs delta >= 0 (no interior pair otherwise)")
    t1, t2 = trace_split(params)
    return t1 * math.sqrt(sig.delta) + t2


# ---------------------------------------------------------------------------
# saddle-node locus and Sotomayor conditions


def saddle_node_Q(C: float, M: float, N: float) -> float:
    """Value of Q on the fold locus delta(C, M, N, Q) = 0.

    Q = (M^2 + 4CN - 2MN + N^2) / (4N(C - M)); requires C > M.
    """
    if not C > M:
        raise DomainError("saddle_node_Q requires C > M")
    return (M * M + 4.0 * C * N - 2.0 * M * N + N * N) / (4.0 * N * (C - M))


@dataclass(frozen=True)
class SotomayorCheck:
    """Nondegeneracy quantities of the saddle-node bifurcation at E."""

    wfc: float
    quad: float
    nondegenerate: bool


def sotomayor_check(params: Params, delta_tol: float = None) -> SotomayorCheck:
    """Evaluate the Sotomayor transversality and quadratic terms at the fold.

    wfc is the pairing of the left null-vector with the C-derivative of the
    field; quad the pairing with the quadratic form along the right
    null-vector.  A saddle-node bifurcation in C is generic iff both are
    nonzero.
    """
    C, M, N, Q = params.astuple()
    sig = sigma_delta(params, delta_tol=delta_tol)
    if sig.case_label is not CaseLabel.DoubleRoot_DeltaZero:
        raise DomainError("sotomayor_check requires the collapsed-equilibrium case (delta = 0)")
    wfc = -sig.sigma1 * sig.sigma3 / (4.0 * N * (C + N * Q) ** 2)
    quad = C - 3.0 * M - 10.0 * N + 4.0 * N * (Q + 7.0) * (C - M) ** 2 / (M + N) ** 2
    return SotomayorCheck(wfc=wfc, quad=quad, nondegenerate=(wfc != 0.0 and quad != 0.0))


# ---------------------------------------------------------------------------
# Hopf machinery in the (U, V) chart


def hopf_T(C: float, M: float, U: float, V: float) -> float:
    """Trace factor of the (U, V)-chart Jacobian: its trace equals V * T."""
    a = M - U
    b = U * (2.0 * M - 2.0 * C - 3.0 * U + 1.0)
    c = U * U * (M - C - 2.0 * U + 1.0)
    return a * V * V + b * V + c


def hopf_D(C: float, M: float, U: float, V: float) -> float:
    """Determinant factor: the chart determinant equals U * V^2 * (U+V)^2 * D."""
    return C * U * (-1.0 + 2.0 * U + 2.0 * V) + M * (
        U - 2.0 * U * U + V - 3.0 * U * V - V * V
    )


def hopf_M(C: float, U: float, V: float) -> float:
    """The value of M solving T(C, M, U, V) = 0 for given (C, U, V)."""
    if not U + V > 0.0:
        raise DomainError("hopf_M requires U + V > 0")
    return C * U * (U + 2.0 * V) / (U + V) ** 2 + U * (-1.0 + 2.0 * U + V) / (U + V)


def _hopf_DH(C: float, U: float, V: float) -> float:
    """Determinant factor on the Hopf set (M eliminated via hopf_M)."""
    return (
        -U - 4.0 * U ** 3 + C * V - (C - 6.0) * U * V - (V - 1.0) ** 2 * V
        - 5.0 * U * V * V - U * U * (8.0 * V - 4.0)
    )


class L1Sign(enum.Enum):
    Supercritical = "supercritical (l1 < 0)"
    Subcritical = "subcritical (l1 > 0)"
    Degenerate = "degenerate (l1 = 0)"


@dataclass(frozen=True)
class HopfData:
    """A point of the Hopf set in the (U, V) chart with its genericity data."""

    U: float
    V: float
    M_hopf: float
    D_H: float
    w: float
    l1: float
    L1_sign: L1Sign


def _l1_terms(C: float, U: float, V: float) -> list[float]:
    """The four factored groups of the first Lyapunov quantity numerator.

    Each group's inner polynomial is evaluated in Horner order with respect
    to V; the groups are summed with compensated summation by the caller
    because they cancel severely near the Bautin point.
    """
    inner1 = -U + U * U - 2.0 * U * V - 2.0 * V * V
    inner2 = (
        (-2.0 * U ** 3 + 4.0 * U ** 4)
        + V * (1.0 - 9.0 * U + 20.0 * U * U - 10.0 * U ** 3)
        + V * V * (-6.0 + 28.0 * U - 28.0 * U * U)
        + V ** 3 * (9.0 - 19.0 * U)
        - 4.0 * V ** 4
    )
    inner3 = (
        (3.0 * U * U - 12.0 * U ** 3 + 12.0 * U ** 4)
        + V * (3.0 * U - 14.0 * U * U + 16.0 * U ** 3)
        + V * V * (2.0 * U)
        + V ** 3 * (4.0 - 13.0 * U)
        - 4.0 * V ** 4
    )
    inner4 = (
        (-2.0 * U ** 4 + 2.0 * U ** 5)
        + V * (3.0 * U - 21.0 * U * U + 41.0 * U ** 3 - 27.0 * U ** 4)
        + V * V * (-10.0 * U - 5.0 * U * U + 38.0 * U * U - 38.0 * U ** 3)
        + V ** 3 * (2.0 - 8.0 * U * U)
        + V ** 4 * (-4.0 + 6.0 * U)
        + 2.0 * V ** 5
    )
    return [
        -(C ** 3) * V ** 4 * inner1,
        -U * (1.0 - U) * (U + V) ** 3 * inner2,
        -(C ** 2) * V ** 3 * inner3,
        C * V * (U + V) ** 2 * inner4,
    ]


def lyapunov_l1(C: float, U: float, V: float) -> HopfData:
    """First Lyapunov quantity of the Hopf point (U, V) at conversion rate C.

    M is fixed by the Hopf condition T = 0.  Requires admissibility
    (C*U > M*(U+V), U < 1) and D_H > 0; the sign of l1 decides sub- versus
    supercritical.
    """
    M = hopf_M(C, U, V)
    if not (C * U - M * (U + V) > 0.0 and 0.0 < U < 1.0 and V > 0.0):
        raise DomainError("(C, M, U, V) outside the admissible set Lambda")
    DH = _hopf_DH(C, U, V)
    if DH <= 0.0:
        raise DomainError("D_H <= 0: eigenvalues not purely imaginary, not a Hopf point")
    w = V * (U + V) * math.sqrt(U * DH)
    l1 = math.fsum(_l1_terms(C, U, V))
    if abs(l1) < L1_TOL:
        sign = L1Sign.Degenerate
    elif l1 < 0.0:
        sign = L1Sign.Supercritical
    else:
        sign = L1Sign.Subcritical
    return HopfData(U=U, V=V, M_hopf=M, D_H=DH, w=w, l1=l1, L1_sign=sign)


def _hopf_V(C: float, M: float, U: float) -> Optional[float]:
    """Positive root V of T(C, M, U, V) = 0 for fixed (C, M, U), if any."""
    a = M - U
    b = U * (2.0 * M - 2.0 * C - 3.0 * U + 1.0)
    c = U * U * (M - C - 2.0 * U + 1.0)
    if abs(a) < 1e-14:
        if abs(b) < 1e-14:
            return None
        V = -c / b
        return V if V > 0.0 else None
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    candidates = [(-b + root) / (2.0 * a), (-b - root) / (2.0 * a)]
    positive = [V for V in candidates if V > 0.0]
    if not positive:
        return None
    # the admissible branch is the one inside Lambda_h; prefer the one with
    # C*U - M*(U+V) > 0, falling back to the smaller positive root
    for V in sorted(positive):
        if C * U - M * (U + V) > 0.0:
            return V
    return None


def hopf_curve_UV(C: float, M: float, grid: Optional[np.ndarray] = None) -> list[HopfData]:
    """Sample the Hopf curve T = 0 inside Lambda_h for fixed (C, M).

    The curve is parametrised by U; for each grid value the quadratic in V
    is solved in closed form and the sample kept when it is admissible with
    D_H > 0.  An empty list is a valid result.
    """
    if grid is None:
        grid = np.linspace(1e-3, 1.0 - 1e-3, 400)
    out = []
    for U in np.asarray(grid, dtype=float):
        V = _hopf_V(C, M, U)
        if V is None:
            continue
        if not (C * U - M * (U + V) > 0.0 and 0.0 < U < 1.0):
            continue
        if _hopf_DH(C, U, V) <= 0.0:
            continue
        if hopf_M(C, U, V) <= 0.0:
            continue
        data = lyapunov_l1(C, U, V)
        # consistency: the sample must sit on T = 0 for the *given* M
        if abs(hopf_T(C, M, U, V)) > 1e-10 * max(1.0, U * U):
            continue
        out.append(data)
    return out


def bautin_point(C: float, M: float, grid: Optional[np.ndarray] = None) -> tuple[float, float]:
    """The point B on the Hopf curve where l1 changes sign.

    Bisects in the curve parameter U until |l1| < 1e-10.  Raises
    :class:`NotFoundError` when the sampled curve carries a single sign.
    """
    samples = hopf_curve_UV(C, M, grid)
    bracket = None
    for a, b in zip(samples, samples[1:]):
        if a.l1 == 0.0:
            return (a.U, a.V)
        if a.l1 * b.l1 < 0.0:
            bracket = (a.U, b.U)
            break
    if bracket is None:
        raise NotFoundError("no sign change of l1 along the sampled Hopf curve")

    def f(U):
        V = _hopf_V(C, M, U)
        if V is None:
            raise NotFoundError("Hopf curve lost while bisecting for the Bautin point")
        return lyapunov_l1(C, U, V).l1

    lo, hi = bracket
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) < L1_TOL:
            return (mid, _hopf_V(C, M, mid))
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    mid = 0.5 * (lo + hi)
    if abs(f(mid)) < L1_TOL:
        return (mid, _hopf_V(C, M, mid))
    raise NotFoundError("Bautin bisection did not reach the |l1| tolerance")


def psi_map(C: float, M: float, U: float, V: float) -> tuple[float, float]:
    """The locally invertible chart map (C, M, U, V) -> (N, Q).

    N = (CU - M(U+V)) / (V(U+V)),  Q = (1-U)(U+V) / V.
    """
    if not (V > 0.0 and 0.0 < U < 1.0 and C * U - M * (U + V) > 0.0):
        raise DomainError("(C, M, U, V) outside the admissible set Lambda")
    N = (C * U - M * (U + V)) / (V * (U + V))
    Q = (1.0 - U) * (U + V) / V
    return (N, Q)


def hopf_Q(C: float, M: float, N: float, Q_lo: float, Q_hi: float) -> float:
    """Q at which the trace of the Jacobian at P2 vanishes, for fixed (C, M, N).

    Scans [Q_lo, Q_hi] for a sign change of trace(J(P2)) and refines it with
    Brent's method.  This is the (Q, C)-plane route to the Hopf locus; it
    must agree with the (U, V)-chart route wherever both apply.
    """

    def tr(Q):
        eqs = interior_equilibria(Params(C, M, N, Q))
        p2 = [e for e in eqs if e.kind in (EquilibriumKind.P2, EquilibriumKind.CollapsedE)]
        if not p2:
            return None
        J = jacobian(Params(C, M, N, Q), p2[-1].point)
        return J[0, 0] + J[1, 1]

    n_scan = 80
    qs = np.linspace(Q_lo, Q_hi, n_scan)
    vals = [tr(q) for q in qs]
    for (qa, fa), (qb, fb) in zip(zip(qs, vals), zip(qs[1:], vals[1:])):
        if fa is None or fb is None:
            continue
        if fa == 0.0:
            return float(qa)
        if fa * fb < 0.0:
            return float(brentq(lambda q: tr(q), qa, qb, xtol=1e-13, rtol=1e-15))
    raise NotFoundError(f"no trace sign change of P2 in Q bracket [{Q_lo}, {Q_hi}]")


# ---------------------------------------------------------------------------
# Bogdanov-Takens point


def det_DPsi(u: float, v: float, C: float, Q: float, M: float, N: float) -> float:
    """Determinant of the 4x4 Jacobian of Psi = (X1, X2, trace, det).

    Psi maps (u, v, C, Q) to the vector field components and the trace and
    determinant of its state Jacobian; regularity of Psi at the fold point
    is the Bogdanov-Takens transversality condition.  All sixteen partial
    derivatives are polynomial and written out analytically.
    """
    X1u = 2 * u + v - Q * v - 2 * u * v - 3 * u * u
    X1v = -u * (Q + u - 1)
    X2u = -v * (M - C + N * v)
    X2v = C * u - 3 * N * v * v - M * u - 2 * M * v - 2 * N * u * v
    X1uu = 2 - 2 * v - 6 * u
    X1uv = 1 - Q - 2 * u
    X1vu = -(Q + 2 * u - 1)
    X2uv = -(M - C + 2 * N * v)
    X2vu = C - M - 2 * N * v
    X2vv = -6 * N * v - 2 * M - 2 * N * u
    Tu = X1uu + X2vu
    Tv = X1uv + X2vv
    Du = X1uu * X2v + X1u * X2vu - X1vu * X2u
    Dv = X1uv * X2v + X1u * X2vv - X1v * X2uv
    DC = X1u * u - X1v * v
    DQ = -v * X2v + u * X2u
    Dp = np.array(
        [
            [X1u, X1v, 0.0, -u * v],
            [X2u, X2v, u * v, 0.0],
            [Tu, Tv, u, -v],
            [Du, Dv, DC, DQ],
        ]
    )
    return float(np.linalg.det(Dp))


@dataclass(frozen=True)
class BTData:
    """The Bogdanov-Takens point and its genericity certificate."""

    C_star: float
    Q_star: float
    E_point: State
    z1: float
    z2: float
    G1: float
    G2: float
    G3: float
    G4: float
    a20: float
    b20: float
    b11: float
    nf_sign: int


def bt_point(M: float, N: float, degeneracy_tol: float = 1e-10) -> BTData:
    """Locate the Bogdanov-Takens point for fixed (M, N) and certify it.

    C* makes the trace of J(E) vanish on the fold delta = 0 and Q* is the
    fold value of Q at C*.  The certificate collects the generalised
    eigenvector slopes z1, z2, the transversality value G1 = F(E; C*, Q*),
    the normal-form auxiliaries G2..G4 and the quadratic coefficients
    a20, b20, b11 of the conjugated vector field.
    """
    if not 0.0 < M < N:
        raise DomainError("bt_point requires 0 < M < N")
    C_star = saddle_node_trace_threshold(M, N)
    Q_star = saddle_node_Q(C_star, M, N)
    params = Params(C_star, M, N, Q_star)
    eqs = interior_equilibria(params)
    collapsed = [e for e in eqs if e.multiplicity == 2]
    if not collapsed:
        raise NonGenericError("no collapsed equilibrium at (C*, Q*): fold residual too large")
    E = collapsed[0].point
    uE, vE = E.u, E.v

    A = -8.0 * M * N * N - (1.0 - N) * (M + N) ** 2
    w1 = (1.0 + N) * (M + N) ** 2
    w2 = math.sqrt(16.0 * M * N ** 3 * (M - N) ** 2 + A * A)
    w3 = (
        M ** 3 * (M * (-1.0 + N) ** 2 + 4.0 * N * (1.0 + N))
        + 2.0 * M * N * (1.0 + N) * (2.0 * N * N + w2)
        - (N - 1.0) * N * N * (N * N - N ** 3 + w2)
        - M * M * (2.0 * N * N * (-3.0 - 6.0 * N + N * N) - w2 + N * w2)
    )
    if abs(w3) < degeneracy_tol:
        raise NonGenericError("degenerate denominator w3 = 0 in the eigenvector slope z1")
    z1 = 4.0 * N ** 3 * (w1 + w2) / w3
    j12f = M * M - 2.0 * M * N + N * (4.0 * C_star + N)
    z2_den = (C_star - M) * (M - N) * j12f
    if abs(z2_den) < degeneracy_tol:
        raise NonGenericError("degenerate denominator in the eigenvector slope z2")
    z2 = (2.0 * N * (2.0 * C_star - M + N) ** 2 + 4.0 * C_star * (C_star - M) ** 2 * (M - N)) / z2_den

    # transversality: G1 is the value of -det(D Psi)/(u*v) at the BT point
    G1 = -det_DPsi(uE, vE, C_star, Q_star, M, N) / (uE * vE)
    G4 = z1 * z2 - 1.0

    # quadratic Taylor coefficients of the conjugated field P^{-1} Y(P z).
    # The Hessians of the translated field at the equilibrium are simple:
    X1uu = 2.0 - 2.0 * vE - 6.0 * uE
    X1uv = 1.0 - Q_star - 2.0 * uE
    X1vv = 0.0
    X2uu = 0.0
    X2uv = C_star - M - 2.0 * N * vE
    X2vv = -2.0 * M - 2.0 * N * uE - 6.0 * N * vE
    # with w = P z: w1 = z1*x + y, w2 = x + z2*y, the quadratic part of
    # component i is  q_i = X_iuu*w1^2/2 + X_iuv*w1*w2 + X_ivv*w2^2/2
    def _quad(huu, huv, hvv):
        xx = 0.5 * huu * z1 * z1 + huv * z1 + 0.5 * hvv
        xy = huu * z1 + huv * (z1 * z2 + 1.0) + hvv * z2
        yy = 0.5 * huu + huv * z2 + 0.5 * hvv * z2 * z2
        return xx, xy, yy

    q1 = _quad(X1uu, X1uv, X1vv)
    q2 = _quad(X2uu, X2uv, X2vv)
    # multiply by adj(P) = (z1*z2 - 1) * P^{-1}; the displayed normal form
    # carries the 1/(z1*z2 - 1) prefactor separately
    a20 = z2 * q1[0] - q2[0]
    b20 = -q1[0] + z1 * q2[0]
    b11 = -q1[1] + z1 * q2[1]
    # the genericity auxiliaries are defined through the normal-form
    # coefficients: G2 through b20 = -2*z1*G2 and G3 through a20 + b11 = G3*G4
    G2 = -b20 / (2.0 * z1)
    G3 = (a20 + b11) / G4
    for name, val in (("G1", G1), ("G2", G2), ("G3", G3), ("G4", G4)):
        if abs(val) < degeneracy_tol:
            raise NonGenericError(f"genericity constant {name} vanishes at the BT point")
    nf_sign = 1 if b20 * (a20 + b11) > 0.0 else -1
    return BTData(
        C_star=C_star,
        Q_star=Q_star,
        E_point=E,
        z1=z1,
        z2=z2,
        G1=G1,
        G2=G2,
        G3=G3,
        G4=G4,
        a20=a20,
        b20=b20,
        b11=b11,
        nf_sign=nf_sign,
    )


# ---------------------------------------------------------------------------
# bifurcation diagram skeleton


@dataclass(frozen=True)
class BifDiagram:
    """The (Q, C) skeleton of the two-parameter bifurcation diagram."""

    sn_curve: list[tuple[float, float]]
    hopf_curve: list[tuple[float, float]]
    hom_curve: list[tuple[float, float]]
    bt_point: tuple[float, float]
    region_labels: dict[tuple[float, float], str]


def _region_label(params: Params) -> str:
    """Classify a sampled parameter point into its diagram region.

    Uses the interior equilibrium count, the stability of the anti-saddle
    and a cycle census (imported lazily to keep this module free of the
    integrator).
    """
    from .dynamics import find_limit_cycles
    from .equilibria import classify_interior, StabilityTag

    eqs = interior_equilibria(params)
    anti = [e for e in eqs if e.multiplicity == 1
            and e.kind is EquilibriumKind.P2]
    if not anti:
        return "GlobalExtinction"
    tag = classify_interior(params, anti[0]).tag
    if tag in (StabilityTag.UnstableNode, StabilityTag.UnstableFocus):
        return "P2Unstable"
    if any(not c.stable for c in find_limit_cycles(params)):
        return "UnstableCycleAroundP2"
    return "P2StableNoCycle"


def trace_diagram(
    M: float,
    N: float,
    Q_range: tuple[float, float],
    C_range: tuple[float, float],
    n_C: int = 60,
    hom_samples: int = 6,
    homoclinic_fn=None,
) -> BifDiagram:
    """Assemble the saddle-node, Hopf and homoclinic curves over a C window.

    The saddle-node and Hopf curves come from their closed-form/root-found
    loci at each sampled C; the homoclinic curve is located by bisection at
    a coarser set of C samples (it needs trajectory integration, injected
    through homoclinic_fn to keep this module free of the integrator).
    Region representatives are labelled from the curve ordering at a mid
    C slice.
    """
    if homoclinic_fn is None:
        from .dynamics import homoclinic_Q as homoclinic_fn
    Q_lo, Q_hi = Q_range
    C_lo, C_hi = C_range
    if not (Q_lo > 0.0 and C_lo > 0.0 and Q_hi > Q_lo and C_hi > C_lo):
        raise DomainError("ranges must be positive and increasing")
    if not M < N:
        raise DomainError("trace_diagram requires M < N")

    bt = bt_point(M, N)
    bt_qc = (bt.Q_star, bt.C_star)
    C_top = min(C_hi, bt.C_star)

    sn_curve: list[tuple[float, float]] = []
    hopf_curve: list[tuple[float, float]] = []
    # approach the BT point from below with geometrically refined spacing so
    # the curve ends land within the tracing tolerance
    cs = list(np.linspace(max(C_lo, M + 1e-6), C_top, n_C))
    cs += [C_top - 1e-3, C_top - 1e-4]
    for C in sorted(set(min(c, C_top) for c in cs if c > M)):
        try:
            q_sn = saddle_node_Q(C, M, N)
        except DomainError:
            continue
        if Q_lo <= q_sn <= Q_hi:
            sn_curve.append((q_sn, C))
        try:
            # the fold endpoint itself is a valid bracket end: the collapsed
            # equilibrium is a repeller below C*, so the trace is positive there
            q_h = hopf_Q(C, M, N, Q_lo, min(Q_hi, q_sn))
        except NotFoundError:
            continue
        hopf_curve.append((q_h, C))

    hom_curve: list[tuple[float, float]] = []
    hom_cs = np.linspace(max(C_lo, M + 5e-2), C_top - 1e-3, hom_samples)
    for C in hom_cs:
        near = sorted(hopf_curve, key=lambda qc: abs(qc[1] - C))
        if not near or abs(near[0][1] - C) > 2e-2:
            continue
        q_h = near[0][0]
        q_sn = saddle_node_Q(C, M, N)
        q_entry = C / (C - M)  # P1 enters the quadrant here (u1 = 0)
        if q_h > q_entry:
            # the saddle exists around the loop: bracket inside its window,
            # away from the degenerate entry point
            width = q_sn - q_entry
            lo = q_entry + 0.15 * width
            hi = q_entry + 0.90 * width
        else:
            # loop through the boundary saddles; keep the bracket below the
            # P1 entry so the bisection criterion stays the same throughout
            lo = max(Q_lo, q_h - 0.05)
            hi = min(Q_hi, q_entry - 1e-4)
        try:
            q_hom = homoclinic_fn(C, M, N, lo, hi)
        except NotFoundError:
            if q_h <= q_entry:
                continue
            # near the BT point the loop is squeezed against the fold, past
            # the end of the conservative bracket; retry right up to it
            try:
                q_hom = homoclinic_fn(C, M, N, lo, q_sn - 1e-7)
            except NotFoundError:
                continue
        hom_curve.append((q_hom, C))
    # both codimension-one curves emanate from the BT point; close them there
    hopf_curve.append(bt_qc)
    hom_curve.append(bt_qc)

    region_labels: dict[tuple[float, float], str] = {}
    # representative points straddling the three curves at a slice where the
    # loop sits below the Hopf value (the canonical four-region layout);
    # each label is determined by classification, not by curve ordering
    candidates = []
    for q_hom, c in hom_curve[:-1]:
        near = sorted(hopf_curve, key=lambda qc: abs(qc[1] - c))
        if near and abs(near[0][1] - c) < 2e-2 and q_hom < near[0][0]:
            candidates.append((q_hom, near[0][0], c))
    if candidates:
        q_hom, q_h, C_mid = candidates[len(candidates) // 2]
        q_sn = saddle_node_Q(C_mid, M, N)
        for q in (q_sn + 0.05, 0.5 * (q_h + q_sn), 0.5 * (q_hom + q_h),
                  q_hom - 0.05):
            region_labels[(q, C_mid)] = _region_label(Params(C_mid, M, N, q))

    return BifDiagram(
        sn_curve=sn_curve,
        hopf_curve=hopf_curve,
        hom_curve=hom_curve,
        bt_point=bt_qc,
        region_labels=region_labels,
    )
