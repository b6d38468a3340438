"""Trajectories, omega limits, limit cycles, manifolds, and basins.

The heavy lifting happens in the compiled kernels of :mod:`bazykin._rk`;
this module owns validation, attractor bookkeeping and the public types.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numba

from . import _rk
from .errors import DomainError, NotFoundError, StiffnessError
from .model import Params, State, jacobian, predator_nullcline
from .equilibria import StabilityTag, classify_interior, interior_equilibria

_STABLE_TAGS = (StabilityTag.StableNode, StabilityTag.StableFocus)

DEFAULT_TOL = 1e-9
PROXIMITY = 1e-6
HOLD_TIME = 50.0
OMEGA_BUDGET = 2.0e7
BACKWARD_CAP = 1.0e4
SEED_EPS = 1e-6
# dense-output accuracy cap for event-refined integrations
EVENT_H_MAX = 0.2


class OmegaLabel(Enum):
    ORIGIN = "Origin"
    CARRYING_CAPACITY = "CarryingCapacity"
    P2 = "P2"
    STABLE_CYCLE = "StableCycle"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Trajectory:
    """Ordered (t, state) samples at the integrator's accepted steps."""

    samples: tuple
    tolerance: float

    @property
    def states(self):
        return [s for _, s in self.samples]

    @property
    def end_state(self):
        return self.samples[-1][1]


@dataclass(frozen=True)
class LimitCycle:
    section_point: State
    period: float
    points: tuple
    floquet: float
    stable: bool


@dataclass(frozen=True)
class GridSpec:
    u_lo: float
    u_hi: float
    v_lo: float
    v_hi: float
    n_u: int
    n_v: int


@dataclass(frozen=True, eq=False)
class BasinRaster:
    grid: GridSpec
    labels: np.ndarray  # (n_u, n_v) of OmegaLabel
    undetermined: int

    def __eq__(self, other):
        if not isinstance(other, BasinRaster):
            return NotImplemented
        return (self.grid == other.grid
                and self.undetermined == other.undetermined
                and np.array_equal(self.labels, other.labels))


@dataclass(frozen=True)
class SaddleManifolds:
    """The four branches of W^{u,s}(P1).

    Branch tags follow the sign convention: eigenvectors are normalised to
    a positive first component, the "ne" branch is seeded at +eps times the
    eigenvector, the "sw" branch at -eps times it.
    """

    wu_ne: Trajectory
    wu_sw: Trajectory
    ws_ne: Trajectory
    ws_sw: Trajectory
    saddle: State


def _check_tol(tol):
    if not 1e-13 <= tol <= 1e-3:
        raise DomainError(f"tolerance {tol} outside [1e-13, 1e-3]")


def integrate(params: Params, s0: State, t_end: float, tol: float = DEFAULT_TOL,
              max_steps: int = 2_000_000, h_max: float = np.inf) -> Trajectory:
    """Integrate the flow from s0 over [0, t_end].

    Adaptive embedded pair; per-step local error estimate is kept below
    tol.  A negative t_end integrates the reversed field and reports
    negative sample times.  Raises StiffnessError with the last state on
    step underflow.
    """
    _check_tol(tol)
    if s0.u < 0.0 or s0.v < 0.0:
        raise DomainError(f"initial state {s0} outside the closed first quadrant")
    C, M, N, Q = params.astuple()
    sgn = -1.0 if t_end < 0.0 else 1.0
    ts, us, vs, status = _rk._traj(C, M, N, Q, sgn, s0.u, s0.v,
                                   abs(float(t_end)), tol, max_steps, h_max)
    ts = sgn * ts
    if status == 1:
        raise StiffnessError("step-size underflow", t=ts[-1],
                             state=State(us[-1], vs[-1]))
    samples = tuple((float(t), State(float(u), float(v)))
                    for t, u, v in zip(ts, us, vs))
    return Trajectory(samples=samples, tolerance=tol)


def _stable_interior(params):
    """The interior anti-saddle P2 if it exists, else None, plus the
    saddle P1 if present.  Returned as (p2, p2_stable, p1)."""
    eqs = interior_equilibria(params)
    p2 = None
    p2_stable = False
    p1 = None
    for eq in eqs:
        if eq.multiplicity != 1:
            continue
        cls = classify_interior(params, eq)
        if cls.tag is StabilityTag.Saddle:
            p1 = eq.point
        else:
            p2 = eq.point
            p2_stable = cls.tag in _STABLE_TAGS
    return p2, p2_stable, p1


def _attractor_table(params):
    """Candidate point attractors plus the cycle-detection section.

    Returns (targets array, labels list, origin_idx, secu, secv, has_sec).
    Only locally attracting equilibria are listed, so a transient visit
    can never produce a wrong label.
    """
    C, M, N, Q = params.astuple()
    targets = [(0.0, 0.0)]
    labels = [OmegaLabel.ORIGIN]
    if C < M:
        targets.append((1.0, 0.0))
        labels.append(OmegaLabel.CARRYING_CAPACITY)
    p2, p2_stable, _ = _stable_interior(params)
    has_sec = p2 is not None
    secu = p2.u if has_sec else 0.0
    secv = p2.v if has_sec else 0.0
    if p2 is not None and p2_stable:
        targets.append((p2.u, p2.v))
        labels.append(OmegaLabel.P2)
    return np.array(targets), labels, 0, secu, secv, has_sec


def omega_limit(params: Params, s0: State, tol: float = DEFAULT_TOL,
                t_budget: float = OMEGA_BUDGET,
                max_steps: int = 5_000_000) -> OmegaLabel:
    """Classify the forward limit set of the orbit through s0.

    Decision is by sustained proximity (1e-6 over 50 time units) for the
    locally attracting equilibria, or by a periodic return on the section
    v = v2, u > u2.  Budget exhaustion yields Undetermined, never a wrong
    label.
    """
    _check_tol(tol)
    if s0.u <= 0.0 or s0.v <= 0.0:
        raise DomainError(f"initial state {s0} not in the open first quadrant")
    C, M, N, Q = params.astuple()
    targets, labels, origin_idx, secu, secv, has_sec = _attractor_table(params)
    code = _rk._omega(C, M, N, Q, s0.u, s0.v, targets, origin_idx,
                      secu, secv, has_sec, tol, t_budget, max_steps,
                      PROXIMITY, HOLD_TIME)
    if code == _rk.CYCLE_CODE:
        return OmegaLabel.STABLE_CYCLE
    if code < 0:
        return OmegaLabel.UNDETERMINED
    return labels[code]


def v_ceiling(params: Params) -> float:
    """Admissible upper predator bound for basin grids.

    Above the predator nullcline's peak (attained at u = 1) the flow
    pushes v downward, so rasters above 1.2 times that height carry no
    information.
    """
    peak = predator_nullcline(params, 1.0)
    return 1.2 * max(1.0, peak)


def basin_raster(params: Params, grid: GridSpec, tol: float = 1e-8,
                 t_budget: float = OMEGA_BUDGET,
                 max_steps: int = 2_000_000) -> BasinRaster:
    """omega_limit at every cell center of the grid, cell-parallel.

    Worker count is capped by the BAZYKIN_THREADS environment variable;
    cells are written disjointly so the result is deterministic.
    """
    _check_tol(tol)
    if not (0.0 <= grid.u_lo < grid.u_hi <= 1.2):
        raise DomainError("grid u-range must lie within [0, 1.2]")
    if not (0.0 <= grid.v_lo < grid.v_hi <= v_ceiling(params)):
        raise DomainError("grid v-range must lie within [0, v*]")
    if grid.n_u < 1 or grid.n_v < 1:
        raise DomainError("grid resolution must be positive")
    threads = os.environ.get("BAZYKIN_THREADS")
    if threads:
        numba.set_num_threads(max(1, min(int(threads),
                                         numba.config.NUMBA_NUM_THREADS)))
    C, M, N, Q = params.astuple()
    targets, labels, origin_idx, secu, secv, has_sec = _attractor_table(params)
    du = (grid.u_hi - grid.u_lo) / grid.n_u
    dv = (grid.v_hi - grid.v_lo) / grid.n_v
    ucs = grid.u_lo + du * (np.arange(grid.n_u) + 0.5)
    vcs = grid.v_lo + dv * (np.arange(grid.n_v) + 0.5)
    codes = _rk._basin(C, M, N, Q, ucs, vcs, targets, origin_idx,
                       secu, secv, has_sec, tol, t_budget, max_steps,
                       PROXIMITY, HOLD_TIME)
    out = np.empty(codes.shape, dtype=object)
    undet = 0
    for i in range(codes.shape[0]):
        for j in range(codes.shape[1]):
            c = codes[i, j]
            if c == _rk.CYCLE_CODE:
                out[i, j] = OmegaLabel.STABLE_CYCLE
            elif c < 0:
                out[i, j] = OmegaLabel.UNDETERMINED
                undet += 1
            else:
                out[i, j] = labels[c]
    return BasinRaster(grid=grid, labels=out, undetermined=undet)


def _return(params, secu, secv, u, sgn, tol):
    C, M, N, Q = params.astuple()
    ur, tr, ok = _rk._return_map(C, M, N, Q, sgn, secu, secv, u, tol,
                                 5.0e3, 2_000_000, EVENT_H_MAX)
    return (ur, tr) if ok == 0 else (None, None)


def _refine_fixed_point(params, secu, secv, u_lo, u_hi, sgn, tol):
    """Bisection then secant on g(u) = R(u) - u over a sign-change bracket.

    Returns (u_star, period) or None if the map degenerates inside."""
    def g(u):
        ur, tr = _return(params, secu, secv, u, sgn, tol)
        return (None, None) if ur is None else (ur - u, tr)

    g_lo, _ = g(u_lo)
    g_hi, _ = g(u_hi)
    if g_lo is None or g_hi is None or g_lo * g_hi > 0:
        return None
    for _ in range(12):
        mid = 0.5 * (u_lo + u_hi)
        g_mid, _ = g(mid)
        if g_mid is None:
            return None
        if g_mid == 0.0:
            u_lo = u_hi = mid
            break
        if g_lo * g_mid < 0:
            u_hi, g_hi = mid, g_mid
        else:
            u_lo, g_lo = mid, g_mid
    a, fa = u_lo, g_lo
    b, fb = u_hi, g_hi
    period = None
    for _ in range(60):
        if fb == fa:
            break
        c = b - fb * (b - a) / (fb - fa)
        lo, hi = min(u_lo, u_hi), max(u_lo, u_hi)
        if not lo <= c <= hi:
            c = 0.5 * (a + b)
        fc, period = g(c)
        if fc is None:
            return None
        a, fa, b, fb = b, fb, c, fc
        if abs(fc) < 1e-10:
            break
    if abs(fb) > 1e-9:
        return None
    return b, period


def find_limit_cycles(params: Params, tol: float = 1e-10) -> list:
    """All limit cycles around P2, inner to outer.

    Scans the first-return map of the section v = v2, u > u2 in forward
    time and, for cycles repelling in forward time, in reversed time (the
    reversal swaps stability, so shooting happens on an attracting
    object).  Fixed points are refined to return residual below 1e-9.
    """
    _check_tol(tol)
    p2, _, _ = _stable_interior(params)
    if p2 is None:
        raise DomainError("no interior anti-saddle to anchor the section")
    secu, secv = p2.u, p2.v
    span = 1.0 - secu
    offsets = np.concatenate([
        np.linspace(0.004, 0.06, 10, endpoint=False),
        np.linspace(0.06, max(0.07, span - 1e-3), 26),
    ])
    fixed = []
    for sgn in (1.0, -1.0):
        vals = []
        for off in offsets:
            u = secu + off
            ur, _ = _return(params, secu, secv, u, sgn, tol)
            vals.append(None if ur is None else ur - u)
        for (oa, ga), (ob, gb) in zip(zip(offsets, vals), zip(offsets[1:], vals[1:])):
            if ga is None or gb is None or ga * gb >= 0:
                continue
            hit = _refine_fixed_point(params, secu, secv, secu + oa, secu + ob,
                                      sgn, tol)
            if hit is None:
                continue
            u_star, per = hit
            if all(abs(u_star - f[0]) > 1e-5 for f in fixed):
                fixed.append((u_star, per, sgn))
    cycles = []
    for u_star, per, sgn in sorted(fixed):
        # floquet from the forward return map; one forward return always
        # exists near the cycle even when it repels
        d = 1e-6 * max(1.0, u_star)
        rp, _ = _return(params, secu, secv, u_star + d, 1.0, tol)
        rm, _ = _return(params, secu, secv, u_star - d, 1.0, tol)
        if rp is not None and rm is not None:
            floq = (rp - rm) / (2.0 * d)
        else:
            # forward map unavailable: use the reversed map derivative
            rp, _ = _return(params, secu, secv, u_star + d, -1.0, tol)
            rm, _ = _return(params, secu, secv, u_star - d, -1.0, tol)
            if rp is None or rm is None:
                continue
            floq = 2.0 * d / (rp - rm)
        if sgn < 0:
            # period was measured in reversed time; magnitude is the same
            per = abs(per)
        orbit = integrate(params, State(u_star, secv), per, tol=tol,
                          h_max=per / 256.0)
        cycles.append(LimitCycle(
            section_point=State(u_star, secv),
            period=per,
            points=tuple(orbit.states),
            floquet=floq,
            stable=abs(floq) < 1.0,
        ))
    return cycles


def _eig_branches(params, p1):
    """Eigenpairs at the saddle, vectors normalised first-component
    positive.  Returns (lam_s, e_s, lam_u, e_u)."""
    J = np.asarray(jacobian(params, p1))
    lams, vecs = np.linalg.eig(J)
    lams = lams.real
    order = np.argsort(lams)
    lam_s, lam_u = lams[order[0]], lams[order[1]]
    if not (lam_s < 0.0 < lam_u):
        raise DomainError("interior equilibrium is not a saddle")
    out = []
    for k in order:
        e = vecs[:, k].real
        e = e / np.linalg.norm(e)
        if e[0] < 0.0 or (e[0] == 0.0 and e[1] < 0.0):
            e = -e
        out.append(e)
    return lam_s, out[0], lam_u, out[1]


def saddle_manifolds(params: Params, tol: float = 1e-10,
                     t_cap: float = BACKWARD_CAP,
                     eps: float = SEED_EPS) -> SaddleManifolds:
    """The four invariant-manifold branches of the interior saddle P1.

    Seeds at P1 +/- eps times the unit eigenvectors, integrating forward
    along the unstable directions and backward along the stable ones
    (capped at t_cap).  Backward orbits may leave the biologically
    relevant region; they are truncated at a generous bound.
    """
    _check_tol(tol)
    _, _, p1 = _stable_interior(params)
    if p1 is None:
        raise DomainError("no interior saddle")
    _, e_s, _, e_u = _eig_branches(params, p1)
    C, M, N, Q = params.astuple()

    def branch(e, sign, sgn_time):
        u0 = p1.u + sign * eps * e[0]
        v0 = p1.v + sign * eps * e[1]
        ts, us, vs, _ = _rk._traj(C, M, N, Q, sgn_time, u0, v0, t_cap,
                                  tol, 2_000_000, np.inf, 10.0)
        samples = tuple((float(sgn_time) * float(t), State(float(u), float(v)))
                        for t, u, v in zip(ts, us, vs))
        return Trajectory(samples=samples, tolerance=tol)

    return SaddleManifolds(
        wu_ne=branch(e_u, +1.0, 1.0),
        wu_sw=branch(e_u, -1.0, 1.0),
        ws_ne=branch(e_s, +1.0, -1.0),
        ws_sw=branch(e_s, -1.0, -1.0),
        saddle=p1,
    )


def _separation(params, tol):
    """Signed gap between the first ray crossings of the loop-forming
    manifold branches, or None if either branch misses the ray.

    The measurement ray starts at P2 and points away from P1, crossing
    the loop on its far side.  Both branches are seeded on the P2 side of
    the saddle, which is where a homoclinic loop's tangents point.
    """
    p2, _, p1 = _stable_interior(params)
    if p1 is None or p2 is None:
        raise DomainError("bracket endpoint lacks the saddle/anti-saddle pair")
    lam_s, e_s, lam_u, e_u = _eig_branches(params, p1)
    toward = np.array([p2.u - p1.u, p2.v - p1.v])
    if np.dot(e_u, toward) < 0.0:
        e_u = -e_u
    if np.dot(e_s, toward) < 0.0:
        e_s = -e_s
    d = toward / np.linalg.norm(toward)
    C, M, N, Q = params.astuple()

    def first_crossing(e, lam, sgn_time):
        u0 = p1.u + SEED_EPS * e[0]
        v0 = p1.v + SEED_EPS * e[1]
        # escaping the eps-seed takes about ln(R/eps)/|lam|; near the BT
        # point the eigenvalues collapse, so budget time accordingly
        t_max = 5.0e3 + 20.0 / abs(lam)
        r, ok = _rk._ray_crossing(C, M, N, Q, sgn_time, u0, v0,
                                  p2.u, p2.v, d[0], d[1], 1e-9,
                                  tol, t_max, 4_000_000, EVENT_H_MAX)
        return r if ok == 0 else None

    r_u = first_crossing(e_u, lam_u, 1.0)
    r_s = first_crossing(e_s, lam_s, -1.0)
    if r_u is None or r_s is None:
        return None
    return r_u - r_s


def _p1_loop_side(params, tol):
    """Which side of the homoclinic loop the parameters are on, from the
    omega limit of the saddle's unstable branch pointing at P2.

    Before the loop forms that branch spirals into P2 (or a stable cycle
    around it); past the loop it slips outside and reaches the origin's
    attracting sector.  This is coarser than the signed separation but
    stays meaningful arbitrarily close to the BT point, where P2 turns
    repelling and the separation measurement loses its reference loop.
    """
    p2, _, p1 = _stable_interior(params)
    if p1 is None or p2 is None:
        raise DomainError("bracket endpoint lacks the saddle/anti-saddle pair")
    _, _, _, e_u = _eig_branches(params, p1)
    toward = np.array([p2.u - p1.u, p2.v - p1.v])
    if np.dot(e_u, toward) < 0.0:
        e_u = -e_u
    s0 = State(p1.u + SEED_EPS * e_u[0], p1.v + SEED_EPS * e_u[1])
    label = omega_limit(params, s0, tol=max(tol, 1e-12))
    if label in (OmegaLabel.P2, OmegaLabel.STABLE_CYCLE):
        return -1.0
    if label in (OmegaLabel.ORIGIN, OmegaLabel.CARRYING_CAPACITY):
        return 1.0
    return None


def _boundary_loop_side(params, tol):
    """Which side of the separatrix-loop bifurcation the parameters are on,
    for slices where the interior saddle is absent.

    The carrying capacity (1, 0) is then the only saddle touching the
    relevant basin boundary (the origin is degenerate with a saddle
    sector next to the prey axis).  Its interior unstable-manifold orbit
    either spirals into P2 / a cycle around it (-1, loop not yet formed)
    or slides past the saddle sector into the origin's attracting sector
    (+1, loop has broken).  The switch is the loop bifurcation.
    """
    C, M, N, Q = params.astuple()
    if C <= M:
        raise DomainError("carrying capacity is not a saddle (C <= M)")
    p2, _, _ = _stable_interior(params)
    if p2 is None:
        raise DomainError("no interior anti-saddle P2")
    J = np.asarray(jacobian(params, State(1.0, 0.0)))
    lams, vecs = np.linalg.eig(J)
    k = int(np.argmax(lams.real))
    e = vecs[:, k].real
    if e[1] < 0.0:
        e = -e
    seed = State(1.0 + SEED_EPS * e[0], SEED_EPS * e[1])
    lab = omega_limit(params, seed, tol=tol)
    if lab is OmegaLabel.ORIGIN:
        return 1.0
    if lab in (OmegaLabel.P2, OmegaLabel.STABLE_CYCLE):
        return -1.0
    raise NotFoundError(f"unstable-manifold omega limit {lab.value}")


def homoclinic_Q(C: float, M: float, N: float, Q_lo: float, Q_hi: float,
                 tol: float = 1e-10) -> float:
    """Locate the separatrix loop around P2 by bisection in Q.

    When the interior saddle P1 exists across the bracket the loop is its
    homoclinic orbit, and the bisection drives the signed separation of
    the W^u and W^s first crossings on the measurement ray below 1e-8 (or
    the bracket below 1e-6).  For parameter slices where P1 has not yet
    entered the first quadrant, the same cycle-creating loop runs through
    the boundary saddles instead, and the bisection uses the omega-limit
    dichotomy of the carrying capacity's unstable manifold.  Raises
    NotFoundError when the bracket does not straddle a sign change.
    """
    if not Q_lo < Q_hi:
        raise DomainError("empty bracket")

    def has_p1(Q):
        _, _, p1 = _stable_interior(Params(C, M, N, Q))
        return p1 is not None

    def bisect(sep, early_exit, lo, hi):
        s_lo = sep(lo)
        s_hi = sep(hi)
        if s_lo is None or s_hi is None:
            raise NotFoundError("manifold branch misses the measurement ray")
        if s_lo * s_hi > 0.0:
            raise NotFoundError(
                "separation does not change sign over the bracket")
        while hi - lo > 1e-6:
            mid = 0.5 * (lo + hi)
            s_mid = sep(mid)
            if s_mid is None:
                raise NotFoundError("separation undefined inside the bracket")
            if abs(s_mid) < early_exit:
                return mid
            if s_lo * s_mid <= 0.0:
                hi, s_hi = mid, s_mid
            else:
                lo, s_lo = mid, s_mid
        return 0.5 * (lo + hi)

    if has_p1(Q_lo) and has_p1(Q_hi):
        try:
            return bisect(
                lambda Q: _separation(Params(C, M, N, Q), tol), 1e-8,
                Q_lo, Q_hi)
        except NotFoundError:
            # close to the BT point P2 turns repelling before the loop
            # breaks and the unstable branch stops circling the ray; the
            # omega-limit dichotomy of the same branch still resolves it
            return bisect(
                lambda Q: _p1_loop_side(Params(C, M, N, Q), tol), 0.0,
                Q_lo, Q_hi)
    return bisect(
        lambda Q: _boundary_loop_side(Params(C, M, N, Q), min(tol, 1e-9)),
        0.0, Q_lo, Q_hi)


__all__ = [
    "OmegaLabel",
    "Trajectory",
    "LimitCycle",
    "GridSpec",
    "BasinRaster",
    "SaddleManifolds",
    "integrate",
    "omega_limit",
    "basin_raster",
    "find_limit_cycles",
    "saddle_manifolds",
    "homoclinic_Q",
    "v_ceiling",
]
