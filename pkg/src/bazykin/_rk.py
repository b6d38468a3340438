"""Compiled integration kernels (Dormand-Prince 5(4) with FSAL).

Everything here is numba-jitted and operates on plain floats/arrays so the
basin rasteriser can run cell-parallel.  The public API lives in
:mod:`bazykin.dynamics`; nothing in this module validates inputs.

Omega-limit label codes returned by the kernels:
  0..3  converged to the target equilibrium with that row index
  100   periodic return detected (stable limit cycle)
  -1    budget exhausted, undetermined
"""

import numpy as np
from numba import njit, prange

CYCLE_CODE = 100
UNDETERMINED = -1

# Dormand-Prince tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@njit(cache=True, inline="always")
def _rhs(C, M, N, Q, sgn, u, v):
    du = u * (1.0 - u) * (u + v) - Q * u * v
    dv = C * u * v - v * (u + v) * (M + N * v)
    return sgn * du, sgn * dv


@njit(cache=True)
def _step(C, M, N, Q, sgn, u, v, du, dv, h):
    """One embedded step from (u, v) with FSAL derivative (du, dv).

    Returns (u5, v5, du_new, dv_new, err) where err is the scaled error
    numerator (caller divides by the tolerance scale).
    """
    k1u, k1v = du, dv
    k2u, k2v = _rhs(C, M, N, Q, sgn, u + h * _A21 * k1u, v + h * _A21 * k1v)
    k3u, k3v = _rhs(C, M, N, Q, sgn, u + h * (_A31 * k1u + _A32 * k2u), v + h * (_A31 * k1v + _A32 * k2v))
    k4u, k4v = _rhs(
        C, M, N, Q, sgn,
        u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u),
        v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v),
    )
    k5u, k5v = _rhs(
        C, M, N, Q, sgn,
        u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u),
        v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v),
    )
    k6u, k6v = _rhs(
        C, M, N, Q, sgn,
        u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u),
        v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v),
    )
    u5 = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
    v5 = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)
    k7u, k7v = _rhs(C, M, N, Q, sgn, u5, v5)
    eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
    ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v + _E7 * k7v)
    return u5, v5, k7u, k7v, eu, ev


@njit(cache=True, inline="always")
def _err_norm(eu, ev, u0, v0, u1, v1, tol):
    su = tol + tol * max(abs(u0), abs(u1))
    sv = tol + tol * max(abs(v0), abs(v1))
    return np.sqrt(0.5 * ((eu / su) ** 2 + (ev / sv) ** 2))


@njit(cache=True, inline="always")
def _clip(x):
    if x < 0.0:
        # the axes are invariant; tiny negative overshoots are numerical
        return 0.0 if x > -1e-12 else x
    return x


@njit(cache=True)
def _traj(C, M, N, Q, sgn, u0, v0, t_end, tol, max_steps, h_max, bound=1e9):
    """Dense trajectory from (u0, v0) over [0, t_end] of the (possibly
    time-reversed) field.  Returns (ts, us, vs, status); status 0 = reached
    t_end, 1 = step-size underflow, 2 = step budget exhausted, 3 = left the
    box [0, bound]^2 (reversed-time orbits can blow up in finite time).
    """
    ts = np.empty(max_steps + 1)
    us = np.empty(max_steps + 1)
    vs = np.empty(max_steps + 1)
    t = 0.0
    u, v = u0, v0
    ts[0], us[0], vs[0] = t, u, v
    n = 1
    du, dv = _rhs(C, M, N, Q, sgn, u, v)
    mag = max(abs(du), abs(dv), 1e-8)
    h = min(1e-2 / mag, h_max, t_end)
    status = 2
    while n <= max_steps:
        if t + h > t_end:
            h = t_end - t
        u1, v1, du1, dv1, eu, ev = _step(C, M, N, Q, sgn, u, v, du, dv, h)
        err = _err_norm(eu, ev, u, v, u1, v1, tol)
        if err <= 1.0:
            t += h
            u, v = _clip(u1), _clip(v1)
            du, dv = du1, dv1
            ts[n], us[n], vs[n] = t, u, v
            n += 1
            if t >= t_end:
                status = 0
                break
            if u > bound or v > bound:
                status = 3
                break
        fac = 0.9 * err ** -0.2 if err > 1e-10 else 5.0
        h *= min(5.0, max(0.2, fac))
        if h > h_max:
            h = h_max
        if h < 1e-14 * max(1.0, t):
            status = 1
            break
    return ts[:n], us[:n], vs[:n], status


@njit(cache=True, inline="always")
def _hermite(y0, y1, f0, f1, h, s):
    """Cubic Hermite value at fraction s in [0, 1] of a step of size h."""
    h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
    h10 = s * (1.0 - s) ** 2
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


@njit(cache=True)
def _omega(C, M, N, Q, u0, v0, targets, origin_idx, secu, secv, has_sec,
           tol, t_budget, max_steps, prox, hold):
    """Classify the forward limit of the trajectory from (u0, v0).

    targets: (k, 2) array of attractor candidates; origin_idx marks which
    row is the origin (for the step-underflow failsafe).  When has_sec, the
    ray v = secv, u > secu is monitored for periodic returns.
    """
    t = 0.0
    u, v = u0, v0
    du, dv = _rhs(C, M, N, Q, 1.0, u, v)
    mag = max(abs(du), abs(dv), 1e-8)
    h = min(1e-2 / mag, 1.0)
    inside = -1
    t_enter = 0.0
    last_cross = -1.0
    n = 0
    while n < max_steps and t < t_budget:
        u1, v1, du1, dv1, eu, ev = _step(C, M, N, Q, 1.0, u, v, du, dv, h)
        err = _err_norm(eu, ev, u, v, u1, v1, tol)
        if err <= 1.0:
            tp, up, vp, dup, dvp = t, u, v, du, dv
            t += h
            u, v = _clip(u1), _clip(v1)
            # proximity bookkeeping
            best = -1
            for i in range(targets.shape[0]):
                d = max(abs(u - targets[i, 0]), abs(v - targets[i, 1]))
                if d < prox:
                    best = i
                    break
            if best >= 0:
                if inside == best:
                    if t - t_enter >= hold:
                        return best
                else:
                    inside = best
                    t_enter = t
            else:
                inside = -1
            # section crossing: v passes secv upward while u > secu
            if has_sec and vp < secv <= v and dvp > 0.0:
                # refine with cubic Hermite bisection
                lo, hi = 0.0, 1.0
                for _ in range(40):
                    mid = 0.5 * (lo + hi)
                    vm = _hermite(vp, v, dvp, dv1, h, mid)
                    if vm < secv:
                        lo = mid
                    else:
                        hi = mid
                s = 0.5 * (lo + hi)
                uc = _hermite(up, u, dup, du1, h, s)
                if uc > secu:
                    if last_cross > 0.0 and abs(uc - last_cross) < 1e-6 * max(1.0, abs(uc)) \
                            and abs(uc - secu) > 1e-4:
                        return CYCLE_CODE
                    last_cross = uc
            du, dv = du1, dv1
            n += 1
        fac = 0.9 * err ** -0.2 if err > 1e-10 else 5.0
        h *= min(5.0, max(0.2, fac))
        if h < 1e-14 * max(1.0, t):
            if origin_idx >= 0 and u * u + v * v < 1e-20:
                return origin_idx
            return UNDETERMINED
    # budget exhausted; a state creeping into the origin along the slow
    # algebraic decay still counts once it is inside the proximity ball
    if inside >= 0:
        return inside
    return UNDETERMINED


@njit(cache=True, parallel=True)
def _basin(C, M, N, Q, ucs, vcs, targets, origin_idx, secu, secv, has_sec,
           tol, t_budget, max_steps, prox, hold):
    nu = ucs.shape[0]
    nv = vcs.shape[0]
    labels = np.empty((nu, nv), dtype=np.int64)
    for i in prange(nu):
        for j in range(nv):
            labels[i, j] = _omega(
                C, M, N, Q, ucs[i], vcs[j], targets, origin_idx,
                secu, secv, has_sec, tol, t_budget, max_steps, prox, hold,
            )
    return labels


@njit(cache=True)
def _return_map(C, M, N, Q, sgn, secu, secv, ustart, tol, t_max, max_steps, h_max):
    """First return of the ray {v = secv, u > secu} starting from
    (ustart, secv).  Crossing direction must match the departure direction
    (upward for the forward field, downward for the reversed one).

    Returns (u_return, t_return, ok).
    """
    u, v = ustart, secv
    du, dv = _rhs(C, M, N, Q, sgn, u, v)
    upward = dv > 0.0
    t = 0.0
    mag = max(abs(du), abs(dv), 1e-8)
    h = min(1e-2 / mag, h_max)
    n = 0
    armed = False
    while n < max_steps and t < t_max:
        u1, v1, du1, dv1, eu, ev = _step(C, M, N, Q, sgn, u, v, du, dv, h)
        err = _err_norm(eu, ev, u, v, u1, v1, tol)
        if err <= 1.0:
            tp, up, vp, dup, dvp = t, u, v, du, dv
            t += h
            u, v = _clip(u1), _clip(v1)
            if not armed and abs(v - secv) > 1e-4:
                armed = True
            crossed = (vp < secv <= v) if upward else (vp > secv >= v)
            if armed and crossed:
                lo, hi = 0.0, 1.0
                for _ in range(40):
                    mid = 0.5 * (lo + hi)
                    vm = _hermite(vp, v, dvp, dv1, h, mid)
                    below = vm < secv
                    if below == upward:
                        lo = mid
                    else:
                        hi = mid
                s = 0.5 * (lo + hi)
                uc = _hermite(up, u, dup, du1, h, s)
                tc = tp + s * h
                if uc > secu:
                    return uc, tc, 0
                # crossed on the wrong side of the ray: keep integrating
            du, dv = du1, dv1
            n += 1
        fac = 0.9 * err ** -0.2 if err > 1e-10 else 5.0
        h *= min(5.0, max(0.2, fac))
        if h > h_max:
            h = h_max
        if h < 1e-14 * max(1.0, t):
            return 0.0, 0.0, 1
    return 0.0, 0.0, 2


@njit(cache=True)
def _ray_crossing(C, M, N, Q, sgn, u0, v0, px, py, dx, dy, r_min, tol, t_max, max_steps, h_max):
    """First crossing of the ray {P + r*d, r > r_min} by the trajectory from
    (u0, v0).  The signed transverse coordinate is the cross product
    d x (state - P); a sign change brackets a crossing, accepted when the
    radial coordinate exceeds r_min.

    Returns (r, ok) with r the radial coordinate of the crossing.
    """
    u, v = u0, v0
    du, dv = _rhs(C, M, N, Q, sgn, u, v)
    t = 0.0
    mag = max(abs(du), abs(dv), 1e-8)
    h = min(1e-3 / mag, 0.1)
    n = 0
    cp = dx * (v - py) - dy * (u - px)
    while n < max_steps and t < t_max:
        u1, v1, du1, dv1, eu, ev = _step(C, M, N, Q, sgn, u, v, du, dv, h)
        err = _err_norm(eu, ev, u, v, u1, v1, tol)
        if err <= 1.0:
            up, vp, dup, dvp = u, v, du, dv
            t += h
            u, v = _clip(u1), _clip(v1)
            cn = dx * (v - py) - dy * (u - px)
            if cp * cn < 0.0:
                lo, hi = 0.0, 1.0
                pos = cp > 0.0
                for _ in range(50):
                    mid = 0.5 * (lo + hi)
                    um = _hermite(up, u, dup, du1, h, mid)
                    vm = _hermite(vp, v, dvp, dv1, h, mid)
                    cm = dx * (vm - py) - dy * (um - px)
                    if (cm > 0.0) == pos:
                        lo = mid
                    else:
                        hi = mid
                s = 0.5 * (lo + hi)
                um = _hermite(up, u, dup, du1, h, s)
                vm = _hermite(vp, v, dvp, dv1, h, s)
                r = dx * (um - px) + dy * (vm - py)
                if r > r_min:
                    return r, 0
            cp = cn
            du, dv = du1, dv1
            n += 1
        fac = 0.9 * err ** -0.2 if err > 1e-10 else 5.0
        h *= min(5.0, max(0.2, fac))
        if h > h_max:
            h = h_max
        if h < 1e-14 * max(1.0, t):
            return 0.0, 1
    return 0.0, 2
