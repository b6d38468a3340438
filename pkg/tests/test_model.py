import numpy as np
import pytest

from bazykin.errors import DomainError
from bazykin.model import (
    DimensionalParams,
    Params,
    State,
    jacobian,
    nondimensionalize,
    predator_nullcline,
    prey_nullcline,
    vector_field,
)

RNG = np.random.default_rng(20240817)


def reference_field(p, s):
    # written out independently from the implementation
    u, v = s.u, s.v
    du = u * (1.0 - u) * (u + v) - p.Q * u * v
    dv = p.C * u * v - v * (u + v) * (p.M + p.N * v)
    return du, dv


def test_vector_field_matches_reference():
    for _ in range(200):
        p = Params(*RNG.uniform(0.05, 3.0, size=4))
        s = State(*RNG.uniform(0.0, 2.0, size=2))
        got = vector_field(p, s)
        want = reference_field(p, s)
        assert got == pytest.approx(want, rel=1e-14, abs=1e-14)


def test_axes_are_invariant():
    # no cross-terms without both populations present
    for _ in range(50):
        p = Params(*RNG.uniform(0.05, 3.0, size=4))
        du, dv = vector_field(p, State(RNG.uniform(0.0, 2.0), 0.0))
        assert dv == 0.0
        du, dv = vector_field(p, State(0.0, RNG.uniform(0.0, 2.0)))
        assert du == 0.0


def test_jacobian_against_finite_differences():
    h = 1e-6
    for _ in range(1000):
        p = Params(*RNG.uniform(0.05, 3.0, size=4))
        s = State(*RNG.uniform(0.05, 2.0, size=2))
        J = jacobian(p, s)
        fd = np.empty((2, 2))
        for j, (du_, dv_) in enumerate([(h, 0.0), (0.0, h)]):
            fp = vector_field(p, State(s.u + du_, s.v + dv_))
            fm = vector_field(p, State(s.u - du_, s.v - dv_))
            fd[0, j] = (fp[0] - fm[0]) / (2.0 * h)
            fd[1, j] = (fp[1] - fm[1]) / (2.0 * h)
        scale = max(1.0, np.abs(J).max())
        assert np.abs(J - fd).max() / scale < 1e-6


def test_nullclines_annihilate_the_field():
    checked = 0
    while checked < 100:
        C = RNG.uniform(0.5, 2.0)
        M = RNG.uniform(0.05, 0.45)
        p = Params(C, M, RNG.uniform(0.1, 2.0), RNG.uniform(0.1, 2.0))
        u = RNG.uniform(0.05, 0.95)
        if abs(p.Q - 1.0 + u) < 1e-3:
            continue  # too close to the nullcline pole
        v = prey_nullcline(p, u)
        if v < 0.0:
            continue
        du, _ = vector_field(p, State(u, v))
        assert abs(du) < 1e-12 * max(1.0, abs(v))
        v = predator_nullcline(p, u)
        if v > 0.0:
            _, dv = vector_field(p, State(u, v))
            assert abs(dv) < 1e-12 * max(1.0, abs(v))
        checked += 1


def test_nondimensionalize_known_values():
    d = DimensionalParams(r=2.0, K=10.0, q=0.5, a=1.0, c=0.8, mu0=0.1,
                          mu1=0.05)
    p = nondimensionalize(d)
    # the four groups, computed by hand
    assert p.C == pytest.approx(0.8)
    assert p.M == pytest.approx(0.1 / 2.0)
    assert p.N == pytest.approx(0.05 * 10.0 / 2.0)
    assert p.Q == pytest.approx(0.5 / 2.0)


def test_params_validate_positivity():
    with pytest.raises(DomainError):
        Params(-0.1, 0.2, 0.3, 0.4)
    with pytest.raises(DomainError):
        Params(0.1, 0.0, 0.3, 0.4)
    with pytest.raises(DomainError):
        State(-1e-9, 0.5)
