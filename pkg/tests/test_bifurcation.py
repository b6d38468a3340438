
import numpy as np
import pytest

from bazykin.errors import DomainError, NotFoundError
from bazykin.model import Params, State, jacobian, vector_field
from bazykin import bifurcation as bif
from bazykin import equilibria as eq

RNG = np.random.default_rng(40312)

M_REF = 0.16
N_REF = 0.25


def admissible_sample():
    """Random (C, M, U, V) in the admissible chart set Lambda."""
    while True:
        U = RNG.uniform(0.05, 0.9)
        V = RNG.uniform(0.05, 0.8)
        C = RNG.uniform(0.2, 2.0)
        M = RNG.uniform(0.01, 0.95 * C * U / (U + V))
        if C * U - M * (U + V) > 1e-3:
            return C, M, U, V


# ---------------------------------------------------------------------------
# saddle-node locus


def test_saddle_node_Q_lands_on_the_fold():
    for _ in range(100):
        M = RNG.uniform(0.02, 0.4)
        N = RNG.uniform(M + 0.02, 0.9)
        C = RNG.uniform(M + 0.05, 1.5)
        q = bif.saddle_node_Q(C, M, N)
        sig = eq.sigma_delta(Params(C, M, N, q))
        assert abs(sig.delta) < 1e-10 * max(1.0, (M - N) ** 2)
        assert sig.case_label is eq.CaseLabel.DoubleRoot_DeltaZero


def test_saddle_node_requires_C_above_M():
    with pytest.raises(DomainError):
        bif.saddle_node_Q(0.1, 0.16, 0.25)


def test_collapsed_equilibrium_sits_on_both_nullclines():
    q = bif.saddle_node_Q(0.363, M_REF, N_REF)
    p = Params(0.363, M_REF, N_REF, q)
    es = eq.interior_equilibria(p)
    assert len(es) == 1 and es[0].multiplicity == 2
    du, dv = vector_field(p, es[0].point)
    assert max(abs(du), abs(dv)) < 1e-12


def test_collapsed_classification_flips_at_threshold():
    c_star = eq.saddle_node_trace_threshold(M_REF, N_REF)
    for C, want in ((c_star - 0.05, eq.StabilityTag.SaddleNodeRepeller),
                    (c_star + 0.05, eq.StabilityTag.SaddleNodeAttractor)):
        q = bif.saddle_node_Q(C, M_REF, N_REF)
        assert eq.classify_collapsed(Params(C, M_REF, N_REF, q)).tag is want


def test_sotomayor_nondegenerate_along_the_fold():
    for C in (0.3, 0.363, 0.5, 0.7):
        q = bif.saddle_node_Q(C, M_REF, N_REF)
        chk = bif.sotomayor_check(Params(C, M_REF, N_REF, q))
        assert chk.nondegenerate
        assert chk.wfc != 0.0 and chk.quad != 0.0


# ---------------------------------------------------------------------------
# Hopf chart identities


def test_chart_factors_reproduce_trace_and_determinant():
    for _ in range(200):
        C, M, U, V = admissible_sample()
        N, Q = bif.psi_map(C, M, U, V)
        p = Params(C, M, N, Q)
        # (U, V) really is an equilibrium of the mapped parameters
        du, dv = vector_field(p, State(U, V))
        assert max(abs(du), abs(dv)) < 1e-12
        J = jacobian(p, State(U, V))
        tr = J[0, 0] + J[1, 1]
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        assert tr == pytest.approx(bif.hopf_T(C, M, U, V) / (U + V),
                                   rel=1e-10, abs=1e-12)
        assert det == pytest.approx(U * bif.hopf_D(C, M, U, V),
                                    rel=1e-10, abs=1e-12)


def test_hopf_M_solves_the_trace_equation():
    for _ in range(200):
        C, _, U, V = admissible_sample()
        M = bif.hopf_M(C, U, V)
        assert abs(bif.hopf_T(C, M, U, V)) < 1e-12


def test_trace_factor_is_linear_in_M_with_slope_UV_squared():
    # dT/dM = (U + V)^2, checked against central differences
    h = 1e-6
    for _ in range(50):
        C, M, U, V = admissible_sample()
        fd = (bif.hopf_T(C, M + h, U, V) - bif.hopf_T(C, M - h, U, V)) / (2 * h)
        assert fd == pytest.approx((U + V) ** 2, rel=1e-8)


def test_hopf_curve_samples_have_imaginary_eigenvalues():
    samples = bif.hopf_curve_UV(0.363, M_REF)
    assert len(samples) >= 20
    step = max(1, len(samples) // 20)
    for h in samples[::step]:
        N, Q = bif.psi_map(0.363, h.M_hopf, h.U, h.V)
        J = jacobian(Params(0.363, h.M_hopf, N, Q), State(h.U, h.V))
        lam = np.linalg.eigvals(J)
        assert np.abs(lam.real).max() < 1e-9 * np.abs(lam).max()
        # the reported angular frequency is the actual imaginary part up to
        # the chart's positive time rescaling, so only check positivity here
        assert h.w > 0.0 and np.abs(lam.imag).max() > 0.0


def test_hopf_Q_agrees_with_the_chart_route():
    # pick chart samples, push them through psi, and re-locate the Hopf
    # value of Q by the trace bisection in the (Q, C) plane
    samples = bif.hopf_curve_UV(0.363, M_REF)
    hits = 0
    for h in samples[:: max(1, len(samples) // 8)]:
        if abs(h.M_hopf - M_REF) > 0.2:
            continue
        N, Q = bif.psi_map(0.363, h.M_hopf, h.U, h.V)
        try:
            q2 = bif.hopf_Q(0.363, h.M_hopf, N, max(1e-3, Q - 0.2), Q + 0.2)
        except NotFoundError:
            continue
        assert q2 == pytest.approx(Q, abs=1e-8)
        hits += 1
    assert hits >= 3


def test_bautin_point_has_vanishing_l1():
    U, V = bif.bautin_point(0.363, M_REF)
    data = bif.lyapunov_l1(0.363, U, V)
    assert abs(data.l1) < 1e-10
    # l1 carries opposite signs on the two sides
    left = bif.lyapunov_l1(0.363, U - 1e-3, bif._hopf_V(0.363, M_REF, U - 1e-3))
    right = bif.lyapunov_l1(0.363, U + 1e-3, bif._hopf_V(0.363, M_REF, U + 1e-3))
    assert left.l1 * right.l1 < 0.0


def test_trace_sign_quantity_requires_delta():
    with pytest.raises(DomainError):
        bif.trace_sign_quantity(Params(0.3, M_REF, N_REF, 2.5))


# ---------------------------------------------------------------------------
# Bogdanov-Takens certificate


def numeric_psi(x, M, N):
    u, v, C, Q = x
    p = Params(C, M, N, Q)
    s = State(u, v)
    f1, f2 = vector_field(p, s)
    J = jacobian(p, s)
    return np.array([f1, f2, J[0, 0] + J[1, 1], np.linalg.det(J)])


def test_det_DPsi_matches_finite_differences():
    h = 1e-6
    for _ in range(50):
        u, v = RNG.uniform(0.1, 0.9, size=2)
        C = RNG.uniform(0.3, 1.5)
        Q = RNG.uniform(1.1, 2.2)
        M = RNG.uniform(0.05, 0.25)
        N = RNG.uniform(M + 0.05, 0.6)
        x = np.array([u, v, C, Q])
        Dp = np.empty((4, 4))
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            Dp[:, j] = (numeric_psi(x + e, M, N) - numeric_psi(x - e, M, N)) / (2 * h)
        want = np.linalg.det(Dp)
        got = bif.det_DPsi(u, v, C, Q, M, N)
        assert got == pytest.approx(want, rel=1e-5, abs=1e-10)


def test_bt_jacobian_is_nilpotent():
    bt = bif.bt_point(M_REF, N_REF)
    J = jacobian(Params(bt.C_star, M_REF, N_REF, bt.Q_star), bt.E_point)
    assert abs(np.trace(J)) < 1e-8
    assert abs(np.linalg.det(J)) < 1e-8
    assert np.abs(J).max() > 0.0
    J2 = J @ J
    assert np.abs(J2).max() < 1e-8 * max(1.0, np.abs(J).max() ** 2)


def test_bt_eigenvector_slopes():
    # columns (z1, 1) and (1, z2) bring J to the nilpotent normal form:
    # the first spans the kernel, the second maps onto the first
    bt = bif.bt_point(M_REF, N_REF)
    J = jacobian(Params(bt.C_star, M_REF, N_REF, bt.Q_star), bt.E_point)
    col1 = np.array([bt.z1, 1.0])
    col2 = np.array([1.0, bt.z2])
    assert np.abs(J @ col1).max() < 1e-8
    assert J @ col2 == pytest.approx(col1, rel=1e-8)


def test_bt_normal_form_identities():
    bt = bif.bt_point(M_REF, N_REF)
    assert bt.b20 == pytest.approx(-2.0 * bt.z1 * bt.G2, rel=1e-12)
    assert bt.a20 + bt.b11 == pytest.approx(bt.G3 * bt.G4, rel=1e-12)
    for g in (bt.G1, bt.G2, bt.G3, bt.G4):
        assert g != 0.0
    assert bt.nf_sign in (-1, 1)
    assert bt.nf_sign == (1 if bt.b20 * (bt.a20 + bt.b11) > 0 else -1)


def test_bt_sits_on_both_loci():
    bt = bif.bt_point(M_REF, N_REF)
    # on the fold
    assert bif.saddle_node_Q(bt.C_star, M_REF, N_REF) == pytest.approx(
        bt.Q_star, rel=1e-12)
    # at the trace threshold
    assert eq.saddle_node_trace_threshold(M_REF, N_REF) == pytest.approx(
        bt.C_star, rel=1e-12)


def test_bt_transversality_sign_is_stable_across_MN():
    for M, N in ((0.1, 0.3), (0.16, 0.25), (0.2, 0.5)):
        bt = bif.bt_point(M, N)
        assert abs(bt.G1) > 0.0
        E = bt.E_point
        assert 0.0 < E.u < 1.0 and E.v > 0.0
