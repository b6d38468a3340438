"""Acceptance gate: the eight headline reproduction criteria.

Each test prints a single PASS/FAIL line (visible with pytest -s) and then
asserts.  Three criteria contain reference numbers that this implementation
cannot reproduce from the published model; those asserts fail honestly and
the mismatch is spelled out in the printed line.  See the repository notes
for the numeric evidence behind each discrepancy.
"""

import time

import numpy as np

from bazykin.model import Params, State, jacobian
from bazykin import bifurcation as bif
from bazykin import dynamics as dyn
from bazykin import equilibria as eq

REF = dict(C=0.363, M=0.16, N=0.25)


def report(n, ok, detail):
    print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


def test_criterion_1_trace_sign_regression():
    t0 = time.time()
    got_16 = bif.trace_sign_quantity(Params(0.363, 0.16, 0.25, 1.6))
    got_18 = bif.trace_sign_quantity(Params(0.363, 0.16, 0.25, 1.8))
    ok_16 = abs(got_16 - (-0.036091)) < 1e-5
    ok_18 = abs(got_18 - 0.025983) < 1e-5
    elapsed = time.time() - t0
    report(1, ok_16 and ok_18,
           f"T1*sqrt(delta)+T2 at Q=1.6: {got_16:.7f} (ref -0.036091, "
           f"{'ok' if ok_16 else 'MISMATCH'}); at Q=1.8: {got_18:.7f} "
           f"(ref 0.025983, {'ok' if ok_18 else 'MISMATCH'}); {elapsed:.2f}s")
    assert elapsed < 1.0
    assert ok_18, f"Q=1.8 value {got_18} off the reference 0.025983"
    # the quoted Q=1.6 value is not reproduced by the published split
    # polynomials (they give -0.0036165, an order of magnitude smaller);
    # the sign agrees but the magnitude does not, at any plausible reading
    assert ok_16, f"Q=1.6 value {got_16} does not match the reference -0.036091"


def test_criterion_2_saddle_node_location():
    t0 = time.time()
    q_sn = bif.saddle_node_Q(0.363, 0.16, 0.25)
    cls = eq.classify_collapsed(Params(0.363, 0.16, 0.25, q_sn))
    elapsed = time.time() - t0
    ok = round(q_sn, 4) == 1.8281 and cls.tag is eq.StabilityTag.SaddleNodeRepeller
    report(2, ok, f"Q_SN = {q_sn:.6f} (ref 1.8281), collapsed point is "
                  f"{cls.tag.value}; {elapsed:.2f}s")
    assert elapsed < 1.0
    assert round(q_sn, 4) == 1.8281
    assert cls.tag is eq.StabilityTag.SaddleNodeRepeller


def test_criterion_3_homoclinic_location():
    t0 = time.time()
    q = dyn.homoclinic_Q(0.363, 0.16, 0.25, 1.695, 1.705)
    elapsed = time.time() - t0
    ok = 1.695 <= q <= 1.705 and abs(q - 1.70) < 0.005
    report(3, ok, f"Q_hom = {q:.6f} (ref 1.70 +/- 0.005); {elapsed:.2f}s")
    assert elapsed < 60.0
    assert 1.695 <= q <= 1.705
    assert abs(q - 1.70) < 0.005


def test_criterion_4_limit_cycle_census():
    t0 = time.time()
    one = dyn.find_limit_cycles(Params(0.363, 0.16, 0.25, 1.705))
    two = dyn.find_limit_cycles(Params(0.363, 0.17, 0.25, 1.77))
    elapsed = time.time() - t0
    ok_one = len(one) == 1 and not one[0].stable
    ok_two = (len(two) == 2 and not two[0].stable and two[1].stable)
    report(4, ok_one and ok_two,
           f"(Q=1.705): {len(one)} cycle(s), "
           f"stable flags {[c.stable for c in one]} (ref: one, unstable, "
           f"{'ok' if ok_one else 'MISMATCH'}); "
           f"(M=0.17, Q=1.77): {len(two)} cycle(s), "
           f"stable flags {[c.stable for c in two]} (ref: two, inner "
           f"unstable outer stable, {'ok' if ok_two else 'MISMATCH'}); "
           f"{elapsed:.2f}s")
    assert elapsed < 120.0
    assert ok_one, "expected exactly one unstable cycle at Q=1.705"
    # the published portrait shows a second, outer stable cycle at
    # (0.363, 0.17, 0.25, 1.77); neither this integrator nor an independent
    # implicit solver finds it - every orbit beyond the unstable cycle
    # reaches the origin
    assert ok_two, "expected an outer stable cycle at (0.363, 0.17, 0.25, 1.77)"


def test_criterion_5_qualitative_phase_portraits():
    t0 = time.time()
    grid = dyn.GridSpec(0.02, 1.0, 0.02, 1.0, 50, 50)

    p_a = Params(C=10.05, M=1.05, N=10.0, Q=3.05)
    assert eq.interior_equilibria(p_a) == []
    assert eq.classify_carrying_capacity(p_a).tag is eq.StabilityTag.Saddle
    sector_a = eq.classify_origin(p_a).origin_sectors
    ras_a = dyn.basin_raster(p_a, grid)
    frac_origin = float(np.mean(
        ras_a.labels == dyn.OmegaLabel.ORIGIN))

    p_b = Params(C=0.205, M=0.22, N=0.25, Q=1.8)
    assert eq.interior_equilibria(p_b) == []
    assert eq.classify_carrying_capacity(p_b).tag is eq.StabilityTag.StableNode
    ras_b = dyn.basin_raster(p_b, grid)
    frac_cc = float(np.mean(
        ras_b.labels == dyn.OmegaLabel.CARRYING_CAPACITY))
    elapsed = time.time() - t0

    ok_a = sector_a is eq.OriginSector.Elliptic_III and frac_origin == 1.0
    ok_b = frac_cc == 1.0
    report(5, ok_a and ok_b,
           f"portrait A: origin sector {sector_a.name}, raster "
           f"{100 * frac_origin:.1f}% Origin ({'ok' if ok_a else 'MISMATCH'}); "
           f"portrait B: raster {100 * frac_cc:.1f}% CarryingCapacity "
           f"(ref 100%, {'ok' if ok_b else 'MISMATCH'}); {elapsed:.2f}s")
    assert elapsed < 60.0
    assert ok_a
    # the reference portrait colours the whole square as the basin of
    # (1, 0); direct integration (both integrators) sends the upper left
    # part of the square to the origin instead
    assert ok_b, f"only {100 * frac_cc:.1f}% of the raster reaches (1, 0)"


def test_criterion_6_bifurcation_diagram_skeleton():
    t0 = time.time()
    d = bif.trace_diagram(0.16, 0.25, (1.0, 2.2), (0.2, 0.9))
    q_sn = bif.saddle_node_Q(0.363, 0.16, 0.25)
    q_h = bif.hopf_Q(0.363, 0.16, 0.25, 1.0, 2.2)
    q_hom = dyn.homoclinic_Q(0.363, 0.16, 0.25, 1.695, 1.705)
    bt = d.bt_point

    def curve_dist(curve):
        pts = [qc for qc in curve if qc != bt]  # only computed points
        return min(np.hypot(q - bt[0], c - bt[1]) for q, c in pts)

    d_sn = curve_dist(d.sn_curve)
    d_h = curve_dist(d.hopf_curve)
    d_hom = curve_dist(d.hom_curve)
    elapsed = time.time() - t0
    ok = (q_sn > q_h > q_hom and 1.6 < q_h < 1.8
          and max(d_sn, d_h, d_hom) < 1e-2)
    report(6, ok, f"at C=0.363: SN {q_sn:.4f} > H {q_h:.4f} > Hom "
                  f"{q_hom:.4f}; curve endpoint distances to BT "
                  f"{d_sn:.1e}/{d_h:.1e}/{d_hom:.1e}; {elapsed:.2f}s")
    assert elapsed < 600.0
    assert q_sn > q_h > q_hom
    assert 1.6 < q_h < 1.8
    assert max(d_sn, d_h, d_hom) < 1e-2


def test_criterion_7_bt_certificate():
    t0 = time.time()
    bt = bif.bt_point(0.16, 0.25)
    J = jacobian(Params(bt.C_star, 0.16, 0.25, bt.Q_star), bt.E_point)
    tr = abs(np.trace(J))
    det = abs(np.linalg.det(J))
    j_scale = np.abs(J).max()
    j2 = np.abs(J @ J).max() / max(1.0, j_scale ** 2)
    gs_nonzero = all(abs(g) > 0.0 for g in (bt.G1, bt.G2, bt.G3, bt.G4))
    elapsed = time.time() - t0
    ok = tr < 1e-8 and det < 1e-8 and j_scale > 0.0 and j2 < 1e-8 and gs_nonzero
    report(7, ok, f"(C*, Q*) = ({bt.C_star:.6f}, {bt.Q_star:.6f}); |tr| = "
                  f"{tr:.1e}, |det| = {det:.1e}, |J^2|_rel = {j2:.1e}, "
                  f"G1..G4 nonzero: {gs_nonzero}; {elapsed:.2f}s")
    assert elapsed < 1.0
    assert ok


def test_criterion_8_property_suites():
    # the bulk of the property suites run in the per-module test files
    # (equilibrium oracle grid, Jacobian finite differences, invariance,
    # serialization round trips); here the remaining Hopf consistency
    # items are exercised end to end
    t0 = time.time()

    samples = bif.hopf_curve_UV(0.363, 0.16)
    assert len(samples) >= 20
    step = max(1, len(samples) // 20)
    worst = 0.0
    for h in samples[::step][:20]:
        N, Q = bif.psi_map(0.363, h.M_hopf, h.U, h.V)
        lam = np.linalg.eigvals(
            jacobian(Params(0.363, h.M_hopf, N, Q), State(h.U, h.V)))
        worst = max(worst, float(np.abs(lam.real).max() / np.abs(lam).max()))
    ok_eigs = worst < 1e-9

    # l1 sign against simulation: perturb Q to the side where the focus is
    # unstable; a supercritical point traps the orbit on a small cycle, a
    # subcritical one lets it escape.  Samples are drawn away from the
    # Bautin point so the sign is unambiguous.
    curve = bif.hopf_curve_UV(0.3, 0.1)
    sup = [h for h in curve if h.l1 < -1e-3]
    sub = [h for h in curve if 2e-4 < h.l1 < 3.2e-4]
    checked = {"sup": 0, "sub": 0}
    ok_l1 = True
    for kind, pool in (("sup", sup), ("sub", sub)):
        for h in pool:
            if checked[kind] == 2:
                break
            N, Q = bif.psi_map(0.3, h.M_hopf, h.U, h.V)

            def tr_at(q):
                es = eq.interior_equilibria(Params(0.3, h.M_hopf, N, q))
                if not es or es[-1].multiplicity != 1:
                    return None
                J = jacobian(Params(0.3, h.M_hopf, N, q), es[-1].point)
                return J[0, 0] + J[1, 1]

            tp = tr_at(Q * 1.002)
            tm = tr_at(Q * 0.998)
            if tp is None or tm is None or tp * tm >= 0.0:
                continue
            q_unst = Q * 1.002 if tp > 0.0 else Q * 0.998
            p = Params(0.3, h.M_hopf, N, q_unst)
            e = eq.interior_equilibria(p)[-1].point
            traj = dyn.integrate(p, State(e.u + 1e-4, e.v), 4000.0, tol=1e-9)
            late = [abs(s.u - e.u) + abs(s.v - e.v)
                    for t, s in traj.samples if t > 2000.0]
            amplitude = max(late)
            if kind == "sup":
                ok_l1 &= amplitude < 0.05
            else:
                ok_l1 &= amplitude > 0.2
            checked[kind] += 1
    ok_counts = checked == {"sup": 2, "sub": 2}

    elapsed = time.time() - t0
    report(8, ok_eigs and ok_l1 and ok_counts,
           f"Hopf eigenvalue realness worst {worst:.1e} (< 1e-9); l1 sign "
           f"vs simulation on {checked['sup']}+{checked['sub']} samples: "
           f"{'ok' if ok_l1 else 'MISMATCH'}; {elapsed:.2f}s")
    assert ok_eigs
    assert ok_counts
    assert ok_l1
