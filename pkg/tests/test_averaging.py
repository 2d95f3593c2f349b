import numpy as np
import pytest

from lactodyn.averaging import (A_of_t, averaged_rhs, check_condition_b,
                                check_condition_b_4d, find_averaged_root,
                                period_map, predict_periodic_orbit,
                                refine_periodic_orbit, report_to_json,
                                report_to_kv)
from lactodyn.dynamics import Params2D, Params4D
from lactodyn.equilibria import classify_2d, equilibrium_2d, equilibrium_4d
from lactodyn.errors import AnalysisError
from lactodyn.manifold import phi_2d
from lactodyn.scenarios import default_scenario
from lactodyn.signals import Control, Signal, as_control

P2 = Params2D()
T = 20.0

CFG_BUF = default_scenario("buffer")
F_BUF = CFG_BUF.stimulus
J_BUF = CFG_BUF.controls[0]


def slow_field(x, t, p, F, j_x, x_ref=0.0):
    """f(x, phi(x,t), t): control term plus exchanged flux on the manifold."""
    y = phi_2d(x, t, p, F)
    flux = p.c * (x / (p.k + x) - y / (p.kp + y))
    return j_x * (x - x_ref) - flux


def test_A_negative_without_feedback():
    rng = np.random.default_rng(41)
    for _ in range(200):
        x, t = rng.uniform(0.1, 8.0), rng.uniform(0.0, T)
        assert A_of_t(x, t, P2, F_BUF, j_x=0.0) < 0


def test_A_vanishes_for_flat_saturation():
    p = Params2D(k=1e8, c=1.0)
    val = A_of_t(1.0, 0.0, p, Signal.constant(0.5), j_x=0.0)
    assert val < 0
    assert abs(val) < 1e-7


def test_A_matches_chain_rule_oracle():
    # finite differences of f and g partials, combined as fx - fy*gx/gy
    rng = np.random.default_rng(43)
    h = 1e-6

    def g(x, y, t):
        return F_BUF.eval(t) * (P2.ell - y) + P2.c * (
            x / (P2.k + x) - y / (P2.kp + y))

    def f(x, y, t, j_x):
        return j_x * x - P2.c * (x / (P2.k + x) - y / (P2.kp + y))

    for _ in range(50):
        x, t = rng.uniform(0.3, 6.0), rng.uniform(0.0, T)
        j_x = -rng.uniform(0.0, 0.4)
        y = phi_2d(x, t, P2, F_BUF)
        fx = (f(x + h, y, t, j_x) - f(x - h, y, t, j_x)) / (2 * h)
        fy = (f(x, y + h, t, j_x) - f(x, y - h, t, j_x)) / (2 * h)
        gx = (g(x + h, y, t) - g(x - h, y, t)) / (2 * h)
        gy = (g(x, y + h, t) - g(x, y - h, t)) / (2 * h)
        oracle = P2.epsp * (fx - fy * gx / gy)
        got = A_of_t(x, t, P2, F_BUF, j_x=j_x)
        assert got == pytest.approx(oracle, rel=1e-5)


def test_condition_b_negative_integral_passes():
    val, ok = check_condition_b(3.6, T, P2, F_BUF, j_x=-0.2)
    assert val < 0 and ok


def test_condition_b_balanced_feedback_fails():
    # solve for the feedback offset that zeroes the integral, then verify
    # the check rejects it
    val0, _ = check_condition_b(3.6, T, P2, F_BUF, j_x=0.0)
    j_star = -val0 / (P2.epsp * T)     # A is epsp*(j_x - W): shift cancels
    val, ok = check_condition_b(3.6, T, P2, F_BUF, j_x=j_star)
    assert abs(val) < 1e-10
    assert not ok


def test_condition_b_linear_in_epsp():
    val1, _ = check_condition_b(3.6, T, P2, F_BUF, j_x=-0.1)
    p2 = Params2D(epsp=2 * P2.epsp)
    val2, _ = check_condition_b(3.6, T, p2, F_BUF, j_x=-0.1)
    assert val2 == pytest.approx(2 * val1, rel=1e-10)


def test_condition_b_4d_default_passes():
    rep = equilibrium_4d(0.1, 0.05, 0.05, 0.5, Params4D())
    slow = rep.point[:3]
    F = Signal(np.array([0.0, 7.0, 9.0, 11.0, 13.0]),
               np.array([0.5, 0.5, 0.75, 0.75, 0.5]), period=T)
    eigs, ok = check_condition_b_4d(slow, T, Params4D(), F)
    assert ok
    assert np.all(np.abs(eigs) < 1.0)


def test_averaged_rhs_constant_reduction():
    F = Signal.constant(0.5, period=T)
    J = Signal.constant(0.2, period=T)
    rep = equilibrium_2d(0.2, 0.5, P2)
    assert averaged_rhs(rep.x0, T, P2, F, J) == pytest.approx(0.0, abs=1e-12)
    # fbar(x) = J + F*(ell - phi(x)) away from the root
    for x in (1.0, 5.0):
        want = 0.2 + 0.5 * (P2.ell - phi_2d(x, 0.0, P2, F))
        assert averaged_rhs(x, T, P2, F, J) == pytest.approx(want, rel=1e-12)


def test_averaged_rhs_vs_dense_quadrature():
    # brute composite-midpoint oracle on 1e6 points
    x = 3.1
    n = 1_000_000
    ts = (np.arange(n) + 0.5) * (T / n)
    fphi = np.array([F_BUF.eval(t) * phi_2d(x, t, P2, F_BUF) for t in ts[::10]])
    ts10 = ts[::10]
    oracle = (J_BUF.signal.mean(T) + J_BUF.coupling * (x - J_BUF.x_ref)
              + P2.ell * F_BUF.mean(T) - np.mean(fphi))
    got = averaged_rhs(x, T, P2, F_BUF, J_BUF)
    assert got == pytest.approx(oracle, abs=2e-9)


def test_find_root_constant_reduction():
    F = Signal.constant(0.5, period=T)
    J = Signal.constant(0.2, period=T)
    rep = equilibrium_2d(0.2, 0.5, P2)
    x0, margin = find_averaged_root(T, P2, F, J, (0.5, 20.0))
    assert x0 == pytest.approx(rep.x0, abs=1e-8)
    assert margin > 1e-8


def test_find_root_default_scenario_single_bracket():
    x0, margin = find_averaged_root(T, P2, F_BUF, J_BUF, (1e-2, 50.0))
    assert 3.0 < x0 < 4.5
    assert margin > 0.1


def test_find_root_no_sign_change():
    with pytest.raises(AnalysisError, match="no sign change"):
        find_averaged_root(T, P2, F_BUF, J_BUF, (8.0, 20.0))


def test_predict_constant_reduction():
    F = Signal.constant(0.5, period=T)
    J = Signal.constant(0.2, period=T)
    rep = equilibrium_2d(0.2, 0.5, P2)
    out = predict_periodic_orbit(T, P2, F, J, search=(0.5, 20.0))
    assert np.allclose(out.predicted_initial, rep.point, rtol=1e-8)
    assert out.defect <= 1e-9
    assert out.condition_b_integral < 0
    assert out.mu_bound > 0


def test_refine_constant_inputs_multipliers():
    F = Signal.constant(0.5, period=T)
    J = Signal.constant(0.2, period=T)
    rep = equilibrium_2d(0.2, 0.5, P2)
    orbit = refine_periodic_orbit(rep.point * 1.02, T, P2, F, J)
    assert np.allclose(orbit.fixed_point, rep.point, rtol=1e-9)
    eigs, _ = classify_2d(rep.point, P2, 0.0, 0.5)
    want = np.exp(np.sort(eigs.real) * T)     # fast one underflows to 0
    got = np.sort(np.abs(orbit.floquet_multipliers))
    assert got[0] == pytest.approx(want[0], abs=1e-12)
    assert got[1] == pytest.approx(want[1], rel=1e-6)
    assert orbit.stable


def test_refine_default_scenario():
    pred = predict_periodic_orbit(T, P2, F_BUF, J_BUF, search=(1e-2, 30.0))
    orbit = refine_periodic_orbit(pred.predicted_initial, T, P2, F_BUF, J_BUF)
    assert orbit.defect <= 1e-10
    assert np.max(np.abs(orbit.floquet_multipliers)) < 1.0
    # perturbed start lands on the same fixed point
    orbit2 = refine_periodic_orbit(pred.predicted_initial * 1.1, T, P2,
                                   F_BUF, J_BUF)
    assert np.allclose(orbit2.fixed_point, orbit.fixed_point, atol=1e-8)


def test_refine_fd_monodromy_agrees():
    pred = predict_periodic_orbit(T, P2, F_BUF, J_BUF, search=(1e-2, 30.0))
    var = refine_periodic_orbit(pred.predicted_initial, T, P2, F_BUF, J_BUF,
                                monodromy="variational")
    fd = refine_periodic_orbit(pred.predicted_initial, T, P2, F_BUF, J_BUF,
                               monodromy="fd")
    assert np.allclose(var.fixed_point, fd.fixed_point, atol=1e-9)
    assert np.max(np.abs(var.floquet_multipliers)) == pytest.approx(
        np.max(np.abs(fd.floquet_multipliers)), rel=1e-4)


def test_geometric_convergence_of_period_map():
    pred = predict_periodic_orbit(T, P2, F_BUF, J_BUF, search=(1e-2, 30.0))
    orbit = refine_periodic_orbit(pred.predicted_initial, T, P2, F_BUF, J_BUF)
    rho = np.max(np.abs(orbit.floquet_multipliers))
    s = pred.predicted_initial.copy()
    gaps = [np.linalg.norm(s - orbit.fixed_point)]
    for _ in range(10):
        s = period_map(s, T, P2, F_BUF, J_BUF)
        gaps.append(np.linalg.norm(s - orbit.fixed_point))
    for a, b in zip(gaps, gaps[1:]):
        if a < 1e-11:      # at the integration noise floor
            break
        assert b / a <= rho + 0.1


def test_slow_multiplier_approximates_exp_integral_A():
    # as eps -> 0 the slow Floquet multiplier approaches exp(int A dt)
    eps = 1e-3
    p = Params2D(eps=eps)
    pred = predict_periodic_orbit(T, p, F_BUF, J_BUF, search=(1e-2, 30.0))
    orbit = refine_periodic_orbit(pred.predicted_initial, T, p, F_BUF, J_BUF)
    b_int, _ = check_condition_b(pred.x0_avg, T, p, F_BUF, j_x=J_BUF.coupling)
    slow = np.max(np.abs(orbit.floquet_multipliers))
    assert slow == pytest.approx(np.exp(b_int), rel=0.2)


def test_report_serialization():
    pred = predict_periodic_orbit(T, P2, F_BUF, J_BUF, search=(1e-2, 30.0))
    kv = report_to_kv(pred)
    assert "x0_avg =" in kv and "condition_b_integral =" in kv
    js = report_to_json(pred)
    assert '"mu_bound"' in js
    orbit = refine_periodic_orbit(pred.predicted_initial, T, P2, F_BUF, J_BUF)
    kv2 = report_to_kv(orbit)
    assert "defect =" in kv2 and "multiplier_abs_0 =" in kv2
