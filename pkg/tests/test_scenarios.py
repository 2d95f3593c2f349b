from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from lactodyn.dynamics import Params4D
from lactodyn.equilibria import equilibrium_2d
from lactodyn.scenarios import (default_scenario, equilibrium_at_mean_inputs,
                                instantaneous_target, run_buffering, run_dip,
                                run_sensitivity_4d)
from lactodyn.signals import Control, Signal, as_control

GOLDEN = Path(__file__).parent / "golden" / "dip_default.kv"


def test_default_scenario_names():
    assert default_scenario("dip").model == "2d"
    assert default_scenario("buffer").period == 20.0
    assert default_scenario("sensitivity").model == "4d"
    with pytest.raises(ValueError):
        default_scenario("nope")


def test_dip_full_protocol_ordering():
    rep, traj = run_dip(default_scenario("dip"))
    assert rep.detected
    assert rep.dip_depth >= 0.01 * rep.baseline_x
    assert rep.min_x < rep.baseline_x < rep.overshoot_max
    assert rep.t_min < rep.t_overshoot
    assert rep.returned_to_baseline
    assert rep.chase_fraction >= 0.95


def test_dip_golden_magnitudes():
    rep, _ = run_dip(default_scenario("dip"))
    got = {
        "baseline_x": rep.baseline_x, "min_x": rep.min_x, "t_min": rep.t_min,
        "dip_depth": rep.dip_depth, "overshoot_max": rep.overshoot_max,
        "t_overshoot": rep.t_overshoot,
    }
    want = {}
    for line in GOLDEN.read_text().splitlines():
        key, val = line.split("=")
        want[key.strip()] = float(val)
    for key, val in want.items():
        assert got[key] == pytest.approx(val, rel=1e-8), key


def test_dip_stimulus_only_no_overshoot():
    # constant control: x settles toward the smaller stationary value driven
    # by the stimulus alone and never overshoots the baseline
    base = default_scenario("dip")
    cfg = replace(base, controls=(as_control(0.2),), horizon=400.0)
    rep, traj = run_dip(cfg)
    assert rep.min_x < rep.baseline_x
    # direction agrees with the comparative statics of the stationary point
    lo = equilibrium_2d(0.2, 0.75, cfg.params).x0
    assert rep.min_x > lo - 1e-3
    assert np.max(traj.ys[:, 0]) <= rep.baseline_x + 1e-6


def test_dip_flat_inputs_no_detection():
    base = default_scenario("dip")
    cfg = replace(base, horizon=200.0,
                  stimulus=Signal.constant(0.5),
                  controls=(as_control(0.2),))
    rep, traj = run_dip(cfg)
    assert not rep.detected
    assert np.max(np.abs(traj.ys[:, 0] - rep.baseline_x)) <= 1e-8


def test_instantaneous_target_matches_closed_form():
    cfg = default_scenario("dip")
    p, F, J = cfg.params, cfg.stimulus, cfg.controls[0]
    x_t = instantaneous_target(30.0, p, F, J, 3.6)
    want = equilibrium_2d(J.signal.eval(30.0), F.eval(30.0), p).x0
    assert x_t == pytest.approx(want, rel=1e-12)


def test_equilibrium_at_mean_inputs_residual():
    cfg = default_scenario("buffer")
    p, F, J = cfg.params, cfg.stimulus, cfg.controls[0]
    s = equilibrium_at_mean_inputs(p, F, J, cfg.period)
    jbar = J.signal.mean(cfg.period)
    fbar = F.mean(cfg.period)
    flux = p.c * (s[0] / (p.k + s[0]) - s[1] / (p.kp + s[1]))
    assert abs(jbar + J.coupling * (s[0] - J.x_ref) - flux) <= 1e-10
    assert abs(fbar * (p.ell - s[1]) + flux) <= 1e-10


def test_buffering_locks_and_matches_shooting():
    buf, orbit, avg = run_buffering(default_scenario("buffer"))
    assert buf.locked
    assert orbit.defect <= 1e-10
    assert np.max(np.abs(orbit.floquet_multipliers)) < 1.0
    assert buf.fixed_point_gap <= 1e-6
    d = buf.displacements
    assert np.all(np.diff(d[3:]) < 0)
    assert d[-1] <= 1e-8
    # empirical contraction tracks the dominant multiplier
    rho = np.max(np.abs(orbit.floquet_multipliers))
    assert buf.contraction_ratio == pytest.approx(rho, rel=0.2)


def test_buffering_constant_inputs_locks_immediately():
    base = default_scenario("buffer")
    cfg = replace(base,
                  stimulus=Signal.constant(0.5, period=20.0),
                  controls=(Control(Signal.constant(0.2, period=20.0)),),
                  n_periods=6, horizon=120.0)
    buf, orbit, avg = run_buffering(cfg)
    rep = equilibrium_2d(0.2, 0.5, cfg.params)
    assert buf.displacements[0] <= 1e-9
    assert np.allclose(orbit.fixed_point, rep.point, rtol=1e-8)
    assert buf.locked


def test_sensitivity_table_all_match():
    rows = run_sensitivity_4d(default_scenario("sensitivity"))
    assert len(rows) == 4
    assert all(r.match for r in rows)
    assert [r.quantity for r in rows] == ["y0", "x0", "u0", "v0"]
    # two rows where the narrative's printed signs disagree with the
    # validated closed forms
    assert [r.paper_prose_sign == r.expected_sign for r in rows] == \
        [True, False, True, False]


def test_sensitivity_untestable_marked():
    base = default_scenario("sensitivity")
    # neuron channel at the brink of saturation (U0 ~ 0.994 at the base
    # point): the one-sided J1 probe tips it over and must be flagged
    cfg = replace(base, params=Params4D(c1=0.17))
    rows = run_sensitivity_4d(cfg, delta=1e-3)
    by_name = {r.quantity: r for r in rows}
    assert by_name["u0"].untestable
    assert not by_name["u0"].match
    assert by_name["y0"].match and by_name["x0"].match and by_name["v0"].match
