import numpy as np
import pytest

from lactodyn.signals import (Control, DipControlSpec, Signal, SignalError,
                              TrapezoidSpec, average, make_dip_control,
                              make_trapezoid, signal_from_text, signal_to_text)


def dense_average(sig, T, n=1_000_000):
    """Composite trapezoid quadrature oracle on n subintervals."""
    ts = np.linspace(0.0, T, n + 1)
    return np.trapezoid(sig.eval(ts), ts) / T


def test_constant_eval():
    s = Signal.constant(0.5)
    for t in (0.0, 0.3, 7.0, 1e6):
        assert s.eval(t) == 0.5


def test_linear_segment_midpoint():
    s = Signal(np.array([0.0, 2.0]), np.array([1.0, 3.0]))
    assert s.eval(1.0) == 2.0


def test_hold_extrapolation():
    s = Signal(np.array([1.0, 2.0]), np.array([5.0, 7.0]))
    assert s.eval(0.0) == 5.0
    assert s.eval(10.0) == 7.0


def test_trapezoid_rise_value():
    spec = TrapezoidSpec(base=0.5, boost_fraction=0.5, t_start=1.0,
                         t_rise_end=2.0, t_fall_start=5.0, t_end=6.0)
    s = make_trapezoid(spec)
    # halfway up the rise; cross-check by dense sampling of the segment
    assert s.eval(1.5) == pytest.approx(0.625, abs=1e-15)
    ts = np.linspace(1.0, 2.0, 10001)
    assert np.allclose(s.eval(ts), 0.5 + 0.25 * (ts - 1.0), atol=1e-14)


def test_trapezoid_zero_boost_is_constant():
    s = make_trapezoid(TrapezoidSpec(0.5, 0.0, 1.0, 2.0, 5.0, 6.0))
    assert s.eval(3.0) == 0.5
    assert s.max_slope == 0.0


def test_trapezoid_plateau_value():
    s = make_trapezoid(TrapezoidSpec(0.5, 0.5, 1.0, 2.0, 5.0, 6.0))
    assert s.eval(3.5) == pytest.approx(0.75, abs=1e-15)


def test_trapezoid_rejects_bad_times():
    with pytest.raises(SignalError):
        TrapezoidSpec(0.5, 0.5, t_start=2.0, t_rise_end=1.0,
                      t_fall_start=5.0, t_end=6.0)
    with pytest.raises(SignalError):
        TrapezoidSpec(0.5, 0.5, t_start=1.0, t_rise_end=2.0,
                      t_fall_start=6.5, t_end=6.0)


def test_trapezoid_average_exact():
    s = make_trapezoid(TrapezoidSpec(0.5, 0.5, 1.0, 2.0, 5.0, 6.0))
    # plateau 3s + half of each 1s flank above base, boost 0.25
    expected = 0.5 * (1 + 0.5 * (3 + 0.5 + 0.5) / 10)
    got = average(s, 10.0)
    assert got == pytest.approx(0.6, abs=1e-15)
    assert got == pytest.approx(expected, abs=1e-15)
    assert abs(got - dense_average(s, 10.0)) / got < 1e-12


def test_ramp_average():
    s = Signal(np.array([0.0, 10.0]), np.array([0.0, 1.0]))
    assert average(s, 10.0) == pytest.approx(0.5, abs=1e-15)


def test_constant_average():
    assert average(Signal.constant(0.7), 3.0) == pytest.approx(0.7, abs=1e-15)


def _dip_spec():
    return DipControlSpec(j0=0.2, j_high=0.3, j_low=0.1,
                          t_rise_start=1.0, t_rise_end=2.0, t_fall_start=4.0,
                          t_fall_end=5.0, t_recover_start=7.0, t_recover_end=8.0)


def test_dip_control_extrema():
    s = make_dip_control(_dip_spec())
    ts = np.linspace(0.0, 10.0, 20001)
    vals = s.eval(ts)
    assert np.max(vals) == pytest.approx(0.3, abs=1e-15)
    assert np.min(vals) == pytest.approx(0.1, abs=1e-15)
    assert s.eval(0.0) == 0.2 and s.eval(10.0) == 0.2


def test_dip_control_rise_midpoint():
    s = make_dip_control(_dip_spec())
    assert s.eval(1.5) == pytest.approx(0.25, abs=1e-15)


def test_dip_control_rejections():
    with pytest.raises(SignalError):
        make_dip_control(DipControlSpec(0.2, 0.3, 0.25, 1, 2, 4, 5, 7, 8))
    with pytest.raises(SignalError):
        make_dip_control(DipControlSpec(0.2, 0.15, 0.1, 1, 2, 4, 5, 7, 8))
    with pytest.raises(SignalError):
        make_dip_control(DipControlSpec(0.2, 0.3, 0.1, 1, 2, 2, 5, 7, 8))


def test_dip_control_average_vs_quadrature():
    s = make_dip_control(_dip_spec())
    got = average(s, 10.0)
    assert abs(got - dense_average(s, 10.0)) / got < 1e-12


def test_periodicity_exact():
    s = Signal(np.array([0.0, 7.0, 9.0, 11.0, 13.0]),
               np.array([0.5, 0.5, 0.75, 0.75, 0.5]), period=20.0)
    # dyadic grid so that t + k*T is exactly representable: the shifted
    # argument then carries the full phase and evaluation must match bitwise
    ts = np.arange(1000) * 2.0 ** -6
    for k in (1, 2, 7):
        assert np.all(s.eval(ts) == s.eval(ts + k * 20.0))


def test_periodic_average_over_periods():
    s = Signal(np.array([0.0, 7.0, 9.0, 11.0, 13.0]),
               np.array([0.5, 0.5, 0.75, 0.75, 0.5]), period=20.0)
    one = s.integral(0.0, 20.0)
    assert s.integral(0.0, 100.0) == pytest.approx(5 * one, rel=1e-14)
    assert abs(average(s, 20.0) - dense_average(s, 20.0)) < 1e-12


def test_exact_averaging_corpus():
    corpus = [
        Signal.constant(0.4),
        Signal(np.array([0.0, 10.0]), np.array([0.0, 1.0])),
        make_trapezoid(TrapezoidSpec(0.5, 0.5, 1.0, 2.0, 5.0, 6.0)),
        make_dip_control(_dip_spec()),
        Signal(np.array([0.0, 3.0, 4.5, 9.0]), np.array([1.0, 2.0, 0.5, 1.0]),
               period=12.0),
    ]
    for sig in corpus:
        for T in (2.5, 10.0, 37.0):
            exact = average(sig, T)
            oracle = dense_average(sig, T)
            assert abs(exact - oracle) <= 1e-12 * max(1.0, abs(exact))


def test_lipschitz_continuity():
    rng = np.random.default_rng(7)
    s = make_dip_control(_dip_spec())
    lip = s.max_slope
    t = rng.uniform(0.0, 10.0, 500)
    h = rng.uniform(1e-6, 0.5, 500)
    assert np.all(np.abs(s.eval(t + h) - s.eval(t)) <= lip * h + 1e-12)


def test_strictly_increasing_required():
    with pytest.raises(SignalError):
        Signal(np.array([0.0, 1.0, 1.0]), np.array([1.0, 2.0, 3.0]))


def test_period_must_cover_span():
    with pytest.raises(SignalError):
        Signal(np.array([0.0, 30.0]), np.array([1.0, 2.0]), period=20.0)


def test_text_round_trip_bit_exact():
    s = Signal(np.array([0.0, 1/3, np.pi, 13.7]),
               np.array([0.1, 2/7, -1.5, 0.1]), period=29.1234567890123)
    back = signal_from_text(signal_to_text(s))
    assert np.array_equal(back.times, s.times)
    assert np.array_equal(back.values, s.values)
    assert back.period == s.period
    aper = Signal(np.array([0.5]), np.array([0.25]))
    back2 = signal_from_text(signal_to_text(aper))
    assert back2.period is None and back2.values[0] == 0.25


def test_signal_from_text_errors():
    with pytest.raises(SignalError):
        signal_from_text("# period=none\n1.0 2.0 3.0\n")


def test_control_coupling():
    c = Control(Signal.constant(0.2), coupling=-0.1, x_ref=2.0)
    assert c.value(0.0, 2.0) == pytest.approx(0.2)
    assert c.value(0.0, 3.0) == pytest.approx(0.1)
    with pytest.raises(SignalError):
        Control(Signal.constant(0.2), coupling=0.5)
