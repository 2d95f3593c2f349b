"""Piecewise-linear, optionally periodic scalar signals.

All time-dependent inputs of the kinetic models (the stimulus F(t) and the
control levels J(t)) are continuous piecewise-linear functions of time,
optionally repeated with a fixed period.  Averages and integrals are computed
in closed form from the breakpoints, so there is no quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Signal",
    "Control",
    "TrapezoidSpec",
    "DipControlSpec",
    "make_trapezoid",
    "make_dip_control",
    "average",
    "signal_to_text",
    "signal_from_text",
]


class SignalError(ValueError):
    """Invalid signal construction (non-monotone times, bad period, ...)."""


@dataclass(frozen=True)
class Signal:
    """Continuous piecewise-linear signal with hold-value extrapolation.

    Between breakpoints the value is linearly interpolated; before the first
    breakpoint the first value is held, after the last the last value is held.
    If ``period`` is set, evaluation wraps modulo the period (anchored at the
    first breakpoint time), so ``eval(t) == eval(t + k*period)`` exactly.

    Instances are immutable and safe to share across workers.
    """

    times: np.ndarray
    values: np.ndarray
    period: float | None = None
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise SignalError("times and values must be 1-d arrays of equal nonzero length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise SignalError("breakpoints must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise SignalError("breakpoint times must be strictly increasing")
        if self.period is not None:
            p = float(self.period)
            if not p > 0:
                raise SignalError("period must be positive")
            if t[-1] - t[0] > p:
                raise SignalError("breakpoint span exceeds the period")
            object.__setattr__(self, "period", p)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        # cumulative integral from times[0] to each breakpoint
        cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))]
        )
        object.__setattr__(self, "_cum", cum)

    @staticmethod
    def constant(value: float, period: float | None = None) -> "Signal":
        return Signal(np.array([0.0]), np.array([float(value)]), period)

    def eval(self, t):
        """Evaluate at scalar or array ``t``."""
        t = np.asarray(t, dtype=float)
        if self.period is not None:
            t = self.times[0] + np.mod(t - self.times[0], self.period)
        out = np.interp(t, self.times, self.values)
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def _antiderivative(self, t: float) -> float:
        """Integral of the (non-periodic) extension from times[0] to t."""
        tb, vb, cum = self.times, self.values, self._cum
        if t <= tb[0]:
            return vb[0] * (t - tb[0])
        if t >= tb[-1]:
            return cum[-1] + vb[-1] * (t - tb[-1])
        i = int(np.searchsorted(tb, t, side="right") - 1)
        dt = t - tb[i]
        slope = (vb[i + 1] - vb[i]) / (tb[i + 1] - tb[i])
        return cum[i] + vb[i] * dt + 0.5 * slope * dt * dt

    def integral(self, a: float, b: float) -> float:
        """Exact integral of the signal over [a, b]."""
        if self.period is None:
            return self._antiderivative(b) - self._antiderivative(a)
        p = self.period
        t0 = self.times[0]
        base = self._antiderivative(t0 + p)  # one full period

        def prim(t):
            n, tau = divmod(t - t0, p)
            return n * base + self._antiderivative(t0 + tau)

        return prim(b) - prim(a)

    def mean(self, window: float) -> float:
        """Average value over [0, window]."""
        if not window > 0:
            raise SignalError("averaging window must be positive")
        return self.integral(0.0, window) / window

    @property
    def max_slope(self) -> float:
        """Lipschitz constant: the largest absolute segment slope."""
        if self.times.size < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.times))))

    def corner_times(self, a: float, b: float) -> np.ndarray:
        """All breakpoint images in [a, b], where the signal may have corners.

        For periodic signals the breakpoints (and the wrap point) are
        replicated across every period intersecting the window.
        """
        tb = self.times
        if self.period is None:
            inside = tb[(tb >= a) & (tb <= b)]
            return np.asarray(inside, dtype=float)
        p = self.period
        anchors = np.unique(np.concatenate([tb, [tb[0] + p]]))
        k0 = np.floor((a - anchors[-1]) / p)
        k1 = np.ceil((b - anchors[0]) / p)
        ks = np.arange(k0, k1 + 1)
        allt = (anchors[None, :] + ks[:, None] * p).ravel()
        allt = np.unique(allt[(allt >= a) & (allt <= b)])
        return allt


@dataclass(frozen=True)
class Control:
    """Control level with optional affine state feedback.

    value(t, x) = signal(t) + coupling * (x - x_ref), with coupling <= 0 so
    that raising the extracellular level never increases the input.
    """

    signal: Signal
    coupling: float = 0.0
    x_ref: float = 0.0

    def __post_init__(self):
        if self.coupling > 0:
            raise SignalError("state coupling must be <= 0")

    def value(self, t, x):
        return self.signal.eval(t) + self.coupling * (x - self.x_ref)

    def frozen(self, t: float, x: float) -> float:
        return self.value(t, x)


def as_control(sig) -> Control:
    """Wrap a plain Signal (or number) as a Control with zero coupling."""
    if isinstance(sig, Control):
        return sig
    if isinstance(sig, Signal):
        return Control(sig)
    return Control(Signal.constant(float(sig)))


@dataclass(frozen=True)
class TrapezoidSpec:
    """Trapezoidal stimulus: base level, boosted plateau, linear flanks.

    The plateau value is (1 + boost_fraction) * base.
    """

    base: float
    boost_fraction: float
    t_start: float
    t_rise_end: float
    t_fall_start: float
    t_end: float
    period: float | None = None

    def __post_init__(self):
        if not self.base > 0:
            raise SignalError("base level must be positive")
        if self.boost_fraction < 0:
            raise SignalError("boost fraction must be >= 0")
        if not (self.t_start < self.t_rise_end <= self.t_fall_start < self.t_end):
            raise SignalError(
                "trapezoid times must satisfy t_start < t_rise_end <= t_fall_start < t_end"
            )


def make_trapezoid(spec: TrapezoidSpec) -> Signal:
    """Build the trapezoidal signal described by ``spec``."""
    if spec.boost_fraction == 0.0:
        return Signal.constant(spec.base, spec.period)
    peak = (1.0 + spec.boost_fraction) * spec.base
    ts = [spec.t_start, spec.t_rise_end, spec.t_fall_start, spec.t_end]
    vs = [spec.base, peak, peak, spec.base]
    if spec.t_rise_end == spec.t_fall_start:  # degenerate plateau -> triangle
        ts = [spec.t_start, spec.t_rise_end, spec.t_end]
        vs = [spec.base, peak, spec.base]
    return Signal(np.array(ts), np.array(vs), spec.period)


@dataclass(frozen=True)
class DipControlSpec:
    """Control protocol: baseline -> raised hold -> fall below baseline -> recover.

    Levels must bracket the baseline (j_high > j0 > j_low); the resulting
    signal starts and ends at j0.
    """

    j0: float
    j_high: float
    j_low: float
    t_rise_start: float
    t_rise_end: float
    t_fall_start: float
    t_fall_end: float
    t_recover_start: float
    t_recover_end: float

    def __post_init__(self):
        if self.j_high <= self.j0:
            raise SignalError("raised level must exceed the baseline (j_high > j0)")
        if self.j_low >= self.j0:
            raise SignalError("lowered level must undershoot the baseline (j_low < j0)")
        ts = (self.t_rise_start, self.t_rise_end, self.t_fall_start,
              self.t_fall_end, self.t_recover_start, self.t_recover_end)
        if not all(a < b for a, b in zip(ts, ts[1:])):
            raise SignalError("protocol transition times must be strictly increasing")


def make_dip_control(spec: DipControlSpec) -> Signal:
    """Build the piecewise-linear control j0 -> j_high -> j_low -> j0."""
    ts = np.array([spec.t_rise_start, spec.t_rise_end, spec.t_fall_start,
                   spec.t_fall_end, spec.t_recover_start, spec.t_recover_end])
    vs = np.array([spec.j0, spec.j_high, spec.j_high,
                   spec.j_low, spec.j_low, spec.j0])
    return Signal(ts, vs)


def average(signal: Signal, window: float) -> float:
    """Exact average of ``signal`` over [0, window]."""
    return signal.mean(window)


def signal_to_text(sig: Signal) -> str:
    """Serialize to plain text: a period header plus one ``t value`` pair per line."""
    head = "none" if sig.period is None else format(sig.period, ".17g")
    lines = [f"# period={head}"]
    for t, v in zip(sig.times, sig.values):
        lines.append(f"{t:.17g} {v:.17g}")
    return "\n".join(lines) + "\n"


def signal_from_text(text: str) -> Signal:
    """Parse the format written by :func:`signal_to_text`."""
    period = None
    ts: list[float] = []
    vs: list[float] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("period="):
                val = body.split("=", 1)[1].strip()
                period = None if val == "none" else float(val)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SignalError(f"line {ln}: expected 't value' pair, got {raw!r}")
        ts.append(float(parts[0]))
        vs.append(float(parts[1]))
    return Signal(np.array(ts), np.array(vs), period)
