"""Vector fields, fast-equation nullclines, and analytic Jacobians.

Two compartmental lactate models are implemented:

* the two-compartment system in (x, y) = (extracellular, capillary), with a
  slow control J(t, x), a stimulus F(t), and one saturating exchange flux
  across the blood-brain barrier;
* the four-compartment system in (x, u, v, y) = (extracellular, neuron,
  astrocyte, capillary), with controls J0, J1, J2 and exchange fluxes
  neuron<->ECS, astrocyte<->ECS, ECS<->capillary, astrocyte<->capillary.

All right-hand sides are stored in explicit form (the fast equation is
divided through by its small parameter), so a single integrator serves both
systems.  Rate arguments may be plain numbers, Signals, or Controls.
"""

from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from .errors import PoleError
from .signals import Control, as_control

__all__ = [
    "Params2D",
    "Params4D",
    "cotransport",
    "rhs_2d",
    "rhs_4d",
    "jacobian_2d",
    "jacobian_4d",
    "fast_nullcline_g_2d",
    "fast_nullcline_g_4d",
]

# pole guard: reject concentrations within this relative distance of -k
POLE_RTOL = 1e-12


@dataclass(frozen=True)
class Params2D:
    """Rate constants of the two-compartment model.

    c: maximal exchange rate (mM/s); k, kp: half-saturation constants (mM)
    on the extracellular and capillary sides; ell: capillary supply level
    (mM); eps, epsp: time-scale separations of the fast (capillary) and slow
    (extracellular) equations.
    """

    c: float = 1.0
    k: float = 1.0
    kp: float = 1.0
    ell: float = 1.0
    eps: float = 1e-2
    epsp: float = 1e-1

    def __post_init__(self):
        for name in ("c", "k", "kp", "ell", "eps", "epsp"):
            if not getattr(self, name) > 0:
                raise ValueError(f"parameter {name} must be strictly positive")
        if self.eps > 0.5 or self.epsp > 0.5:
            warnings.warn(
                "time-scale separations above 0.5: fast-slow asymptotics dubious",
                stacklevel=2,
            )


@dataclass(frozen=True)
class Params4D(Params2D):
    """Two-compartment constants plus the neuron/astrocyte channels.

    c1, c2, ca: maximal exchange rates neuron<->ECS, astrocyte<->ECS,
    astrocyte<->capillary; kn, ka: neuron and astrocyte half-saturation
    constants.
    """

    c1: float = 1.0
    c2: float = 1.0
    ca: float = 1.0
    kn: float = 1.0
    ka: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        for name in ("c1", "c2", "ca", "kn", "ka"):
            if not getattr(self, name) > 0:
                raise ValueError(f"parameter {name} must be strictly positive")


def _sat(a: float, ka_: float) -> float:
    """Saturating fraction a/(ka_+a) with a relative pole guard."""
    if abs(a + ka_) < POLE_RTOL * ka_:
        raise PoleError(f"concentration {a!r} within pole guard of -{ka_!r}")
    return a / (ka_ + a)


def cotransport(a: float, b: float, cmax: float, ka_: float, kb_: float) -> float:
    """Saturating exchange flux cmax * (a/(ka_+a) - b/(kb_+b)).

    Antisymmetric under swapping the two sides: cotransport(a, b, ., ka_, kb_)
    equals -cotransport(b, a, ., kb_, ka_).
    """
    return cmax * (_sat(a, ka_) - _sat(b, kb_))


def rhs_2d(t: float, s, p: Params2D, J, F) -> np.ndarray:
    """Explicit-form right-hand side of the two-compartment system.

    dx/dt = epsp * (J(t, x) - flux(x -> y))
    dy/dt = (F(t) * (ell - y) + flux(x -> y)) / eps
    """
    x, y = s
    flux = cotransport(x, y, p.c, p.k, p.kp)
    jv = J.value(t, x) if isinstance(J, Control) else as_control(J).value(t, x)
    fv = F.eval(t) if hasattr(F, "eval") else float(F)
    return np.array([
        p.epsp * (jv - flux),
        (fv * (p.ell - y) + flux) / p.eps,
    ])


def rhs_4d(t: float, s, p: Params4D, J0, J1, J2, F) -> np.ndarray:
    """Explicit-form right-hand side of the four-compartment system."""
    x, u, v, y = s
    J0 = as_control(J0); J1 = as_control(J1); J2 = as_control(J2)
    fv = F.eval(t) if hasattr(F, "eval") else float(F)
    f_ux = cotransport(u, x, p.c1, p.kn, p.k)   # neuron -> ECS
    f_vx = cotransport(v, x, p.c2, p.ka, p.k)   # astrocyte -> ECS
    f_xy = cotransport(x, y, p.c, p.k, p.kp)    # ECS -> capillary
    f_vy = cotransport(v, y, p.ca, p.ka, p.kp)  # astrocyte -> capillary
    return np.array([
        p.epsp * (J0.value(t, x) + f_ux + f_vx - f_xy),
        p.epsp * (J1.value(t, x) - f_ux),
        p.epsp * (J2.value(t, x) - f_vx - f_vy),
        (fv * (p.ell - y) + f_xy + f_vy) / p.eps,
    ])


def _dsat(a: float, ka_: float) -> float:
    """d/da of a/(ka_+a)."""
    if abs(a + ka_) < POLE_RTOL * ka_:
        raise PoleError(f"concentration {a!r} within pole guard of -{ka_!r}")
    return ka_ / (ka_ + a) ** 2


def jacobian_2d(s, p: Params2D, j_x: float = 0.0, f_val: float | None = None,
                t: float | None = None, F=None) -> np.ndarray:
    """Analytic Jacobian of rhs_2d at state ``s``.

    The stimulus enters only the fast row; pass either its frozen value
    ``f_val`` or a Signal ``F`` together with the time ``t``.  ``j_x`` is the
    state-feedback coefficient of the control.
    """
    x, y = s
    if f_val is None:
        f_val = F.eval(t)
    a_x = p.c * _dsat(x, p.k)    # d flux / dx
    b_y = p.c * _dsat(y, p.kp)   # d flux / d(-y)
    return np.array([
        [p.epsp * (j_x - a_x), p.epsp * b_y],
        [a_x / p.eps, -(f_val + b_y) / p.eps],
    ])


def jacobian_4d(s, p: Params4D, f_val: float,
                j0_x: float = 0.0, j1_x: float = 0.0, j2_x: float = 0.0) -> np.ndarray:
    """Analytic Jacobian of rhs_4d at state ``s`` with frozen stimulus value.

    Control state feedback acts through the extracellular concentration only
    (coefficients ``j*_x``), matching the declared control family.
    """
    x, u, v, y = s
    dx = _dsat(x, p.k)
    du = _dsat(u, p.kn)
    dv = _dsat(v, p.ka)
    dy = _dsat(y, p.kp)
    ep = p.epsp
    row_x = [ep * (j0_x - (p.c1 + p.c2 + p.c) * dx), ep * p.c1 * du,
             ep * p.c2 * dv, ep * p.c * dy]
    row_u = [ep * (j1_x + p.c1 * dx), -ep * p.c1 * du, 0.0, 0.0]
    row_v = [ep * (j2_x + p.c2 * dx), 0.0, -ep * (p.c2 + p.ca) * dv, ep * p.ca * dy]
    row_y = [p.c * dx / p.eps, 0.0, p.ca * dv / p.eps,
             -(f_val + (p.c + p.ca) * dy) / p.eps]
    return np.array([row_x, row_u, row_v, row_y])


def fast_nullcline_g_2d(x: float, y: float, t: float, p: Params2D, F) -> float:
    """Fast-equation numerator g(x, y, t) = F(t)(ell - y) + flux(x -> y).

    Its zero set is the critical curve; g < 0 above the curve, g > 0 below.
    """
    fv = F.eval(t) if hasattr(F, "eval") else float(F)
    return fv * (p.ell - y) + cotransport(x, y, p.c, p.k, p.kp)


def fast_nullcline_g_4d(x: float, v: float, y: float, t: float, p: Params4D, F) -> float:
    """Fast-equation numerator of the four-compartment system."""
    fv = F.eval(t) if hasattr(F, "eval") else float(F)
    return (fv * (p.ell - y) + cotransport(x, y, p.c, p.k, p.kp)
            + cotransport(v, y, p.ca, p.ka, p.kp))
