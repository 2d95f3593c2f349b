"""Fast-slow compartmental lactate kinetics.

A numerical library for two controlled fast-slow models of brain lactate
exchange (two and four compartments), with closed-form equilibria, critical
manifold diagnostics, averaging of periodic forcing, shooting refinement of
periodic orbits, and canned experiment scenarios (stimulus dip, periodic
buffering, quasi-stationary sensitivity).
"""

from .dynamics import Params2D, Params4D
from .equilibria import EquilibriumReport, equilibrium_2d, equilibrium_4d
from .integrate import IntegratorConfig, Trajectory, integrate
from .signals import Control, Signal

__version__ = "0.1.0"

__all__ = [
    "Params2D",
    "Params4D",
    "EquilibriumReport",
    "equilibrium_2d",
    "equilibrium_4d",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "Control",
    "Signal",
    "__version__",
]
