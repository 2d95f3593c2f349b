"""Stationary points of the frozen-input systems, in closed form and by Newton.

For frozen inputs both systems admit a unique positive stationary point with
explicit formulas.  Writing S = J0+J1+J2, D = c*c2 + c*ca + c2*ca and
Y0 = y0/(kp+y0), the four-compartment point is

    y0 = ell + S/F
    X0 = Y0 + ((c2+ca)*S - ca*J2) / D        (extracellular fraction)
    V0 = Y0 + (c2*S + c*J2) / D              (astrocyte fraction)
    U0 = X0 + J1/c1                          (neuron fraction)

with x0 = k*X0/(1-X0) and likewise for u0, v0.  Each fraction must lie in
(0, 1) for a positive equilibrium; the first violated constraint is reported
verbatim.  A damped multi-start Newton solver provides an independent oracle
for these formulas, and the residual of the stationarity equations (in rate
units: slow rows divided by epsp, fast row multiplied by eps) is the ground
truth accepted for either path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Params2D, Params4D, cotransport, jacobian_4d, _dsat
from .errors import AnalysisError, InfeasibleEquilibrium

__all__ = [
    "EquilibriumReport",
    "equilibrium_2d",
    "classify_2d",
    "equilibrium_4d",
    "newton_equilibrium",
    "stationarity_2d",
    "stationarity_4d",
    "report_to_kv",
    "report_to_csv",
]


@dataclass(frozen=True)
class EquilibriumReport:
    point: np.ndarray              # (x, y) or (x, u, v, y)
    residual_norm: float
    eigenvalues: np.ndarray        # complex, of the true Jacobian
    classification: str            # node | focus | saddle | degenerate
    feasible: bool

    @property
    def x0(self) -> float:
        return float(self.point[0])

    @property
    def y0(self) -> float:
        return float(self.point[-1])


def stationarity_2d(p: Params2D, J: float, F: float):
    """Residual and Jacobian of the balanced stationarity system.

    Returns callables ``fun(s)`` and ``jac(s)`` for the bracket equations
    [J - flux, F(ell-y) + flux]; their zeros are the stationary points of the
    full vector field.
    """

    def fun(s):
        x, y = s
        flux = cotransport(x, y, p.c, p.k, p.kp)
        return np.array([J - flux, F * (p.ell - y) + flux])

    def jac(s):
        x, y = s
        a = p.c * _dsat(x, p.k)
        b = p.c * _dsat(y, p.kp)
        return np.array([[-a, b], [a, -(F + b)]])

    return fun, jac


def stationarity_4d(p: Params4D, J0: float, J1: float, J2: float, F: float):
    """Balanced stationarity residual/Jacobian of the four-compartment system."""

    def fun(s):
        x, u, v, y = s
        f_ux = cotransport(u, x, p.c1, p.kn, p.k)
        f_vx = cotransport(v, x, p.c2, p.ka, p.k)
        f_xy = cotransport(x, y, p.c, p.k, p.kp)
        f_vy = cotransport(v, y, p.ca, p.ka, p.kp)
        return np.array([
            J0 + f_ux + f_vx - f_xy,
            J1 - f_ux,
            J2 - f_vx - f_vy,
            F * (p.ell - y) + f_xy + f_vy,
        ])

    def jac(s):
        x, u, v, y = s
        dx = _dsat(x, p.k)
        du = _dsat(u, p.kn)
        dv = _dsat(v, p.ka)
        dy = _dsat(y, p.kp)
        return np.array([
            [-(p.c1 + p.c2 + p.c) * dx, p.c1 * du, p.c2 * dv, p.c * dy],
            [p.c1 * dx, -p.c1 * du, 0.0, 0.0],
            [p.c2 * dx, 0.0, -(p.c2 + p.ca) * dv, p.ca * dy],
            [p.c * dx, 0.0, p.ca * dv, -(F + (p.c + p.ca) * dy)],
        ])

    return fun, jac


def _classify(eigs: np.ndarray, scale: float) -> str:
    tol = 1e-12 * max(scale, 1.0)
    if np.any(np.abs(eigs.imag) > tol):
        return "focus"
    re = eigs.real
    if np.all(re < -tol) or np.all(re > tol):
        return "degenerate" if np.min(np.abs(np.diff(np.sort(re)))) <= tol else "node"
    if np.any(re > tol) and np.any(re < -tol):
        return "saddle"
    return "degenerate"


def classify_2d(point, p: Params2D, j_x: float, F: float):
    """Eigenvalues and type of the stationary point of the 2-compartment flow.

    The quadratic for the eigenvalues is solved in closed form from the trace
    and determinant of the analytic Jacobian (including the eps, epsp and
    state-feedback factors).
    """
    x, y = point
    a = p.epsp * (p.c * _dsat(x, p.k) - j_x)   # -d(dx/dt)/dx
    b = p.c * _dsat(y, p.kp)
    tr = -(a + (b + F) / p.eps)
    det = (a * F - p.epsp * j_x * b) / p.eps
    disc = tr * tr - 4.0 * det
    if disc >= 0:
        rt = np.sqrt(disc)
        eigs = np.array([(tr + rt) / 2, (tr - rt) / 2], dtype=complex)
    else:
        rt = np.sqrt(-disc)
        eigs = np.array([complex(tr / 2, rt / 2), complex(tr / 2, -rt / 2)])
    return eigs, _classify(eigs, abs(tr))


def equilibrium_2d(J: float, F: float, p: Params2D, j_x: float = 0.0) -> EquilibriumReport:
    """Closed-form stationary point of the frozen two-compartment system.

    Raises InfeasibleEquilibrium (naming the violated inequality) when the
    saturation budget is exhausted.
    """
    if not F > 0:
        raise ValueError("require F > 0")
    y0 = p.ell + J / F
    r = J / p.c + y0 / (p.kp + y0)
    if r >= 1.0:
        raise InfeasibleEquilibrium("J/C + y0/(k'+y0) >= 1")
    x0 = p.k * r / (1.0 - r)
    point = np.array([x0, y0])
    fun, _ = stationarity_2d(p, J, F)
    res = float(np.linalg.norm(fun(point)))
    eigs, cls = classify_2d(point, p, j_x, F)
    return EquilibriumReport(point, res, eigs, cls, feasible=bool(x0 >= 0))


def equilibrium_4d(J0: float, J1: float, J2: float, F: float,
                   p: Params4D) -> EquilibriumReport:
    """Closed-form stationary point of the frozen four-compartment system."""
    if not F > 0:
        raise ValueError("require F > 0")
    S = J0 + J1 + J2
    y0 = p.ell + S / F
    Y0 = y0 / (p.kp + y0)
    D = p.c * p.c2 + p.c * p.ca + p.c2 * p.ca
    X0 = Y0 + ((p.c2 + p.ca) * S - p.ca * J2) / D
    V0 = Y0 + (p.c2 * S + p.c * J2) / D
    U0 = X0 + J1 / p.c1
    for name, frac, expr in (
        ("x", X0, "((c2+ca)S - ca*J2)/D + y0/(k'+y0)"),
        ("u", U0, "J1/c1 + ((c2+ca)S - ca*J2)/D + y0/(k'+y0)"),
        ("v", V0, "(c2*S + c*J2)/D + y0/(k'+y0)"),
    ):
        if frac >= 1.0:
            raise InfeasibleEquilibrium(f"{expr} >= 1")
        if frac <= 0.0:
            raise InfeasibleEquilibrium(f"{expr} <= 0")
    point = np.array([
        p.k * X0 / (1.0 - X0),
        p.kn * U0 / (1.0 - U0),
        p.ka * V0 / (1.0 - V0),
        y0,
    ])
    fun, _ = stationarity_4d(p, J0, J1, J2, F)
    res = float(np.linalg.norm(fun(point)))
    eigs = np.linalg.eigvals(jacobian_4d(point, p, F))
    return EquilibriumReport(point, res, eigs, _classify(eigs, float(np.max(np.abs(eigs)))),
                             feasible=True)


def newton_equilibrium(fun, jac, guess, tol: float = 1e-12,
                       max_iter: int = 200) -> np.ndarray:
    """Damped Newton on ``fun`` with analytic Jacobian ``jac``.

    Returns a state with ``|fun| <= tol``; raises AnalysisError on a singular
    Jacobian or when the iteration budget is exhausted.  Never reports success
    with a residual above ``tol``.
    """
    y = np.asarray(guess, dtype=float).copy()
    g = fun(y)
    gn = np.linalg.norm(g)
    for _ in range(max_iter):
        if gn <= tol:
            return y
        try:
            delta = np.linalg.solve(jac(y), -g)
        except np.linalg.LinAlgError as exc:
            raise AnalysisError(f"singular Jacobian in Newton iteration: {exc}") from exc
        step = 1.0
        for _ in range(40):
            y_try = y + step * delta
            try:
                g_try = fun(y_try)
                ok = np.all(np.isfinite(g_try))
            except Exception:
                ok = False
            if ok and np.linalg.norm(g_try) < gn:
                break
            step *= 0.5
        else:
            raise AnalysisError("Newton damping failed to reduce the residual")
        y, g, gn = y_try, g_try, float(np.linalg.norm(g_try))
    if gn <= tol:
        return y
    raise AnalysisError(f"Newton did not converge in {max_iter} iterations "
                        f"(residual {gn:.3e})")


def report_to_kv(report: EquilibriumReport) -> str:
    """Flat ``key = value`` serialization of an equilibrium report."""
    lines = []
    names = ["x0", "y0"] if report.point.size == 2 else ["x0", "u0", "v0", "y0"]
    for name, val in zip(names, report.point):
        lines.append(f"{name} = {val:.17g}")
    for i, lam in enumerate(report.eigenvalues):
        lines.append(f"lambda_re_{i} = {lam.real:.17g}")
        lines.append(f"lambda_im_{i} = {lam.imag:.17g}")
    lines.append(f"class = {report.classification}")
    lines.append(f"residual = {report.residual_norm:.17g}")
    lines.append(f"feasible = {str(report.feasible).lower()}")
    return "\n".join(lines) + "\n"


def report_to_csv(report: EquilibriumReport) -> str:
    """Header and one data row, comma separated, 17 significant digits."""
    names = ["x0", "y0"] if report.point.size == 2 else ["x0", "u0", "v0", "y0"]
    head = names + [f"lambda_re_{i}" for i in range(report.eigenvalues.size)] \
        + [f"lambda_im_{i}" for i in range(report.eigenvalues.size)] \
        + ["class", "residual"]
    row = [format(v, ".17g") for v in report.point] \
        + [format(l.real, ".17g") for l in report.eigenvalues] \
        + [format(l.imag, ".17g") for l in report.eigenvalues] \
        + [report.classification, format(report.residual_norm, ".17g")]
    return ",".join(head) + "\n" + ",".join(row) + "\n"
