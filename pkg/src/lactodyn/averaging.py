"""Averaging of the periodically forced slow flow and shooting refinement.

On the attractive critical manifold the slow equation reduces to
dx/dt = epsp * f(x, phi(x,t), t) with T-periodic inputs.  The pipeline is:

a. certify the manifold contraction rate (mu > 0 uniformly on the operating
   window);
b. certify that the linearized averaged flow admits no nonzero T-periodic
   solution -- in the scalar case, that the integral of
   A(t) = epsp * [Jx - a(x) * F(t) / (F(t) + b(phi))] over one period is
   nonzero (a, b the saturation derivatives on either side);
c. find an isolated root x0 of the averaged field
   fbar(x) = Jbar(x) + ell*Fbar - (1/T) * int F(t) phi(x,t) dt.

The root predicts a T-periodic orbit with initial data (x0, phi(x0, 0)); a
Newton iteration on the period map (monodromy from variational integration)
refines it to a fixed point and reports its Floquet multipliers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .dynamics import Params2D, Params4D, jacobian_2d, rhs_2d, _dsat
from .errors import AnalysisError
from .integrate import IntegratorConfig, collect_corners, integrate
from .manifold import contraction_bound, phi_2d, phi_4d
from .signals import Control, as_control

__all__ = [
    "A_of_t",
    "check_condition_b",
    "condition_b_matrix_4d",
    "check_condition_b_4d",
    "averaged_rhs",
    "find_averaged_root",
    "AveragingReport",
    "predict_periodic_orbit",
    "PeriodicOrbitReport",
    "period_map",
    "refine_periodic_orbit",
    "report_to_kv",
    "report_to_json",
]

# default tolerances of the refinement chain
REFINE_CONFIG = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13,
                                 stiffness_mode="explicit-adaptive")
_QUAD_OPTS = dict(limit=400, epsabs=1e-14, epsrel=1e-12)


def A_of_t(x: float, t: float, p: Params2D, F, j_x: float = 0.0) -> float:
    """Slow variational coefficient along the manifold (scalar case).

    Equals d/dx of the reduced slow field at frozen t; strictly negative
    whenever j_x <= 0.
    """
    f = F.eval(t) if hasattr(F, "eval") else float(F)
    y = phi_2d(x, t, p, F)
    a = p.c * _dsat(x, p.k)
    b = p.c * _dsat(y, p.kp)
    return p.epsp * (j_x - a * f / (f + b))


def _corners(F, T: float, extra=()):
    pts = collect_corners([F, *extra], 0.0, T)
    return [float(c) for c in pts if 0.0 < c < T]


def check_condition_b(x_ref: float, T: float, p: Params2D, F,
                      j_x: float = 0.0, threshold: float = 1e-8):
    """Integral of A(t) over one period and the no-periodic-solution verdict.

    The scalar linear equation xi' = A(t) xi has a nonzero T-periodic solution
    exactly when the integral vanishes; the check passes when the integral is
    nonzero beyond ``threshold``.
    """
    val, _ = quad(lambda t: A_of_t(x_ref, t, p, F, j_x), 0.0, T,
                  points=_corners(F, T), **_QUAD_OPTS)
    return float(val), bool(abs(val) > threshold)


def condition_b_matrix_4d(slow, t: float, p: Params4D, F,
                          j_x=(0.0, 0.0, 0.0)) -> np.ndarray:
    """3x3 variational matrix of the reduced slow flow (x, u, v) on y = phi."""
    x, u, v = slow
    y = phi_4d(x, v, t, p, F)
    f = F.eval(t) if hasattr(F, "eval") else float(F)
    dx = _dsat(x, p.k)
    du = _dsat(u, p.kn)
    dv = _dsat(v, p.ka)
    dy = _dsat(y, p.kp)
    fx = np.array([
        [j_x[0] - (p.c1 + p.c2 + p.c) * dx, p.c1 * du, p.c2 * dv],
        [j_x[1] + p.c1 * dx, -p.c1 * du, 0.0],
        [j_x[2] + p.c2 * dx, 0.0, -(p.c2 + p.ca) * dv],
    ])
    fy = np.array([p.c * dy, 0.0, p.ca * dy])
    gx = np.array([p.c * dx, 0.0, p.ca * dv])
    gy = -f - (p.c + p.ca) * dy
    return p.epsp * (fx - np.outer(fy, gx) / gy)


def check_condition_b_4d(slow, T: float, p: Params4D, F, j_x=(0.0, 0.0, 0.0),
                         threshold: float = 1e-6):
    """Monodromy criterion for the 3-d slow block: no eigenvalue within
    ``threshold`` of 1."""
    def rhs(t, psi):
        A = condition_b_matrix_4d(slow, t, p, F, j_x)
        return (A @ psi.reshape(3, 3)).ravel()

    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12,
                           stiffness_mode="explicit-adaptive")
    traj = integrate(rhs, 0.0, T, np.eye(3).ravel(), cfg,
                     corners=_corners(F, T))
    mono = traj.ys[-1].reshape(3, 3)
    eigs = np.linalg.eigvals(mono)
    dist = float(np.min(np.abs(eigs - 1.0)))
    return eigs, dist > threshold


def averaged_rhs(x: float, T: float, p: Params2D, F, J) -> float:
    """Averaged slow field fbar(x) (without the epsp prefactor)."""
    J = as_control(J)
    jbar = J.signal.mean(T) + J.coupling * (x - J.x_ref)
    fbar_stim = F.mean(T)
    int_fphi, _ = quad(lambda t: (F.eval(t)) * phi_2d(x, t, p, F), 0.0, T,
                       points=_corners(F, T), **_QUAD_OPTS)
    return jbar + p.ell * fbar_stim - int_fphi / T


def find_averaged_root(T: float, p: Params2D, F, J, interval,
                       n_scan: int = 256) -> tuple[float, float]:
    """Bracketed root of fbar on ``interval``, secant-polished.

    Returns (x0, isolation margin |fbar'(x0)|).  Raises AnalysisError when the
    scan grid shows no sign change, more than one bracket (all are reported),
    or the root is non-isolated (margin below 1e-8).
    """
    lo, hi = interval
    xs = np.linspace(lo, hi, n_scan)
    vals = np.array([averaged_rhs(x, T, p, F, J) for x in xs])
    flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if flips.size == 0:
        raise AnalysisError(
            f"no sign change of the averaged field on [{lo}, {hi}]")
    if flips.size > 1:
        brackets = ", ".join(f"[{xs[i]:.6g}, {xs[i+1]:.6g}]" for i in flips)
        raise AnalysisError(
            f"multiple sign changes of the averaged field: brackets {brackets}")
    a, b = xs[flips[0]], xs[flips[0] + 1]
    fa, fb = vals[flips[0]], vals[flips[0] + 1]
    x_prev, f_prev = a, fa
    x_cur, f_cur = b, fb
    for _ in range(100):
        if abs(f_cur) <= 1e-12:
            break
        x_next = x_cur - f_cur * (x_cur - x_prev) / (f_cur - f_prev)
        if not (min(a, b) - 1e-6 <= x_next <= max(a, b) + 1e-6):
            x_next = 0.5 * (a + b)   # fall back to bisection inside the bracket
        f_next = averaged_rhs(x_next, T, p, F, J)
        if np.sign(f_next) == np.sign(fa):
            a = x_next
        else:
            b = x_next
        x_prev, f_prev, x_cur, f_cur = x_cur, f_cur, x_next, f_next
    else:
        raise AnalysisError("secant polish of the averaged root did not converge")
    h = 1e-6 * (1.0 + abs(x_cur))
    margin = abs(averaged_rhs(x_cur + h, T, p, F, J)
                 - averaged_rhs(x_cur - h, T, p, F, J)) / (2 * h)
    if margin < 1e-8:
        raise AnalysisError(f"averaged root is not isolated (|fbar'| = {margin:.3e})")
    return float(x_cur), float(margin)


@dataclass(frozen=True)
class AveragingReport:
    mu_bound: float                  # measured contraction rate, > 0
    mu_floor: float                  # min_t F(t), the analytic floor
    condition_b_integral: float
    x0_avg: float
    isolation_margin: float
    predicted_initial: np.ndarray    # (x0, phi(x0, 0))
    defect: float                    # |P(s0) - s0| of the true period map


def _flow_rhs(p, F, J):
    def rhs(t, s):
        return rhs_2d(t, s, p, F=F, J=J)
    return rhs


def _flow_jac(p, F, J):
    j_x = J.coupling if isinstance(J, Control) else 0.0

    def jac(t, s):
        return jacobian_2d(s, p, j_x=j_x, f_val=F.eval(t))
    return jac


def period_map(s, T: float, p: Params2D, F, J,
               cfg: IntegratorConfig = REFINE_CONFIG, with_monodromy: bool = False):
    """Flow map over one forcing period, optionally with its derivative.

    The monodromy matrix is integrated variationally (the 2x2 tangent block
    rides along with the state).
    """
    J = as_control(J)
    corners = collect_corners([F, J], 0.0, T)
    s = np.asarray(s, dtype=float)
    if not with_monodromy:
        traj = integrate(_flow_rhs(p, F, J), 0.0, T, s, cfg,
                         jac=_flow_jac(p, F, J), corners=corners)
        return traj.ys[-1]

    j_x = J.coupling

    def rhs_aug(t, q):
        state = q[:2]
        M = q[2:].reshape(2, 2)
        ds = rhs_2d(t, state, p, F=F, J=J)
        dM = jacobian_2d(state, p, j_x=j_x, f_val=F.eval(t)) @ M
        return np.concatenate([ds, dM.ravel()])

    q0 = np.concatenate([s, np.eye(2).ravel()])
    traj = integrate(rhs_aug, 0.0, T, q0, cfg, corners=corners)
    qT = traj.ys[-1]
    return qT[:2], qT[2:].reshape(2, 2)


def predict_periodic_orbit(T: float, p: Params2D, F, J,
                           search=(1e-3, 50.0),
                           cfg: IntegratorConfig = REFINE_CONFIG) -> AveragingReport:
    """Run the averaging pipeline and report the predicted periodic initial data.

    Checks the three hypotheses in order (contraction, nondegenerate
    linearized average, isolated averaged root); any failure raises
    AnalysisError naming the condition.  The report carries the period-map
    defect of the true flow at the prediction.
    """
    J = as_control(J)
    x0, margin = find_averaged_root(T, p, F, J, search)   # condition c
    mu_hat, mu_floor = contraction_bound(
        p, F, T, (max(1e-6, 0.5 * x0), 1.5 * x0), n_grid=128)
    if not mu_hat > 0:
        raise AnalysisError("condition a failed: manifold not uniformly attractive")
    b_int, b_ok = check_condition_b(x0, T, p, F, j_x=J.coupling)
    if not b_ok:
        raise AnalysisError(
            f"condition b failed: integral of A(t) is {b_int:.3e} (within 1e-8 of 0)")
    s0 = np.array([x0, phi_2d(x0, 0.0, p, F)])
    sT = period_map(s0, T, p, F, J, cfg)
    defect = float(np.linalg.norm(sT - s0))
    return AveragingReport(mu_hat, mu_floor, b_int, x0, margin, s0, defect)


@dataclass(frozen=True)
class PeriodicOrbitReport:
    fixed_point: np.ndarray
    initial_defect: float            # |P(s)-s| at the starting guess
    defect: float                    # |P(s*)-s*| at the returned point
    floquet_multipliers: np.ndarray
    iterations: int
    stable: bool                     # claimed only when max |multiplier| < 1


def refine_periodic_orbit(predicted_initial, T: float, p: Params2D, F, J,
                          cfg: IntegratorConfig = REFINE_CONFIG,
                          tol: float = 1e-10, max_iter: int = 50,
                          monodromy: str = "variational") -> PeriodicOrbitReport:
    """Newton iteration on the period map from the averaged prediction.

    ``monodromy`` selects the derivative: "variational" integrates the tangent
    block, "fd" uses forward differences with step 1e-7*(1+|s|).  On
    non-convergence within ``max_iter`` iterations an AnalysisError is raised;
    an orbit with a multiplier on or outside the unit circle is returned with
    ``stable=False``.
    """
    J = as_control(J)
    s = np.asarray(predicted_initial, dtype=float).copy()

    def map_and_deriv(s):
        if monodromy == "variational":
            return period_map(s, T, p, F, J, cfg, with_monodromy=True)
        Ps = period_map(s, T, p, F, J, cfg)
        M = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * (1.0 + abs(s[j]))
            sp = s.copy()
            sp[j] += h
            M[:, j] = (period_map(sp, T, p, F, J, cfg) - Ps) / h
        return Ps, M

    Ps, M = map_and_deriv(s)
    r = Ps - s
    initial_defect = float(np.linalg.norm(r))
    defect = initial_defect
    for it in range(1, max_iter + 1):
        if defect <= tol:
            mult = np.linalg.eigvals(M)
            return PeriodicOrbitReport(s, initial_defect, defect, mult, it - 1,
                                       stable=bool(np.max(np.abs(mult)) < 1.0))
        try:
            delta = np.linalg.solve(M - np.eye(2), -r)
        except np.linalg.LinAlgError as exc:
            raise AnalysisError(f"singular period-map Jacobian: {exc}") from exc
        step = 1.0
        for _ in range(8):
            s_try = s + step * delta
            Ps_try, M_try = map_and_deriv(s_try)
            r_try = Ps_try - s_try
            if np.linalg.norm(r_try) < defect:
                break
            step *= 0.5
        s, Ps, M, r = s_try, Ps_try, M_try, r_try
        defect = float(np.linalg.norm(r))
    if defect <= tol:
        mult = np.linalg.eigvals(M)
        return PeriodicOrbitReport(s, initial_defect, defect, mult, max_iter,
                                   stable=bool(np.max(np.abs(mult)) < 1.0))
    raise AnalysisError(
        f"period-map Newton did not converge in {max_iter} iterations "
        f"(defect {defect:.3e})")


def report_to_kv(report) -> str:
    """Flat key=value text for an AveragingReport or PeriodicOrbitReport."""
    lines = []
    for key, val in _report_dict(report).items():
        if isinstance(val, list):
            for i, item in enumerate(val):
                lines.append(f"{key}_{i} = {item}")
        else:
            lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def report_to_json(report) -> str:
    """Structured single-block serialization with stable key names."""
    return json.dumps(_report_dict(report), sort_keys=True, indent=2) + "\n"


def _report_dict(report) -> dict:
    if isinstance(report, AveragingReport):
        return {
            "mu_bound": report.mu_bound,
            "mu_floor": report.mu_floor,
            "condition_b_integral": report.condition_b_integral,
            "x0_avg": report.x0_avg,
            "isolation_margin": report.isolation_margin,
            "predicted_x": float(report.predicted_initial[0]),
            "predicted_y": float(report.predicted_initial[1]),
            "defect": report.defect,
        }
    if isinstance(report, PeriodicOrbitReport):
        return {
            "fixed_x": float(report.fixed_point[0]),
            "fixed_y": float(report.fixed_point[1]),
            "initial_defect": report.initial_defect,
            "defect": report.defect,
            "multiplier_abs": [float(abs(m)) for m in report.floquet_multipliers],
            "multiplier_re": [float(m.real) for m in report.floquet_multipliers],
            "multiplier_im": [float(m.imag) for m in report.floquet_multipliers],
            "iterations": report.iterations,
            "stable": report.stable,
        }
    raise TypeError(f"unknown report type {type(report)!r}")
