"""Critical manifolds of the fast equation and attraction diagnostics.

Setting the fast right-hand side to zero at frozen slow variables gives a
quadratic in the capillary level y whose positive root is the critical
manifold branch:

    y^2 + b*y + c = 0,   b = kp + C*k/((k+x)*F) - ell,
                         c = -kp*ell - kp*C*x/((k+x)*F)        (2-compartment)

with discriminant b^2 - 4c = b^2 + 4*kp*ell + 4*kp*C*x/((k+x)*F) > 0, so the
branch exists for every x > -k and F > 0, and since the root product c is
negative exactly one root is positive.  The branch is transversally
attractive: dg/dy = -F - C*kp/(kp+y)^2 < 0 (with C replaced by C+Ca in the
four-compartment system).  Trajectory-to-manifold distance is the empirical
handle on the attached slow manifold, which stays O(eps) from the critical
one after the fast transient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Params2D, Params4D, fast_nullcline_g_2d, fast_nullcline_g_4d
from .errors import AnalysisError
from .integrate import Trajectory

__all__ = [
    "ManifoldPoint",
    "phi_2d",
    "discriminant_2d",
    "critical_x_2d",
    "phi_4d",
    "attractiveness",
    "contraction_bound",
    "manifold_distance",
    "DistanceReport",
    "manifold_point",
    "slice_csv_2d",
    "slice_csv_4d",
]


def _f_at(F, t: float) -> float:
    f = F.eval(t) if hasattr(F, "eval") else float(F)
    if not f > 0:
        raise AnalysisError(f"stimulus must be positive on the manifold (F({t}) = {f})")
    return f


def _quad_coeffs_2d(x: float, f: float, p: Params2D):
    b = p.kp + p.c * p.k / ((p.k + x) * f) - p.ell
    c = -p.kp * p.ell - p.kp * p.c * x / ((p.k + x) * f)
    return b, c


def discriminant_2d(x: float, t: float, p: Params2D, F) -> float:
    """Discriminant of the critical-manifold quadratic; positive by structure."""
    f = _f_at(F, t)
    b, c = _quad_coeffs_2d(x, f, p)
    return b * b - 4.0 * c


def phi_2d(x: float, t: float, p: Params2D, F) -> float:
    """Nonnegative critical-manifold branch y = phi(x, t) of the 2-compartment system."""
    f = _f_at(F, t)
    b, c = _quad_coeffs_2d(x, f, p)
    return 0.5 * (-b + np.sqrt(b * b - 4.0 * c))


def critical_x_2d(y: float, F: float, p: Params2D) -> float:
    """Unique x on the critical curve at capillary level y (inverse of phi).

    Uses the exchanged-flux balance B(y) = C*y/(kp+y) - F*(ell-y); the
    intersection is x = k*B/(C-B).  Raises AnalysisError when B >= C (the
    curve has no finite intersection at this level); a negative B yields the
    (infeasible) negative solution and is returned as such.
    """
    B = p.c * y / (p.kp + y) - F * (p.ell - y)
    if B >= p.c:
        raise AnalysisError("no finite intersection: B(y) >= C")
    return p.k * B / (p.c - B)


def phi_4d(x: float, v: float, t: float, p: Params4D, F) -> float:
    """Nonnegative critical-manifold branch y = phi(x, v, t), 4-compartment system."""
    f = _f_at(F, t)
    X = x / (p.k + x)
    V = v / (p.ka + v)
    b = p.kp - p.ell + (p.c * (1.0 - X) + p.ca * (1.0 - V)) / f
    c = -p.kp * (p.ell + (p.c * X + p.ca * V) / f)
    return 0.5 * (-b + np.sqrt(b * b - 4.0 * c))


def attractiveness(x: float, y: float, t: float, p, F, v: float | None = None) -> float:
    """Fast-equation derivative dg/dy at (x, [v,] y); strictly negative.

    This is the transversal attraction rate of the critical manifold:
    -F(t) - C*kp/(kp+y)^2, with C+Ca in place of C when ``v`` is given.
    """
    f = F.eval(t) if hasattr(F, "eval") else float(F)
    ctot = p.c if v is None else p.c + p.ca
    return -f - ctot * p.kp / (p.kp + y) ** 2


@dataclass(frozen=True)
class ManifoldPoint:
    x: float
    v: float | None
    y: float
    discriminant: float
    g_prime_y: float


def manifold_point(x: float, t: float, p, F, v: float | None = None) -> ManifoldPoint:
    """Critical-manifold point above (x[, v]) at time t, with diagnostics."""
    if v is None:
        y = phi_2d(x, t, p, F)
        disc = discriminant_2d(x, t, p, F)
    else:
        f = _f_at(F, t)
        X = x / (p.k + x)
        V = v / (p.ka + v)
        b = p.kp - p.ell + (p.c * (1.0 - X) + p.ca * (1.0 - V)) / f
        c = -p.kp * (p.ell + (p.c * X + p.ca * V) / f)
        disc = b * b - 4.0 * c
        y = 0.5 * (-b + np.sqrt(disc))
    return ManifoldPoint(x, v, y, disc, attractiveness(x, y, t, p, F, v=v))


def contraction_bound(p, F, T: float, x_range, n_grid: int = 256,
                      v_range=None) -> tuple[float, float]:
    """Measured fast-contraction rate along the manifold over one period.

    Returns (mu_hat, floor): mu_hat is the minimum of -dg/dy over an
    (x[, v], t) grid on the manifold, floor = min_t F(t) is the parameter-free
    lower bound that remains valid for arbitrarily large y.
    """
    ts = np.linspace(0.0, T, n_grid)
    xs = np.linspace(*x_range, n_grid)
    fvals = np.array([F.eval(t) if hasattr(F, "eval") else float(F) for t in ts])
    mu = np.inf
    if v_range is None:
        for t, f in zip(ts, fvals):
            for x in xs:
                y = phi_2d(x, t, p, F)
                mu = min(mu, f + p.c * p.kp / (p.kp + y) ** 2)
    else:
        vs = np.linspace(*v_range, max(8, n_grid // 16))
        for t, f in zip(ts, fvals):
            for x in xs:
                for v in vs:
                    y = phi_4d(x, v, t, p, F)
                    mu = min(mu, f + (p.c + p.ca) * p.kp / (p.kp + y) ** 2)
    return float(mu), float(np.min(fvals))


@dataclass(frozen=True)
class DistanceReport:
    times: np.ndarray
    distances: np.ndarray
    t_transient: float
    max_post_transient: float


def manifold_distance(traj: Trajectory, F, p, mu_hat: float | None = None) -> DistanceReport:
    """Per-sample distance |y(t) - phi(x(t)[, v(t)], t)| along a trajectory.

    The summary value is the maximum over t >= t0 + t_transient with
    t_transient = 5*eps/mu_hat (five e-folds of the fast contraction).
    """
    four = traj.dim == 4
    if mu_hat is None:
        xr = (float(np.min(traj.ys[:, 0])), float(np.max(traj.ys[:, 0])) + 1e-9)
        vr = ((float(np.min(traj.ys[:, 2])), float(np.max(traj.ys[:, 2])) + 1e-9)
              if four else None)
        mu_hat, _ = contraction_bound(p, F, traj.t1 - traj.t0, xr, n_grid=64, v_range=vr)
    dists = np.empty(traj.ts.size)
    for i, (t, s) in enumerate(zip(traj.ts, traj.ys)):
        y_man = (phi_4d(s[0], s[2], t, p, F) if four else phi_2d(s[0], t, p, F))
        dists[i] = abs(s[-1] - y_man)
    t_tr = 5.0 * p.eps / mu_hat
    post = traj.ts >= traj.t0 + t_tr
    max_post = float(np.max(dists[post])) if np.any(post) else float("nan")
    return DistanceReport(traj.ts.copy(), dists, t_tr, max_post)


def slice_csv_2d(p: Params2D, F, t: float, xs) -> str:
    """Manifold slice as CSV text with columns x, phi, gprime_y."""
    lines = ["x,phi,gprime_y"]
    for x in xs:
        y = phi_2d(x, t, p, F)
        g = attractiveness(x, y, t, p, F)
        lines.append(f"{x:.17g},{y:.17g},{g:.17g}")
    return "\n".join(lines) + "\n"


def slice_csv_4d(p: Params4D, F, t: float, xs, vs) -> str:
    """Manifold slice as CSV text with columns x, v, phi, gprime_y."""
    lines = ["x,v,phi,gprime_y"]
    for x in xs:
        for v in vs:
            y = phi_4d(x, v, t, p, F)
            g = attractiveness(x, y, t, p, F, v=v)
            lines.append(f"{x:.17g},{v:.17g},{y:.17g},{g:.17g}")
    return "\n".join(lines) + "\n"


def residual_on_manifold_2d(x: float, t: float, p: Params2D, F) -> float:
    """g evaluated at (x, phi(x,t)); should vanish to rounding."""
    return fast_nullcline_g_2d(x, phi_2d(x, t, p, F), t, p, F)


def residual_on_manifold_4d(x: float, v: float, t: float, p: Params4D, F) -> float:
    """g evaluated at (x, v, phi(x,v,t)); should vanish to rounding."""
    return fast_nullcline_g_4d(x, v, phi_4d(x, v, t, p, F), t, p, F)
