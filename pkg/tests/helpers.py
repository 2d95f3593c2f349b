"""Shared test utilities: random feasible parameter draws and the
multi-start Newton oracle for stationary points."""

import numpy as np

from lactodyn.dynamics import Params2D, Params4D
from lactodyn.equilibria import newton_equilibrium


def draw_params_2d(rng, lo=1e-2, hi=1e2):
    vals = np.exp(rng.uniform(np.log(lo), np.log(hi), 4))
    return Params2D(c=vals[0], k=vals[1], kp=vals[2], ell=vals[3],
                    eps=np.exp(rng.uniform(np.log(1e-2), np.log(0.4))),
                    epsp=np.exp(rng.uniform(np.log(1e-2), np.log(0.4))))


def draw_params_4d(rng, lo=1e-2, hi=1e2):
    vals = np.exp(rng.uniform(np.log(lo), np.log(hi), 9))
    return Params4D(c=vals[0], k=vals[1], kp=vals[2], ell=vals[3],
                    c1=vals[4], c2=vals[5], ca=vals[6], kn=vals[7], ka=vals[8],
                    eps=0.05, epsp=0.1)


def fraction_seeds(scales, rng, n):
    """Scale-aware random starts: each coordinate is a random saturation
    fraction of its half-saturation constant, so seeds stay in the meaningful
    domain for any parameter magnitudes."""
    out = []
    for _ in range(n):
        fr = rng.uniform(0.05, 0.95, len(scales))
        out.append(np.array(scales) * fr / (1.0 - fr))
    return out


def multi_start_newton(fun, jac, seeds, tol=1e-12):
    """Independent oracle: best damped-Newton solution over many starts."""
    best = None
    best_res = np.inf
    for s0 in seeds:
        try:
            sol = newton_equilibrium(fun, jac, s0, tol=tol)
        except Exception:
            continue
        res = np.linalg.norm(fun(sol))
        if res < best_res:
            best, best_res = sol, res
        if best_res <= tol:
            break
    return best, best_res
