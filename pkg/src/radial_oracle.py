# src/radial_oracle.py
"""
Independent 1D oracle for the limit shape problem with f = r^2 - 1 on a
centered disc B(0, R) (inner branch of f1):

    -(1/r)(r u')' = r^2 - 1 on (0, R),  u'(0) = 0,  u(R) = 0.

Closed form u(r) = -(R^2 - r^2)/4 + (R^4 - r^4)/16, so u <= 0 for R <= sqrt(2)
and J(R) = 2*pi * int_0^R u r dr = pi (R^6/24 - R^4/8), minimal at R = sqrt(2).
"""
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial
from scipy.integrate import simpson

from src.errors import InvalidArgumentError

R_INNER = math.sqrt(11.0)
R_UNCONSTRAINED = math.sqrt(2.0)
SCAN_POINTS = 2000


@dataclass(frozen=True, eq=False)
class RadialProfile:
    R: float
    r: np.ndarray
    u: np.ndarray
    J: float


def _profile_polynomial(R):
    # coefficients in powers of r
    return Polynomial([-R ** 2 / 4.0 + R ** 4 / 16.0, 0.0, 0.25, 0.0, -1.0 / 16.0])


def radial_state_solve(R, n_r=64) -> RadialProfile:
    if not 0 < R <= R_INNER:
        raise InvalidArgumentError(f"R must lie in (0, sqrt(11)], got {R}")
    if int(n_r) != n_r or n_r < 16:
        raise InvalidArgumentError(f"n_r must be an integer >= 16, got {n_r}")
    r = np.linspace(0.0, R, int(n_r) + 1)
    u = _profile_polynomial(R)(r)
    u[-1] = 0.0
    J = 2.0 * math.pi * float(simpson(u * r, x=r))
    return RadialProfile(R=float(R), r=r, u=u, J=J)


def radial_residual(profile: RadialProfile) -> float:
    """Max |-(1/r)(r u')' - (r^2 - 1)| over interior grid points, by exact polynomial calculus."""
    poly = _profile_polynomial(profile.R)
    du = poly.deriv()
    r = profile.r[1:-1]
    # (1/r)(r u')' = u'' + u'/r
    lap = poly.deriv(2)(r) + du(r) / r
    return float(np.max(np.abs(-lap - (r ** 2 - 1.0)))) if r.size else 0.0


def closed_form_J(R) -> float:
    return math.pi * (R ** 6 / 24.0 - R ** 4 / 8.0)


def _scan(lo, hi, n_r):
    """J on SCAN_POINTS radii at once, same closed form and quadrature as radial_state_solve."""
    radii = np.linspace(lo, hi, SCAN_POINTS)
    R = radii[:, None]
    r = R * np.linspace(0.0, 1.0, n_r + 1)[None, :]
    u = -(R ** 2 - r ** 2) / 4.0 + (R ** 4 - r ** 4) / 16.0
    values = 2.0 * math.pi * simpson(u * r, x=r, axis=1)
    return radii, np.where(radii > 0, values, 0.0)


def radial_optimal_radius(m, n_r=32):
    """
    Returns (R_formula, R_scan, resolution). R_formula = min(sqrt(m/pi), sqrt(2));
    R_scan is the argmin of J over admissible radii (pi R^2 <= m), from a
    coarse scan followed by a refinement around the coarse minimum.
    """
    if not m > 0:
        raise InvalidArgumentError(f"m must be positive, got {m}")
    formula = min(math.sqrt(m / math.pi), R_UNCONSTRAINED)

    top = min(math.sqrt(m / math.pi), R_INNER)
    radii, values = _scan(0.0, top, n_r)
    i = int(np.argmin(values))
    lo = radii[max(i - 1, 0)]
    hi = radii[min(i + 1, radii.size - 1)]
    fine, fine_values = _scan(lo, hi, n_r)
    j = int(np.argmin(fine_values))
    resolution = float(fine[1] - fine[0])
    return formula, float(fine[j]), resolution


def radial_table(m_values, n_r=32) -> pd.DataFrame:
    rows = []
    for m in m_values:
        formula, scan, resolution = radial_optimal_radius(m, n_r)
        rows.append({
            "m": float(m),
            "R": formula,
            "R_scan": scan,
            "resolution": resolution,
            "area": math.pi * formula ** 2,
            "J": closed_form_J(formula),
            "saturated": math.pi * formula ** 2 >= m * (1 - 1e-12),
        })
    return pd.DataFrame(rows, columns=["m", "R", "R_scan", "resolution", "area", "J", "saturated"])
