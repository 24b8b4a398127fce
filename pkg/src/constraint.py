# src/constraint.py
"""
Volume functional Psi(mu) = h^2 * sum_c psi(mu_c), its derivative, and the
Euclidean projection onto {nu <= mu <= mu_max, Psi(mu) <= 1}.
"""
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.errors import InfeasibleProblemError, InvalidArgumentError
from src.grid_fields import CellField, check_same_grid, integrate_cells

DEFAULT_ALPHA = 3e-4
DEFAULT_MU_MAX = 15000.0
PROJECTION_TOL = 1e-10
NEWTON_MAX_ITER = 100
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class ExpPsi:
    """psi(s) = (1/m) exp(-alpha s); C_psi = 0.

    With cap_as_infinity the cap cells stand for the infinite part of the
    measure, which is free: psi is shifted and rescaled so psi(0) = 1/m and
    psi(mu_max) = 0.
    """

    m: float
    alpha: float = DEFAULT_ALPHA
    cap_as_infinity: bool = False


@dataclass(frozen=True)
class SquarePsi:
    """psi(s) = s^2, C_psi = +inf. Psi is reported relative to the budget."""

    budget: float


@dataclass(frozen=True)
class CustomPsi:
    value: Callable
    prime: Callable
    c_psi: float = math.inf


@dataclass(frozen=True, eq=False)
class PsiSpec:
    variant: object
    nu: CellField
    mu_max: float = DEFAULT_MU_MAX

    def __post_init__(self):
        v = self.variant
        if not self.mu_max > 0:
            raise InvalidArgumentError(f"mu_max must be positive, got {self.mu_max}")
        if isinstance(v, ExpPsi):
            if not (v.m > 0 and v.alpha > 0):
                raise InvalidArgumentError("Exp psi needs m > 0 and alpha > 0")
        elif isinstance(v, SquarePsi):
            if not v.budget > 0:
                raise InvalidArgumentError("Square psi needs budget > 0")
            if not np.any(self.nu.values > 0):
                # psi(0) = 0 in d = 2: a nonzero lower bound keeps the problem well posed
                raise InvalidArgumentError("Square psi requires a lower bound nu that is not identically zero")
        elif not isinstance(v, CustomPsi):
            raise InvalidArgumentError(f"unknown psi variant {v!r}")
        if np.any(self.nu.values < 0) or np.any(self.nu.values > self.mu_max):
            raise InvalidArgumentError("nu must satisfy 0 <= nu <= mu_max")

    @property
    def grid(self):
        return self.nu.grid


def _exp_shift(spec):
    """(floor, scale) so that psi = scale * (exp(-alpha s) - floor) / m."""
    v = spec.variant
    if not v.cap_as_infinity:
        return 0.0, 1.0
    floor = math.exp(-v.alpha * spec.mu_max)
    return floor, 1.0 / (1.0 - floor)


def _check_nonnegative(s):
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0):
        raise InvalidArgumentError("psi is defined for s >= 0 only")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def psi_value(spec: PsiSpec, s):
    s = _check_nonnegative(s)
    v = spec.variant
    if isinstance(v, ExpPsi):
        floor, scale = _exp_shift(spec)
        return _out(scale * (np.exp(-v.alpha * s) - floor) / v.m)
    if isinstance(v, SquarePsi):
        return _out(s * s)
    return _out(np.asarray(v.value(s), dtype=float))


def psi_prime(spec: PsiSpec, s):
    s = _check_nonnegative(s)
    v = spec.variant
    if isinstance(v, ExpPsi):
        _, scale = _exp_shift(spec)
        return _out(-scale * v.alpha * np.exp(-v.alpha * s) / v.m)
    if isinstance(v, SquarePsi):
        return _out(2.0 * s)
    return _out(np.asarray(v.prime(s), dtype=float))


def c_psi(spec: PsiSpec) -> float:
    """Recession slope lim psi(t)/t."""
    v = spec.variant
    if isinstance(v, ExpPsi):
        return 0.0
    if isinstance(v, SquarePsi):
        return math.inf
    return float(v.c_psi)


def _normalizer(spec):
    return spec.variant.budget if isinstance(spec.variant, SquarePsi) else 1.0


def capacity_Psi(grid, spec: PsiSpec, mu: CellField) -> float:
    check_same_grid(grid, mu)
    values = np.asarray(psi_value(spec, mu.values), dtype=float).reshape(-1)
    return integrate_cells(grid, CellField(grid, values)) / _normalizer(spec)


def capacity_gradient(grid, spec: PsiSpec, mu: CellField) -> CellField:
    """d Psi / d mu_c = h^2 psi'(mu_c) / normalizer."""
    check_same_grid(grid, mu)
    prime = np.asarray(psi_prime(spec, mu.values), dtype=float).reshape(-1)
    return CellField(grid, grid.h ** 2 * prime / _normalizer(spec))


def solve_multiplier(excess, tol=PROJECTION_TOL, max_doublings=MAX_DOUBLINGS, max_bisections=200):
    """
    Smallest lam >= 0 with excess(lam) <= 0, for a continuous nonincreasing
    excess. Returns the upper end of the final bracket, so excess(result) <= 0
    and, when the constraint is active, excess(result) >= -tol.
    """
    if excess(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    e_hi = excess(hi)
    doublings = 0
    while e_hi > 0:
        doublings += 1
        if doublings > max_doublings:
            raise InfeasibleProblemError(
                f"no multiplier up to 2^{max_doublings} satisfies the budget"
            )
        lo, hi = hi, 2.0 * hi
        e_hi = excess(hi)
    for _ in range(max_bisections):
        if e_hi >= -tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        e_mid = excess(mid)
        if e_mid > 0:
            lo = mid
        else:
            hi, e_hi = mid, e_mid
    return hi


def _exp_minimizer(spec, w, lam, lo, hi):
    """Per-cell root of mu - w - lam*kappa*exp(-alpha mu) = 0, clipped to [lo, hi]."""
    v = spec.variant
    _, scale = _exp_shift(spec)
    k = lam * scale * v.alpha / v.m
    a = v.alpha
    if k == 0.0:
        return np.clip(w, lo, hi)

    out = lo.copy()
    # root <= lo: the lower bound binds
    pinned = lo - w - k * np.exp(-a * lo) >= 0
    idx = np.flatnonzero(~pinned)
    if idx.size == 0:
        return out
    wi = w[idx]
    x = np.maximum(wi, lo[idx])
    # increasing concave residual: Newton from the left climbs monotonically to the root
    for _ in range(NEWTON_MAX_ITER):
        e = np.exp(-a * x)
        x_new = np.minimum(x - (x - wi - k * e) / (1.0 + a * k * e), hi)
        moved = np.max(np.abs(x_new - x))
        x = x_new
        if moved <= 1e-12 * (1.0 + hi):
            break
    out[idx] = np.clip(x, lo[idx], hi)
    return out


def _custom_minimizer(spec, w, lam, lo, hi):
    """Per-cell bisection on mu - w + lam*psi'(mu), increasing for convex psi."""
    prime = spec.variant.prime
    left = np.array(lo, dtype=float)
    right = np.full_like(left, hi)
    phi_lo = left - w + lam * np.asarray(prime(left), dtype=float)
    phi_hi = right - w + lam * np.asarray(prime(right), dtype=float)
    for _ in range(100):
        mid = 0.5 * (left + right)
        phi = mid - w + lam * np.asarray(prime(mid), dtype=float)
        go_right = phi < 0
        left = np.where(go_right, mid, left)
        right = np.where(go_right, right, mid)
    out = 0.5 * (left + right)
    out = np.where(phi_lo >= 0, lo, out)
    return np.where(phi_hi <= 0, hi, out)


def _cell_minimizer(spec, w, lam, lo, hi):
    """argmin over [lo, hi] of 0.5 (mu - w)^2 + lam * psi_normalized(mu), per cell."""
    v = spec.variant
    if isinstance(v, SquarePsi):
        return np.clip(w / (1.0 + 2.0 * lam / v.budget), lo, hi)
    if isinstance(v, ExpPsi):
        return _exp_minimizer(spec, w, lam, lo, hi)
    return _custom_minimizer(spec, w, lam, lo, hi)


def project_feasible(grid, spec: PsiSpec, w: CellField, tol=PROJECTION_TOL) -> CellField:
    check_same_grid(grid, w, spec.nu)
    lo = np.array(spec.nu.values)
    hi = float(spec.mu_max)
    wv = np.array(w.values)

    boxed = CellField(grid, np.clip(wv, lo, hi))
    if capacity_Psi(grid, spec, boxed) <= 1.0:
        return boxed

    cheapest = None
    if isinstance(spec.variant, ExpPsi):
        cheapest = CellField.constant(grid, hi)
    elif isinstance(spec.variant, SquarePsi):
        cheapest = spec.nu
    if cheapest is not None and capacity_Psi(grid, spec, cheapest) > 1.0:
        raise InfeasibleProblemError(
            f"budget cannot be met: Psi = {capacity_Psi(grid, spec, cheapest):.6g} > 1 "
            "at the least costly admissible potential"
        )

    def excess(lam):
        mu = _cell_minimizer(spec, wv, lam, lo, hi)
        return capacity_Psi(grid, spec, CellField(grid, mu)) - 1.0

    lam = solve_multiplier(excess, tol=tol)
    return CellField(grid, _cell_minimizer(spec, wv, lam, lo, hi))
