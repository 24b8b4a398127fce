# src/kkt.py
"""
First-order optimality check at a candidate potential.

(up)_c is the cell mean of u*p, node_pair_to_cell(u, p) / h^2: the same
quadrature the gradient uses, so the residuals vanish exactly at a fixed
point of the projected gradient iteration.
"""
from dataclasses import asdict, dataclass

import numpy as np

from src.constraint import ExpPsi, capacity_Psi, c_psi, psi_prime
from src.grid_fields import check_same_grid, node_pair_to_cell

ACTIVE_THRESHOLD = 1e-9
SLACK_TOL = 1e-8


@dataclass(frozen=True)
class KKTReport:
    multiplier: float
    psi: float
    complementarity: float
    stationarity: float
    inequality: float
    cap_set: float
    active_cells: int
    lower_cells: int
    cap_cells: int

    def to_record(self) -> str:
        """Flat key=value text, one pair per line."""
        return "\n".join(f"{k}={v!r}" for k, v in asdict(self).items()) + "\n"


def cell_up(grid, u, p) -> np.ndarray:
    return node_pair_to_cell(grid, u, p).values / grid.h ** 2


def _partition(spec, mu):
    thr = ACTIVE_THRESHOLD * spec.mu_max
    nu = spec.nu.values
    lower = mu <= nu + thr
    cap = mu >= spec.mu_max - thr
    active = ~lower & ~cap
    return active, lower, cap


def estimate_multiplier(grid, spec, mu, u, p) -> float:
    """Least-squares fit of up = lam * psi'(mu) over the active cells, clamped at 0."""
    check_same_grid(grid, mu, u, p)
    if capacity_Psi(grid, spec, mu) < 1.0 - SLACK_TOL:
        return 0.0
    active, _, _ = _partition(spec, mu.values)
    if not active.any():
        return 0.0
    up = cell_up(grid, u, p)[active]
    dpsi = np.asarray(psi_prime(spec, mu.values[active]), dtype=float)
    denom = float(dpsi @ dpsi)
    if denom == 0.0:
        return 0.0
    return max(0.0, float(up @ dpsi) / denom)


def kkt_report(grid, spec, mu, u, p) -> KKTReport:
    check_same_grid(grid, mu, u, p)
    lam = estimate_multiplier(grid, spec, mu, u, p)
    psi = capacity_Psi(grid, spec, mu)
    up = cell_up(grid, u, p)
    dpsi = np.asarray(psi_prime(spec, mu.values), dtype=float).reshape(-1)
    active, lower, cap = _partition(spec, mu.values)

    scale = float(np.max(np.abs(up))) if up.size else 0.0
    scale = scale if scale > 0 else 1.0

    stationarity = float(np.max(np.abs(lam * dpsi[active] - up[active]))) / scale if active.any() else 0.0
    inequality = float(np.max(np.maximum(up[lower] - lam * dpsi[lower], 0.0))) / scale if lower.any() else 0.0
    cap_set = 0.0
    # with C_psi = 0 the singular-part condition lam*C_psi >= up reads up <= 0 on the cap cells
    if isinstance(spec.variant, ExpPsi) or c_psi(spec) == 0.0:
        cap_set = float(np.max(np.maximum(up[cap], 0.0))) / scale if cap.any() else 0.0

    return KKTReport(
        multiplier=lam,
        psi=psi,
        complementarity=abs(lam * (psi - 1.0)),
        stationarity=stationarity,
        inequality=inequality,
        cap_set=cap_set,
        active_cells=int(active.sum()),
        lower_cells=int(lower.sum()),
        cap_cells=int(cap.sum()),
    )
