# src/physics.py
"""Source terms, cost weight g, weight W and the linear cost for the experiments."""
import numpy as np

from src.grid_fields import CellField, NodalField, check_same_grid

DEFAULT_EPSILON = 1e-10
F1_SWITCH_R2 = 11.0


def _out(value):
    arr = np.asarray(value, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def eval_f1(x, y, eps=DEFAULT_EPSILON):
    """x^2+y^2-1 inside r^2 < 11, 10/(1+eps r^6) outside."""
    r2 = np.asarray(x, dtype=float) ** 2 + np.asarray(y, dtype=float) ** 2
    return _out(np.where(r2 < F1_SWITCH_R2, r2 - 1.0, 10.0 / (1.0 + eps * r2 ** 3)))


def eval_f2(x, y):
    """-10 on the disc around (2,-1), +10 on the disc around (-2,0.5), 0 elsewhere."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sink = (x - 2.0) ** 2 + (y + 1.0) ** 2 < 1.0
    source = (x + 2.0) ** 2 + (y - 0.5) ** 2 < 1.0
    return _out(np.where(sink, -10.0, np.where(source, 10.0, 0.0)))


def eval_g(x, y, eps=DEFAULT_EPSILON):
    r2 = np.asarray(x, dtype=float) ** 2 + np.asarray(y, dtype=float) ** 2
    return _out(1.0 / (1.0 + eps * r2 ** 3))


def eval_W(x, y):
    """Two-dimensional weight 1/((1+|x|) log(2+|x|)), diagnostics only."""
    r = np.hypot(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return _out(1.0 / ((1.0 + r) * np.log(2.0 + r)))


def sample_nodal(grid, fn) -> NodalField:
    """Evaluate fn(x, y) pointwise at the interior nodes."""
    x, y = grid.interior_xy()
    return NodalField(grid, np.broadcast_to(fn(x, y), x.shape))


def cost(grid, g: NodalField, u: NodalField) -> float:
    check_same_grid(grid, g, u)
    return float(grid.h ** 2 * (g.values @ u.values))


def window_cost(grid, g: NodalField, u: NodalField, half_width) -> float:
    """
    Cost restricted to the interior nodes of (-half_width, half_width)^2.
    Boxes of different M but equal h share these nodes, so optimal values
    can be compared across a sweep.
    """
    check_same_grid(grid, g, u)
    x, y = grid.interior_xy()
    inside = ((np.abs(x) < half_width - 0.5 * grid.h) & (np.abs(y) < half_width - 0.5 * grid.h)).ravel()
    return float(grid.h ** 2 * (g.values[inside] @ u.values[inside]))


def weighted_norm(grid, u: NodalField) -> float:
    check_same_grid(grid, u)
    x, y = grid.interior_xy()
    uw = u.as_array() * eval_W(x, y)
    return float(np.sqrt(grid.h ** 2 * np.sum(uw ** 2)))


def material_mask(mu: CellField, mu_max) -> np.ndarray:
    """Cells where the potential is below half the cap (the 'domain' of the state)."""
    return mu.values < 0.5 * mu_max


def material_area(grid, mu: CellField, mu_max) -> float:
    check_same_grid(grid, mu)
    return float(np.count_nonzero(material_mask(mu, mu_max)) * grid.h ** 2)


def material_centroid(grid, mu: CellField, mu_max):
    check_same_grid(grid, mu)
    mask = material_mask(mu, mu_max).reshape(grid.n, grid.n)
    if not mask.any():
        return None
    x, y = grid.cell_xy()
    return float(x[mask].mean()), float(y[mask].mean())
